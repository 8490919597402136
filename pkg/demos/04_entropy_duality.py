"""Maximum entropy duals of exponential sum minimization.

For a moment target theta inside the exponent hull, the shifted problem
inf_y sum_j d_j exp(<y, u_j - theta>) has the dual

    sup { sum_j p_j log(d_j / p_j) : p a probability vector, sum_j p_j u_j = theta }

and the optimal p is a Gibbs distribution read off the primal minimizer.
"""

import numpy as np

from capax import InfeasibleMoment, diag_problem, entropy_dual, kl_divergence, trace_channel

prob = diag_problem(trace_channel(2, 2))
print("exponents:")
print(prob.u)
print("weights:", prob.d)

# Centered target: the barycentric moment of this problem.
p, value = entropy_dual(prob, [0.0, 0.0])
print("theta = 0:")
print("  dual value:", value, "(log 4 =", np.log(4.0), ")")
print("  gibbs p   :", p)
print("  moment    :", p @ prob.u)

# Moving theta toward a vertex concentrates the Gibbs weights on it.
for s in (0.5, 0.9, 0.99):
    target = s * prob.u[0]
    p, value = entropy_dual(prob, target)
    print(f"theta={s:4.2f}*u0: value={value: .6f} p={np.round(p, 4)}")

# Outside the hull there is no feasible p at all.
try:
    entropy_dual(prob, 10.0 * prob.u[0])
except InfeasibleMoment as exc:
    print("far target correctly rejected:", exc)

# kl_divergence is the building block: D(p || d) with support checking.
p = np.array([0.25, 0.5, 0.25])
print("D(p||d) =", kl_divergence(p, prob.d), " -sum p log(d/p) =",
      -float(np.sum(p * np.log(prob.d / p))))
