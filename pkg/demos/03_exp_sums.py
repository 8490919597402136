# Minimizing weighted exponential sums Phi(y) = sum_j d_j exp(<y, u_j>).
# Whether the infimum is positive, zero and attained, or zero at infinity is
# decided by where the origin sits relative to the hull of the exponents.

import numpy as np

from capax import ExpSumProblem, classify_hull, near_minimizer, phi_eval, psi_minimize
from capax import diag_problem, trace_channel

# Diagonal problem of the 2x2 trace channel: Phi(y) = e^{-2y} + 2 + e^{2y}
# after centering, minimized at y = 0 with value 4.
prob = diag_problem(trace_channel(2, 2))
res = psi_minimize(prob)
print("trace channel:", res.classification.tag, "psi =", res.value)
print("  minimizer:", res.minimizer, "grad residual:", res.grad_residual)

# Interior case with an asymmetric weight: classic AM-GM behavior.
amgm = ExpSumProblem([[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]], [4.0, 9.0, 0.0])
r = psi_minimize(amgm)
print("two-term AM-GM: psi =", r.value, "(expected", 2 * np.sqrt(36.0), ")")

# Push the origin onto the hull boundary: the infimum is the minimum over the
# active face alone (here 2*sqrt(6)), and it is approached but never attained,
# since the off-face term only dies as y runs to infinity.
bd = ExpSumProblem([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [2.0, 3.0, 5.0])
c = classify_hull(bd)
print("boundary problem:", c.tag, "active face:", c.active_face)
rb = psi_minimize(bd)
print("  psi =", rb.value, "(2*sqrt(6) =", 2 * np.sqrt(6.0), ")")

# near_minimizer produces certified points with Phi <= psi + delta. On the
# boundary the points must run off to infinity, and they do so at a rate that
# is linear in log(1/delta).
for delta in (1e-2, 1e-4, 1e-6, 1e-8):
    y, norm = near_minimizer(bd, delta)
    print(f"  delta={delta:.0e}: |y|={norm:7.3f} phi - psi = {phi_eval(bd, y) - rb.value:.3e}")
