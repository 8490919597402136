"""Determinant coefficients of T(diag(lambda)) computed three independent ways.

det(T(diag(lambda))) is a polynomial with nonnegative coefficients indexed by
multi-indices j with |j| = m. The three routes here use completely different
algebra, so agreement is a strong correctness signal.
"""

import tempfile

import numpy as np

from capax import apply, d_cauchy_binet, d_interpolate, d_leibniz, evaluate_poly, random_cp

t = random_cp(3, 2, 2, scale=0.6, rng=np.random.default_rng(11))

lead = d_leibniz(t)
cb = d_cauchy_binet(t)
fit = d_interpolate(t)

print(f"{len(lead)} coefficient slots for n=3, m=2:")
print(f"{'index':>12} {'leibniz':>22} {'cauchy-binet':>22} {'interpolated':>22}")
for j, a, b, c in zip(lead.indices, lead.values, cb.values, fit.values):
    print(f"{str(j):>12} {a:22.15e} {b:22.15e} {c:22.15e}")

print("max |leibniz - cauchy-binet|:", np.abs(lead.values - cb.values).max())
print("max |leibniz - interpolated|:", np.abs(lead.values - fit.values).max())
print("interpolation fit residual  :", fit.fit_residual)

# Sanity: the coefficients actually reproduce the determinant.
lam = np.random.default_rng(5).uniform(0.2, 2.0, size=3)
direct = np.linalg.det(apply(t, np.diag(lam))).real
print("det at a random diagonal:", direct, "vs poly:", evaluate_poly(lead, lam))

with tempfile.NamedTemporaryFile("r", suffix=".csv", delete=False) as fh:
    path = fh.name
lead.to_csv(path)
print("coefficients written to", path)
