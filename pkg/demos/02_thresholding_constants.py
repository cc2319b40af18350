"""The sharp constants of hard thresholding, reproduced numerically.

Three independent routes to the same numbers:

* a sampled certificate for the k-sparse orthogonal projection, driven to
  the supremum sqrt((3+sqrt 5)/2) ~ 1.618 by the all-ones probe;
* the closed form f_k, whose value at v=1 vanishes exactly at
  c = (3+sqrt 5)/2 and whose k=3 interior minimum vanishes at
  c = (9+sqrt 33)/6 ~ 2.457;
* a bisection on c with the exhaustive pattern search, which recovers the
  k=3 threshold without ever touching the closed form.
"""

from math import sqrt

import numpy as np

from gpgd import (
    ModelProjection,
    RngStream,
    SparseK,
    beta_lower_sampled,
    f_k,
    ht_beta_constant,
    ht_delta_threshold,
    optimal_beta_bisect,
)
from gpgd.certify import f_k_interior_argmin

print(f"beta  = sqrt((3+sqrt5)/2) = {ht_beta_constant():.12f}")
print(f"1/beta (isometry threshold for linear convergence) = {ht_delta_threshold():.12f}")

model = SparseK(12, 3)
cert = beta_lower_sampled(ModelProjection(model), model, RngStream(1, 1), 100_000)
print(f"sampled certificate on 12-dim 3-sparse: beta_lower = {cert.beta_lower:.10f}")
w = cert.witnesses[0]
print(f"  best witness ratio re-check: "
      f"{np.linalg.norm(ModelProjection(model).apply(w.z) - w.x) / np.linalg.norm(w.z - w.x):.10f}")

c_star = (3.0 + sqrt(5.0)) / 2.0
print(f"f_k(1) at c = (3+sqrt5)/2, k=3,10,100: "
      f"{[f'{f_k(c_star, k, 1.0):.1e}' for k in (3, 10, 100)]}")

z = np.zeros(5)
z[:4] = 1.0
root = optimal_beta_bisect(SparseK(5, 3), [z]) ** 2
print(f"k=3 threshold by exhaustive bisection: c = {root:.9f} "
      f"(closed form (9+sqrt33)/6 = {(9 + sqrt(33)) / 6:.9f})")
v = f_k_interior_argmin(root, 3)
print(f"  closed-form cross-check: f_3 at its interior argmin = {f_k(root, 3, v):.2e}")

print("suite thresholds grow toward the uniform constant:")
for k in range(3, 9):
    zk = np.ones(k + 1)
    print(f"  k={k:2d}: c = {optimal_beta_bisect(SparseK(k + 1, k), [zk]) ** 2:.6f}")
print(f"  limit: (3+sqrt5)/2 = {c_star:.6f}")
