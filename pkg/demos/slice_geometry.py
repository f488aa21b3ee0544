"""
Principal slices of the relation and their hyperbolic cores.

Each target component of a slice is the inside of a hyperbola
(b - m0 a)^2 - kappa^2 a^2 < eta^2.  This script prints the parameters for
a few (lam, psi), checks the K = 1/(1 + |lam|^2) identity, compares the
closed-form membership with the sampled quantified definition and builds
an ampleness certificate: slice points whose convex hull contains a box
around an arbitrary target.

Run with ``python3 demos/slice_geometry.py``.
"""

import numpy as np

from holoapprox import SliceSpec, ampleness_certificate, slice_member
from holoapprox.relation import slice_hyperbolas
from holoapprox.verify import sampled_slice_margin

cases = [
    ("flat", [], [[]], 1.0),
    ("tilted", [3.0, 4.0], [[0.5, -0.2]], 1.0),
    ("two components", [0.5], [[0.3], [-0.6]], 1.0),
    ("empty", [0.0], [[1.5]], 1.0),
]
for name, lam, psi, eps in cases:
    spec = SliceSpec(np.array(lam), np.array(psi, dtype=float).reshape(len(psi), len(lam)), eps)
    params = slice_hyperbolas(spec)
    if any(p.empty for p in params):
        print(f"{name:15s} empty")
        continue
    lam2 = float(spec.lam @ spec.lam)
    for j, p in enumerate(params):
        print(
            f"{name:15s} component {j + 1}: m0={p.m0:+.4f} kappa={p.kappa:.4f} eta={p.eta:.4f}"
            f"  K={p.K:.6f}  1/(1+|lam|^2)={1 / (1 + lam2):.6f}"
        )

# closed form against the quantified definition
rng = np.random.default_rng(0)
spec = SliceSpec(np.array([0.5]), np.array([[0.3], [-0.6]]), 1.0)
agree = 0
for _ in range(200):
    a = rng.normal() * 2
    b = rng.normal(size=2) * 0.7 * (1 + abs(a))
    agree += slice_member(spec, a, b) == (sampled_slice_margin(spec, a, b, rng, samples=20000) > 0)
print(f"\nclosed form vs sampled definition: {agree}/200 agree")

# the convex hull of the slice is everything
target = np.array([5.0, -40.0, 12.0])
cert = ampleness_certificate(spec, target, radius=1.0)
print(
    f"ampleness: {len(cert.points)} slice points, hull contains the unit box around {target}:"
    f" {cert.hull_ok}, all points in the slice: {cert.members_ok}"
)
