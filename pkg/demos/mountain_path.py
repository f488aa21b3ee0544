"""
The mountain path: f(x) = x with phi = 0 on the unit interval.

The formal derivative (0, 0) is far from f' = 1, so no small graph
deformation of [0, 1] is close to holonomic without corrugation.  One
corrugation step with the loop t -> (4 sin(2 pi t) / eps, 2 sin^2(2 pi t))
gives

    delta(x) = 2 (1 - cos(2 pi N x)) / (eps pi N)
    h(x)     = x - sin(4 pi N x) / (4 pi N)

This script solves at several eps, prints the minimal certified N next to
the sufficient bound ceil(4 / (pi eps^2)), and writes the N = 6, eps = 1
surface as ``mountain_f1.obj``.

Run with ``python3 demos/mountain_path.py``.
"""

import math
from pathlib import Path

import numpy as np

from holoapprox import JetSection, SolveOptions, certify_solution, extend, solve
from holoapprox.export import mesh_arrays, write_obj

sigma = JetSection.from_strings(["x1"], [["0", "0"]], m=1, k=0, n=1)
mountain_loop = SolveOptions(amplitude_scale=4.0)

print(f"{'eps':>6} {'bound':>6} {'N (fixed loop)':>15} {'N (auto loop)':>14} {'tube radius':>12}")
for eps in (1.0, 0.9, 0.5, 0.25):
    bound = math.ceil(4.0 / (math.pi * eps**2))
    pair = solve(sigma, eps, mountain_loop)
    auto = solve(sigma, eps)
    cert = certify_solution(sigma, eps, pair, extend(sigma, pair))
    N = pair.record["frequencies"][0]
    print(
        f"{eps:6.2f} {bound:6d} {N:15d} {auto.record['frequencies'][0]:14d}"
        f" {cert.tubular_radius:12.3g}  {cert.status}"
    )

# the closed forms are reproduced exactly
eps, N = 1.0, 6
pair = solve(sigma, eps, SolveOptions(frequencies=(N,), amplitude_scale=4.0))
x = np.linspace(0.0, 1.0, 1025)
delta, h = pair([x])
err = max(
    np.max(np.abs(delta - 2 * (1 - np.cos(2 * np.pi * N * x)) / (eps * np.pi * N))),
    np.max(np.abs(h - (x - np.sin(4 * np.pi * N * x) / (4 * np.pi * N)))),
)
print(f"\nN = {N}, eps = {eps}: closed-form error {err:.1e}")

# a failing certificate points at the violated clause
bad = solve(sigma, 0.5, SolveOptions(frequencies=(1,), amplitude_scale=4.0))
cert = certify_solution(sigma, 0.5, bad, extend(sigma, bad))
c = cert.clauses["delta"]
print(f"N = 1, eps = 0.5: {cert.status}, |delta| margin {c['worst_margin']:.3f} at x = {c['worst_point'][0]}")

ext = extend(sigma, pair)
verts = mesh_arrays(ext, 1025, 0.25, 65)
xs = np.linspace(0.0, 1.0, 1025)
out = Path("mountain_f1.obj")
write_obj(out, verts, np.stack([xs, 0 * xs, xs], axis=1))
print(f"wrote {out}")
