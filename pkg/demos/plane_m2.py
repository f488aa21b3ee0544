"""
Two corrugation directions: f = (x1 + x2, x1 + x2), phi = 0, m = 2, k = 1.

Direction 1 is corrugated first; direction 2 then starts from a frequency
4 times larger.  Margins are checked on a lifted grid, slow coordinates
times the phase torus of the corrugations, so the check cost does not grow
with N.  The sweep at the end doubles N2 and shows the 1/N decay of the
step residual.

Run with ``python3 demos/plane_m2.py`` (about half a minute).
"""

from pathlib import Path

import numpy as np

from holoapprox import SolveOptions, certify_solution, extend, solve
from holoapprox.cli import load_config

config = Path(__file__).resolve().parent / "configs" / "plane_m2.ini"
sigma, eps, options, _ = load_config(config)

pair = solve(sigma, eps, options)
for rec in pair.record["directions"]:
    print(
        f"direction {rec['direction']}: N={rec['N']} tried={rec['tried'][:6]}..."
        f" residual={rec['residual']:.3g} displacement={rec['displacement']:.3g}"
        f" (bound {rec['displacement_bound']:.3g})"
    )

cert = certify_solution(sigma, eps, pair, extend(sigma, pair))
print(f"\ncertificate: {cert.status}, tubular radius {cert.tubular_radius:.3g}")
for name, c in cert.clauses.items():
    print(f"  {name:10s} worst margin {c['worst_margin']:.4f}  cell bound {c['cell_bound']:.3g}")

N1, N2 = (pair.record["frequencies"][j] for j in range(2))
print("\nresidual sweep")
Ns, res = [], []
for i in range(4):
    opts = SolveOptions(**{**options.__dict__, "frequencies": (N1, N2 * 2**i)})
    r = solve(sigma, eps, opts).record["directions"][1]["residual"]
    Ns.append(N2 * 2**i)
    res.append(r)
    print(f"  N2={Ns[-1]:6d}  residual {r:.4g}")
print(f"log-log slope {np.polyfit(np.log(Ns), np.log(res), 1)[0]:.3f}")
