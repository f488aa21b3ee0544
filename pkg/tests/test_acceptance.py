"""
Acceptance criteria, one test each.  Every criterion prints one line

    PASS|FAIL  criterion k  <title>  (<seconds> s)  <detail>

in the pytest terminal summary, or on stdout when this file is run as a
script.
"""

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import mountain_delta, mountain_f1, mountain_h  # noqa: E402

from holoapprox import (  # noqa: E402
    JetSection,
    SliceSpec,
    SolveOptions,
    certify_solution,
    extend,
    hyperbola_params,
    slice_member,
    solve,
)
from holoapprox.cli import load_config, main  # noqa: E402
from holoapprox.export import read_obj_vertices  # noqa: E402
from holoapprox.jetmodel import Dims, Grid, HolonomicPair  # noqa: E402
from holoapprox.numcore import cos, sin  # noqa: E402
from holoapprox.relation import rha_margins, slice_hyperbolas  # noqa: E402
from holoapprox.verify import _trial_slice, random_slice, random_slice_point  # noqa: E402

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"
MOUNTAIN_LOOP = 4.0
RESULTS = {}


def mountain_section():
    return JetSection.from_strings(["x1"], [["0", "0"]], m=1, k=0, n=1)


def frequency_bound(eps):
    return math.ceil(4.0 / (math.pi * eps * eps))


def run(number, title, fn, limit=None):
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None and dt >= limit:
        ok = False
        detail += f"; runtime {dt:.2f} s exceeds {limit:g} s"
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}  {title}  ({dt:.2f} s)  {detail}"
    RESULTS[number] = line
    return ok, line


# ---------------------------------------------------------------------------


def criterion_1():
    sigma = mountain_section()
    x = np.linspace(0.0, 1.0, 2**10 + 1)
    worst = 0.0
    for eps, N in [(1.0, 6), (1.0, 2), (0.9, 2), (0.5, 6), (0.25, 21)]:
        pair = solve(sigma, eps, SolveOptions(frequencies=(N,), amplitude_scale=MOUNTAIN_LOOP))
        delta, h = pair([x])
        worst = max(worst, np.max(np.abs(delta - mountain_delta(x, eps, N))), np.max(np.abs(h - mountain_h(x, N))))
    return worst < 1e-12, f"sup error {worst:.2e} over 5 (eps, N) cases"


def criterion_2():
    sigma = mountain_section()
    worst = 0.0
    x = np.linspace(0.0, 1.0, 512)
    for eps, N, width in [(1.0, 6, 0.1), (0.5, 6, 0.05)]:
        pair = solve(sigma, eps, SolveOptions(frequencies=(N,), amplitude_scale=MOUNTAIN_LOOP))
        ext = extend(sigma, pair)
        s = np.linspace(-width, width, 64)[None, :]
        y, vals, _ = ext.tube_jet([x], s, [])
        worst = max(worst, float(np.max(np.abs(vals[0] - mountain_f1(x[:, None], y, eps, N)))))
        # pointwise evaluation path as well
        (f1,) = ext([x[:, None]], y)
        worst = max(worst, float(np.max(np.abs(f1 - mountain_f1(x[:, None], y, eps, N)))))
    return worst < 1e-12, f"sup error {worst:.2e} on 512x64 tubes"


def criterion_3():
    sigma = mountain_section()
    ok = True
    parts = []
    for eps in (0.9, 0.5, 0.25):
        nb = frequency_bound(eps)
        pair = solve(sigma, eps, SolveOptions(frequencies=(nb,), amplitude_scale=MOUNTAIN_LOOP))
        cert = certify_solution(sigma, eps, pair, extend(sigma, pair))
        searched = solve(sigma, eps, SolveOptions(amplitude_scale=MOUNTAIN_LOOP)).record["frequencies"][0]
        auto = solve(sigma, eps).record["frequencies"][0]
        ok &= cert.passed and searched <= nb
        parts.append(f"eps={eps}: bound {nb} {cert.status}, minimal N {searched} (auto loop {auto})")
    return ok, "; ".join(parts)


def criterion_4():
    rng = np.random.default_rng(2024)
    counts = {"generic": 0, "collinear": 0}
    worst = 0.0
    while min(counts.values()) < 500:
        branch = "collinear" if counts["generic"] >= 500 or rng.random() < 0.5 else "generic"
        if counts[branch] >= 500:
            continue
        dim = int(rng.integers(1, 5))
        lam = rng.standard_normal(dim) * rng.uniform(0, 3)
        eps = float(rng.uniform(0.1, 3.0))
        if branch == "generic":
            mu = rng.standard_normal(dim) * rng.uniform(0, 1.2) * eps
        else:
            mu = rng.uniform(-1.5, 1.5) * lam * eps
        p = hyperbola_params(lam, mu, eps)
        if p.empty:
            continue
        counts[branch] += 1
        worst = max(worst, abs(p.K - 1.0 / (1.0 + lam @ lam)))
    return worst < 1e-10, f"max |K - 1/(1+|lam|^2)| = {worst:.2e} over 500 generic + 500 collinear"


def criterion_5():
    disagreements = evaluated = banded = 0
    i = 0
    while evaluated < 1000:
        r = _trial_slice(np.random.SeedSequence([5, i]), 10**5, 1e-6)
        i += 1
        if r is None:
            banded += 1
            continue
        evaluated += 1
        disagreements += int(r)
    return disagreements == 0, f"{disagreements} disagreements in {evaluated} pairs ({banded} in the boundary band)"


def criterion_6():
    rng = np.random.default_rng(6)
    star = origin = specs = 0
    bad = 0
    while star < 10**4:
        spec = random_slice(rng)
        specs += 1
        if not any(p.empty for p in slice_hyperbolas(spec)):
            origin += 1
            bad += not slice_member(spec, 0.0, np.zeros(spec.n))
        a, b = random_slice_point(rng, spec)
        if not slice_member(spec, a, b):
            continue
        t = float(rng.uniform(0.0, 1.0))
        t = 1.0 - t  # in (0, 1]
        star += 1
        bad += not slice_member(spec, t * a, t * np.asarray(b))
    return bad == 0, f"{bad} failures in {star} star-shape pairs and {origin} origin checks"


def _mountain_class_pair(rng):
    N = int(rng.integers(1, 9))
    eps = float(rng.uniform(0.3, 1.5))
    a = float(rng.uniform(0.5, 1.6))
    b = float(rng.uniform(0.3, 2.5))
    off = float(rng.uniform(-1.3, 1.3) * eps) if rng.random() < 0.3 else 0.0
    w = 2 * np.pi * N

    def fn(x, phases=None):
        t = x[0]
        return [a * 2 * (1 - cos(w * t)) / (eps * np.pi * N), t + off - b * sin(2 * w * t) / (2 * w)]

    return HolonomicPair(fn, Dims(1, 0, 1)), eps, N


def criterion_7():
    sigma = mountain_section()
    rng = np.random.default_rng(7)
    members = violators = 0
    problems = []
    radii = []
    identity = 0.0
    while members < 50 or violators < 50:
        pair, eps, N = _mountain_class_pair(rng)
        # fine enough for the inflation rule: h' oscillates at frequency 2N
        grid = Grid.cube(1, max(1025, 256 * N + 1))
        x = grid.coordinates()
        delta, h, grad, dh = pair.jet(x)
        margins = rha_margins(sigma, eps, x, delta, h, grad, dh)
        worst = {k: float(np.min(v)) for k, v in margins.items()}
        is_member = min(worst.values()) > 0.05
        is_violator = min(worst.values()) < 0
        if (is_member and members >= 50) or (is_violator and violators >= 50) or not (is_member or is_violator):
            continue
        ext = extend(sigma, pair)
        # j1 f1 - sigma restricted to the deformed cube
        y, vals, df = ext.tube_jet(x, np.zeros((1, 1)), [])
        on_graph = {
            "height": np.abs(np.asarray(delta, dtype=float)),
            "value": np.abs(vals[0, :, 0] - x[0]),
            "slope": np.sqrt(df[0, 0, :, 0] ** 2 + df[0, 1, :, 0] ** 2),
        }
        for k in on_graph:
            identity = max(identity, float(np.max(np.abs(on_graph[k] - (eps - margins[k])))))
        if is_member:
            members += 1
            cert = certify_solution(sigma, eps, pair, ext, grid=grid, frequencies=[N])
            radii.append(cert.tubular_radius)
            if not (all(np.all(v < eps) for v in on_graph.values()) and cert.passed):
                problems.append(f"member eps={eps:.3f} N={N}: {cert.status}")
        else:
            violators += 1
            clause = min(worst, key=worst.get)
            if not np.any(on_graph[clause] >= eps):
                problems.append(f"violator eps={eps:.3f} N={N} clause {clause} not seen on A_delta")
    ok = not problems and identity < 1e-9
    detail = (
        f"50 members certified (min tube radius {min(radii):.2e}), 50 violators detected on A_delta,"
        f" clause identity error {identity:.1e}"
    )
    if problems:
        detail += "; " + "; ".join(problems[:3])
    return ok, detail


def criterion_8():
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "f1.obj"
        code = main(["mesh", str(CONFIGS / "mountain.ini"), "--N", "6", "--eps", "1", "--out", str(out)])
        objs = read_obj_vertices(out)
    v = objs["f1"]
    err = float(np.max(np.abs(v[:, 2] - mountain_f1(v[:, 0], v[:, 1], 1.0, 6))))
    ref = objs["reference"]
    ok = code == 0 and err < 1e-12 and np.array_equal(ref[:, 0], ref[:, 2])
    return ok, f"{len(v)} vertices, sup error {err:.2e}"


def criterion_9():
    section, eps, options, _ = load_config(CONFIGS / "plane_m2.ini")
    pair = solve(section, eps, options)
    cert = certify_solution(section, eps, pair, extend(section, pair))
    freqs = tuple(pair.record["frequencies"][j] for j in range(section.dims.m))
    margins = ", ".join(f"{k} {c['worst_margin']:.3g}" for k, c in cert.clauses.items())
    Ns, res = [], []
    for i in range(4):
        N2 = freqs[1] * 2**i
        p = solve(section, eps, SolveOptions(**{**options.__dict__, "frequencies": (freqs[0], N2)}))
        Ns.append(N2)
        res.append(p.record["directions"][1]["residual"])
    slope = float(np.polyfit(np.log(Ns), np.log(res), 1)[0])
    ok = cert.passed and abs(slope + 1.0) <= 0.2
    return ok, (
        f"{cert.status} at N={freqs}, tube radius {cert.tubular_radius:.2e}, margins [{margins}];"
        f" residual slope {slope:.3f} over N2={Ns}"
    )


CRITERIA = [
    (1, "mountain closed forms", criterion_1, 1.0),
    (2, "explicit extension f1", criterion_2, 5.0),
    (3, "frequency bound", criterion_3, 30.0),
    (4, "K identity", criterion_4, 5.0),
    (5, "slice oracle equivalence", criterion_5, None),
    (6, "star shape and origin", criterion_6, None),
    (7, "main theorem equivalence", criterion_7, None),
    (8, "figure mesh", criterion_8, None),
    (9, "multi-direction smoke test", criterion_9, None),
]


@pytest.mark.parametrize("number, title, fn, limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, limit):
    ok, line = run(number, title, fn, limit)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for number, title, fn, limit in CRITERIA:
        ok, line = run(number, title, fn, limit)
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
