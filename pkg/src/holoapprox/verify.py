"""
Certification of solutions and the independent numerical oracles.

A solution ``(delta, f1)`` passes when, on grids,

* ``|delta| < eps`` over the cube,
* ``|f1 - f|_sup < eps`` and ``|df1 - phi| < eps`` (Euclidean source, sup
  target) on a tube ``{(x, delta(x) + s, z) : |s|, |z_l| <= r}``,

each with a positive cell bound (worst vertex margin of every grid cell minus
the numerical Lipschitz slopes times the spacings, see
:func:`holoapprox.corrugation.inflation_check`).  The tube radius ``r`` is the
largest one found by halving and bisection.

The oracles below never call the closed forms they check.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import expr
from .corrugation import SolveOptions, inflation_check
from .export import plain as _plain
from .jetmodel import Grid, as_array
from .numcore import jacobian, rank_one_inverse_quadratic
from .relation import SliceSpec, ampleness_certificate, hyperbola_params, slice_hyperbolas, slice_margin

__all__ = [
    "Certificate",
    "TubeOptions",
    "certify_solution",
    "default_grid",
    "finite_difference_jacobian",
    "oracle_suite",
    "sampled_restricted_norm_sq",
    "sampled_slice_margin",
]

SCHEMA = "holoapprox.certificate/1"


@dataclass(frozen=True)
class TubeOptions:
    """
    Tube radius search: start at ``min(radius, scale / max N)``, halve until
    the clauses hold, then bisect.  ``offsets`` points per fiber axis
    (None: 9 on direct grids, 3 on lifted ones).
    """

    radius: float = 0.05
    scale: float = 0.5
    offsets: Optional[int] = None
    halvings: int = 24
    bisections: int = 6

    def start(self, frequencies):
        top = max([int(n) for n in frequencies] or [1])
        return min(self.radius, self.scale / top)

    def points(self, grid):
        if self.offsets is not None:
            return int(self.offsets)
        return 3 if grid.lifted else 9


@dataclass
class Certificate:
    status: str
    eps: float
    clauses: dict
    grid: dict
    tubular_radius: float
    frequencies: list = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    schema: str = SCHEMA

    @property
    def passed(self):
        return self.status == "PASS"

    def to_dict(self):
        return _plain(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def _clause_ok(c):
    return c["cell_bound"] > 0


def _tube_report(section, eps, ext, grid, r, offsets):
    d = section.dims
    x, phases, _ = grid.split()
    s_axis = np.linspace(-r, r, offsets) if r > 0 else np.zeros(1)
    fiber_axes = [s_axis] * (1 + d.k)
    fiber = [g.ravel() for g in np.meshgrid(*fiber_axes, indexing="ij")]
    s = fiber[0][None, :]
    z = [f[None, :] for f in fiber[1:]]
    y, vals, df = ext.tube_jet(x, s, z, phases)
    shape = y.shape
    xx = [np.broadcast_to(xi[:, None], shape) for xi in x]
    zz = [np.broadcast_to(t, shape) for t in z]
    f = section.f_at(xx, y, zz)
    phi = section.phi_at(xx, y, zz)
    zeroth = np.max(np.stack([np.abs(vals[i] - as_array(f[i], shape)) for i in range(d.n)]), axis=0)
    rows = []
    for i in range(d.n):
        D = np.stack([df[i, c] - as_array(phi[i][c], shape) for c in range(d.source)])
        rows.append(np.sqrt(np.sum(D * D, axis=0)))
    first = np.max(np.stack(rows), axis=0)
    tube_grid = grid.extend(fiber_axes)
    margins = {
        "jet_value": (eps - zeroth).reshape(tube_grid.shape),
        "jet_slope": (eps - first).reshape(tube_grid.shape),
    }
    report = inflation_check(margins, tube_grid)
    q = d.m + len(grid.lifted)
    for c in report.values():
        pt = c["worst_point"]
        ph = {j: pt[d.m + i] for i, j in enumerate(grid.lifted)} or None
        base = float(np.asarray(ext.pair.delta(pt[: d.m], ph)))
        c["worst_point"] = pt[: d.m] + [pt[q] + base] + pt[q + 1 :]
        if ph:
            c["worst_phases"] = [ph[j] for j in grid.lifted]
    return report


def default_grid(pair, options=None):
    """Grid the solver used for the final stage of ``pair``."""
    options = options or SolveOptions(**pair.record.get("grid_options", {}))
    return options.grid(pair.dims.m, pair.record.get("frequencies", {}))


def certify_solution(section, eps, pair, ext, grid=None, tube=None, oracle=None, frequencies=None):
    """
    Check the definition of a solution of the holonomic eps-approximation
    problem on grids.  Failures produce a FAIL certificate locating the worst
    clause; nothing is raised.

    ``grid`` defaults to the solver's final check grid (lifted over the
    corrugation phases when the solve was lifted).
    """
    d = section.dims
    tube = tube or TubeOptions()
    if grid is None:
        grid = default_grid(pair)
    x, phases, _ = grid.split()
    delta = as_array(pair.delta(x, phases), x[0].shape)
    clauses = dict(inflation_check({"delta": (eps - np.abs(delta)).reshape(grid.shape)}, grid))
    for c in clauses.values():
        c["worst_point"] = c["worst_point"][: d.m]

    if frequencies is None:
        frequencies = [rec["N"] for rec in pair.record.get("directions", [])]
    offsets = tube.points(grid)

    def tube_ok(r):
        rep = _tube_report(section, eps, ext, grid, r, offsets)
        return all(_clause_ok(c) for c in rep.values()), rep

    r = r0 = tube.start(frequencies)
    ok, rep = tube_ok(r)
    fail_r = None
    halvings = 0
    while not ok and halvings < tube.halvings:
        fail_r = r
        r *= 0.5
        halvings += 1
        ok, rep = tube_ok(r)
    if ok and fail_r is not None:
        lo, hi = r, fail_r
        for _ in range(tube.bisections):
            mid = 0.5 * (lo + hi)
            ok_mid, rep_mid = tube_ok(mid)
            if ok_mid:
                lo, rep = mid, rep_mid
            else:
                hi = mid
        r = lo
    if not ok:
        # report the on-graph values to localize the failure
        r = 0.0
        rep = _tube_report(section, eps, ext, grid, 0.0, 1)
    clauses.update(rep)
    for c in clauses.values():
        c["ok"] = _clause_ok(c)
    oracle = oracle or {}
    oracle_ok = all(v.get("ok", True) for v in oracle.values() if isinstance(v, dict))
    passed = all(c["ok"] for c in clauses.values()) and r > 0 and oracle_ok
    return Certificate(
        status="PASS" if passed else "FAIL",
        eps=float(eps),
        clauses=clauses,
        grid={
            "shape": list(grid.shape),
            "spacing": list(grid.spacing),
            "lifted": list(grid.lifted),
            "tube_offsets": offsets,
            "tube_radius_start": r0,
        },
        tubular_radius=float(r),
        frequencies=list(frequencies),
        oracle=oracle,
    )


# ---------------------------------------------------------------------------
# oracles


def _unit_rows(rng, count, dim):
    u = rng.standard_normal((count, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def sampled_restricted_norm_sq(mvec, y, rng, samples=10**5, polish=True):
    """``sup_u <m,u>^2 / (|u|^2 + <y,u>^2)`` by sampling unit vectors."""
    mvec = np.asarray(mvec, dtype=float)
    y = np.asarray(y, dtype=float)

    def ratio(u):
        u = np.atleast_2d(u)
        return (u @ mvec) ** 2 / (np.sum(u * u, axis=1) + (u @ y) ** 2)

    u = _unit_rows(rng, samples, len(mvec))
    r = ratio(u)
    best = float(np.max(r))
    if polish and len(mvec) > 1:
        res = minimize(lambda v: -ratio(v)[0], u[int(np.argmax(r))], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
        best = max(best, float(-res.fun))
    return best


def sampled_slice_margin(spec, a, b, rng, samples=10**5, polish=True):
    """
    ``min over unit (u, u')`` of
    ``eps^2 (u'^2 + |u|^2 + (a u' + lam u)^2) - |u' b + psi u|_sup^2``
    straight from the quantified definition; positive means member.
    """
    lam, psi, eps = spec.lam, spec.psi, spec.eps
    b = np.asarray(b, dtype=float)
    m1 = lam.size

    def gap(v):
        v = np.atleast_2d(v)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        u, up = v[:, :m1], v[:, m1]
        lhs = np.max(np.abs(up[:, None] * b[None, :] + u @ psi.T), axis=1) ** 2
        rhs = eps**2 * (up**2 + np.sum(u * u, axis=1) + (a * up + u @ lam) ** 2)
        return rhs - lhs

    if m1 == 0:
        return float(np.min(gap(np.array([[1.0]]))))
    v = _unit_rows(rng, samples, m1 + 1)
    g = gap(v)
    best = float(np.min(g))
    # a negative sample already witnesses non-membership
    if polish and best > 0:
        for start in v[np.argsort(g)[:3]]:
            res = minimize(lambda w: gap(w)[0], start, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            best = min(best, float(res.fun))
    return best


def finite_difference_jacobian(fn, x, h=1e-6):
    """Central differences of a map between float lists."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(fn(list(x + e)), dtype=float) - np.asarray(fn(list(x - e)), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


def random_slice(rng, m=None, n=None, scale=0.6):
    m = m or int(rng.integers(1, 4))
    n = n or int(rng.integers(1, 4))
    eps = float(rng.uniform(0.2, 2.0))
    lam = rng.standard_normal(m - 1) * rng.uniform(0, 2)
    psi = rng.standard_normal((n, m - 1)) * scale * eps
    return SliceSpec(lam, psi, eps)


def random_slice_point(rng, spec):
    a = float(rng.standard_normal() * 2.0)
    b = rng.standard_normal(spec.n) * spec.eps * (1.0 + abs(a)) * rng.uniform(0.2, 2.0)
    return a, b


def _det_margin(spec):
    out = []
    lam = spec.lam
    for row in spec.psi:
        mu = row / spec.eps
        L, M, c = lam @ lam, mu @ mu, lam @ mu
        out.append((1 + L) * (1 - M) + c * c)
    return min(out) if out else 1.0


def _trial_restricted(seed, samples):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    mvec = rng.standard_normal(m)
    y = rng.standard_normal(m) * rng.uniform(0, 3)
    exact = float(rank_one_inverse_quadratic(mvec, y))
    approx = sampled_restricted_norm_sq(mvec, y, rng, samples)
    return abs(approx - exact) / max(exact, 1e-300)


def _trial_slice(seed, samples, band):
    rng = np.random.default_rng(seed)
    spec = random_slice(rng)
    a, b = random_slice_point(rng, spec)
    closed = float(slice_margin(spec, a, b))
    det = _det_margin(spec)
    if abs(det) <= band or (np.isfinite(closed) and abs(closed) <= band):
        return None
    sampled = sampled_slice_margin(spec, a, b, rng, samples)
    return (closed > 0) != (sampled > 0)


def _trial_K(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 5))
    lam = rng.standard_normal(dim) * rng.uniform(0, 3)
    if rng.random() < 0.5:
        mu = rng.uniform(-1, 1) * lam * min(1.0, 0.95 * np.sqrt((1 + lam @ lam) / max(lam @ lam, 1e-300)))
    else:
        mu = rng.standard_normal(dim) * rng.uniform(0, 0.7)
    eps = float(rng.uniform(0.2, 2.0))
    p = hyperbola_params(lam, eps * mu, eps)
    if p.empty:
        return None
    return abs(p.K - 1.0 / (1.0 + lam @ lam))


def _trial_fd(seed):
    rng = np.random.default_rng(seed)
    src = random_expression_source(rng, 4)
    e = expr.parse(src)
    x = rng.uniform(0.2, 0.8, 3)
    names = ["x1", "x2", "y"]

    def fn(v):
        return [expr.evaluate(e, dict(zip(names, v)))]

    try:
        _, jac = jacobian(fn, list(x))
        fd = finite_difference_jacobian(fn, x)
    except expr.EvalDomainError:
        return None
    dual = np.array([float(v) for v in jac[0]])
    return float(np.max(np.abs(dual - fd[0]) / np.maximum(1.0, np.abs(fd[0]))))


def random_expression_source(rng, depth):
    """Random smooth expression text over x1, x2, y."""
    if depth == 0 or rng.random() < 0.25:
        return str(rng.choice(["x1", "x2", "y", f"{rng.uniform(0.5, 2):.3f}", "pi"]))
    kind = rng.integers(0, 6)
    a = random_expression_source(rng, depth - 1)
    if kind == 0:
        return f"({a} + {random_expression_source(rng, depth - 1)})"
    if kind == 1:
        return f"({a} * {random_expression_source(rng, depth - 1)})"
    if kind == 2:
        return f"({a} - {random_expression_source(rng, depth - 1)})"
    if kind == 3:
        return f"{rng.choice(['sin', 'cos'])}({a})"
    if kind == 4:
        return f"({a}) / (2 + sin({random_expression_source(rng, depth - 1)}))"
    return f"exp(0.3 * {a})"


def _trial_hull(seed):
    rng = np.random.default_rng(seed)
    spec = random_slice(rng, n=int(rng.integers(1, 3)))
    if any(p.empty for p in slice_hyperbolas(spec)):
        return None
    target = rng.standard_normal(spec.n + 1) * 3
    cert = ampleness_certificate(spec, target, radius=float(rng.uniform(0.1, 2)))
    return cert.ok


def oracle_suite(seed=0, trials=100, samples=10**5, band=1e-6, workers=None):
    """
    Run the oracle cross-checks; deterministic for a given seed.

    Each trial draws its own generator from ``(seed, oracle, trial)`` so the
    report does not depend on the number of worker threads.
    """
    seeds = {name: [np.random.SeedSequence([seed, i, t]) for t in range(trials)]
             for i, name in enumerate(["restricted_norm", "slice_membership", "K_identity", "fd_jets", "hull"])}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rn = list(pool.map(lambda s: _trial_restricted(s, samples), seeds["restricted_norm"]))
        sl = list(pool.map(lambda s: _trial_slice(s, samples, band), seeds["slice_membership"]))
        kk = list(pool.map(_trial_K, seeds["K_identity"]))
        fd = list(pool.map(_trial_fd, seeds["fd_jets"]))
        hl = list(pool.map(_trial_hull, seeds["hull"]))
    sl_eval = [v for v in sl if v is not None]
    kk_eval = [v for v in kk if v is not None]
    fd_eval = [v for v in fd if v is not None]
    hl_eval = [v for v in hl if v is not None]
    report = {
        "seed": seed,
        "trials": trials,
        "restricted_norm": {"max_rel_dev": max(rn), "ok": max(rn) < 1e-6},
        "slice_membership": {
            "disagreements": int(sum(sl_eval)),
            "evaluated": len(sl_eval),
            "in_band": len(sl) - len(sl_eval),
            "ok": sum(sl_eval) == 0,
        },
        "K_identity": {"max_abs_err": max(kk_eval) if kk_eval else 0.0, "evaluated": len(kk_eval),
                       "ok": (max(kk_eval) if kk_eval else 0.0) < 1e-10},
        "fd_jets": {"max_rel_dev": max(fd_eval) if fd_eval else 0.0, "evaluated": len(fd_eval),
                    "ok": (max(fd_eval) if fd_eval else 0.0) < 1e-6},
        "hull": {"certified": int(sum(hl_eval)), "evaluated": len(hl_eval), "ok": all(hl_eval)},
    }
    return _plain(report)
