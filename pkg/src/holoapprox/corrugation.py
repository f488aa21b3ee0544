"""
Loops with prescribed base point and average, one-dimensional corrugation and
the iterated convex integration pipeline solving ``R_ha(sigma, eps)``.

Corrugating the map ``F = (delta, h)`` in direction ``j`` with a loop family
``gamma_x`` of average ``d_j F(x)`` and frequency ``N`` gives

    F_new(x) = F(x) + (1/N) int_0^{N x_j} (gamma_x(s) - d_j F(x)) ds,

whose j-th partial derivative is ``gamma_x(N x_j)`` up to O(1/N) terms coming
from the x-dependence of the loop coefficients.  Loops are trigonometric
polynomials in ``t`` so the integral is exact.

The loop ansatz, in sheared slice coordinates ``b' = b - a m0``, is

    a(t)  = beta_a  + da (1 - cos 2 pi t) + S sin 2 pi t
    b'(t) = beta'_b + db 2 sin^2 2 pi t

with ``da``, ``db`` fixed by the average.  The sine excursion of size ``S``
carries the loop far along the asymptotes of the slice while ``b'`` moves.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from . import numcore
from .jetmodel import FormalSolutionState, Grid, as_array, canonical_formal_solution, lift_phase
from .numcore import TrigPoly, jacobian
from .relation import hyperbola_terms, rha_margins, slice_margin, slice_hyperbolas, slice_terms

log = logging.getLogger(__name__)

__all__ = [
    "CorrugationError",
    "FrequencySearchError",
    "Loop",
    "LoopSynthesisError",
    "SolveOptions",
    "corrugate",
    "corrugation_residual",
    "displacement_bound",
    "cell_bound",
    "inflation_check",
    "lipschitz_estimate",
    "loop_family",
    "mountain_loop",
    "shape_parameters",
    "solve",
    "stage_margins",
    "synthesize_loop",
]


class LoopSynthesisError(RuntimeError):
    pass


class CorrugationError(ValueError):
    pass


class FrequencySearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class Loop:
    """
    A family ``x -> gamma_x`` of period-1 loops, one TrigPoly per component.

    ``coefficients(x, phases=None)`` returns the component polynomials.  When
    the family is built from a state, ``terms(x, phases)`` returns
    ``(state value, polys)`` in one pass so corrugation does not evaluate the
    state twice.
    """

    coefficients: Callable
    params: dict = field(default_factory=dict)
    terms: Optional[Callable] = None

    def __call__(self, x, t, phases=None):
        return [p(t) for p in self.coefficients(x, phases)]

    def base(self, x, phases=None):
        return self(x, 0.0, phases)

    def average(self, x, phases=None):
        return [p.mean() for p in self.coefficients(x, phases)]


def mountain_loop(eps):
    """``t -> (4 sin(2 pi t) / eps, 2 sin^2(2 pi t))`` for every x."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    polys = [TrigPoly(0.0, [], [4.0 / eps]), TrigPoly(1.0, [0.0, -1.0], [])]
    return Loop(lambda x, phases=None: polys, {"S": 4.0 / eps, "kind": "mountain"})


def shape_parameters(kappa, eta, base_b, delta_b, base_a, delta_a, theta=0.81, safety=1.0):
    """
    Sine amplitude ``S`` and duty threshold ``s0`` from the two sufficient
    conditions

    (i)  base_b + 2 delta_b s0^2 < eta,
    (ii) kappa (S s0 - base_a - 2 delta_a) > base_b + 2 delta_b,

    where all inputs are non-negative sup-norm bounds in sheared coordinates.
    Returns ``(0, 1)`` when the loop never leaves the inner tube.
    """
    if not base_b < eta:
        raise LoopSynthesisError(
            f"base outside inner tube: |beta'_b| = {base_b:.6g} >= eta = {eta:.6g}"
        )
    if base_b + 2.0 * delta_b < eta:
        return 0.0, 1.0
    s0 = min(1.0, np.sqrt(theta * (eta - base_b) / (2.0 * delta_b)))
    S = safety * ((base_b + 2.0 * delta_b) / kappa + base_a + 2.0 * delta_a) / s0
    return float(S), float(s0)


def _ansatz(beta_a, beta_b, gbar_a, gbar_b, m0, S):
    """TrigPolys of the loop in slice coordinates (a, b_1..b_n)."""
    da = gbar_a - beta_a
    a = TrigPoly(beta_a + da, [-da], [S])
    polys = [a]
    for r in range(len(beta_b)):
        bb = beta_b[r] - beta_a * m0[r]
        db = (gbar_b[r] - gbar_a * m0[r]) - bb
        polys.append(TrigPoly(bb + db + m0[r] * a.c0, [-m0[r] * da, -db], [m0[r] * S]))
    return polys


def synthesize_loop(spec, base, target, amplitude=None, samples=10**4, theta=0.81, safety=1.0):
    """
    Loop in the slice ``spec`` (slice coordinates) based at ``base`` with
    average ``target``; both are ``(a, b_1..b_n)``.

    Containment is verified on ``samples`` equally spaced times.
    """
    params = slice_hyperbolas(spec)
    if any(p.empty for p in params):
        raise LoopSynthesisError("slice is empty")
    m0 = np.array([p.m0 for p in params])
    kappa = min(p.kappa for p in params)
    eta = min(p.eta for p in params)
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    sb = base[1:] - base[0] * m0
    st = target[1:] - target[0] * m0
    if amplitude is None:
        S, s0 = shape_parameters(
            kappa,
            eta,
            numcore.sup_norm(sb),
            numcore.sup_norm(st - sb),
            abs(base[0]),
            abs(target[0] - base[0]),
            theta,
            safety,
        )
    else:
        S, s0 = float(amplitude), float("nan")
    polys = _ansatz(base[0], base[1:], target[0], target[1:], m0, S)
    t = np.linspace(0.0, 1.0, int(samples), endpoint=False)
    a = polys[0](t)
    b = np.stack([np.broadcast_to(p(t), t.shape) for p in polys[1:]])
    margin = slice_margin(spec, np.broadcast_to(a, t.shape), b)
    if not np.all(margin > 0):
        i = int(np.argmin(margin))
        raise LoopSynthesisError(f"loop leaves the slice at t = {t[i]:.6g} (margin {margin[i]:.3g})")
    return Loop(lambda x, phases=None: polys, {"S": S, "s0": s0, "kappa": kappa, "eta": eta, "m0": m0})


# ---------------------------------------------------------------------------
# corrugation


def corrugate(state, j, loop, N, check_grid=None):
    """
    One corrugation step in direction ``j`` at frequency ``N``.

    The loop family's average must equal the current ``d_j`` of the state;
    this is checked at the points of ``check_grid`` when given.
    """
    d = state.dims
    if j in state.holonomic:
        raise CorrugationError(f"direction {j} is already holonomic")
    if N < 1 or int(N) != N:
        raise CorrugationError(f"frequency must be a positive integer, got {N}")
    N = int(N)
    if check_grid is not None:
        x = check_grid.coordinates()
        _, jac = state.actual_jacobian(x)
        avg = loop.average(x)
        err = max(
            float(np.max(np.abs(as_array(avg[r], x[0].shape) - as_array(jac[r][j], x[0].shape))))
            for r in range(1 + d.n)
        )
        if err > 1e-9:
            raise CorrugationError(f"loop average differs from d_{j + 1}F by {err:.3g}")

    def terms(x, phases):
        if loop.terms is not None:
            return loop.terms(x, phases)
        return state.value(x, phases), loop.coefficients(x, phases)

    def value(x, phases=None):
        x = list(x)
        vals, polys = terms(x, phases)
        T = lift_phase(N * x[j], phases, j)
        return [v + p.oscillating_integral(T) / N for v, p in zip(vals, polys)]

    def formal(x, phases=None):
        x = list(x)
        cols = state.formal(x, phases)
        polys = loop.coefficients(x, phases)
        T = lift_phase(N * x[j], phases, j)
        return [
            [p(T) if i == j else row[i] for i in range(d.m)]
            for row, p in zip(cols, polys)
        ]

    record = {"direction": j, "N": N, **{k: v for k, v in loop.params.items() if np.isscalar(v)}}
    return FormalSolutionState(
        value, formal, d, state.holonomic | {j}, state.history + (record,)
    )


def corrugation_residual(old_state, new_state, j, loop, N, grid, split=False):
    """
    The O(1/N) defect of one corrugation step over the grid, in the sup norm
    on ``R x R^n``:

    * own:   ``sup |d_j F_new - gamma_x(N x_j)|``
    * cross: ``sup_{i != j} |d_i F_new - d_i F|``

    Returns ``max(own, cross)``, or ``(own, cross)`` when ``split``.
    """
    x, phases, _ = grid.split()
    shape = x[0].shape
    _, new = new_state.actual_jacobian(x, phases)
    _, old = old_state.actual_jacobian(x, phases)
    T = phases[j] if phases and j in phases else N * x[j]
    gam = loop(x, T, phases)
    own = cross = 0.0
    for r in range(len(gam)):
        for i in range(new_state.dims.m):
            ref = gam[r] if i == j else old[r][i]
            dev = float(np.max(np.abs(as_array(new[r][i], shape) - as_array(ref, shape))))
            if i == j:
                own = max(own, dev)
            else:
                cross = max(cross, dev)
    return (own, cross) if split else max(own, cross)


def displacement_bound(loop, N, grid, samples=64):
    """``(2/N) sup |gamma_x - avg gamma_x|`` over the grid and sampled times."""
    x, phases, _ = grid.split()
    polys = loop.coefficients(x, phases)
    t = np.linspace(0.0, 1.0, samples, endpoint=False)
    worst = 0.0
    for p in polys:
        c0 = np.asarray(numcore.base_value(p.c0), dtype=float)
        for tk in t:
            v = np.asarray(numcore.base_value(p(tk)), dtype=float)
            worst = max(worst, float(np.max(np.abs(v - c0))))
    return 2.0 * worst / N


# ---------------------------------------------------------------------------
# loop families over a grid


def _slice_data(section, eps, state, j, x, phases=None):
    """Slice reduction, base and target at x (generic numbers)."""
    d = section.dims
    vals, jac = state.actual_jacobian(x, phases)
    phi = section.phi_at(x, vals[0])
    formal = state.formal(x, phases)
    lam, psi, phi_y, phi_v = slice_terms(phi, formal[0], formal[1:], j, d.m)
    beta_a = formal[0][j]
    beta_b = [formal[r + 1][j] - beta_a * phi_y[r] - phi_v[r] for r in range(d.n)]
    gbar_a = jac[0][j]
    gbar_b = [jac[r + 1][j] - gbar_a * phi_y[r] - phi_v[r] for r in range(d.n)]
    return {
        "value": vals,
        "lam": lam,
        "psi": psi,
        "phi_y": phi_y,
        "phi_v": phi_v,
        "beta_a": beta_a,
        "beta_b": beta_b,
        "gbar_a": gbar_a,
        "gbar_b": gbar_b,
    }


def _hyperbola_grid(lam, psi, eps, shape):
    """Arrays (n, P) of det, m0, kappa, eta."""
    out = []
    with np.errstate(invalid="ignore", divide="ignore"):
        for row in psi:
            det, m0, kappa, eta, _ = hyperbola_terms(lam, row, eps)
            out.append([as_array(v, shape) for v in (det, m0, kappa, eta)])
    return [np.stack([o[i] for o in out]) for i in range(4)]


def _loop_margin(S, data, hyp, t):
    """Slice margin of the ansatz at times t (T,) over grid points (P,)."""
    det, m0, kappa, eta = hyp
    shape = data["beta_a"].shape
    polys = _ansatz(data["beta_a"], data["beta_b"], data["gbar_a"], data["gbar_b"], m0, S)
    tt = t[:, None]
    a = np.broadcast_to(polys[0](tt), (len(t),) + shape)
    worst = np.full(a.shape, np.inf)
    for r in range(len(polys) - 1):
        b = polys[r + 1](tt)
        val = eta[r] ** 2 + kappa[r] ** 2 * a**2 - (b - m0[r] * a) ** 2
        worst = np.minimum(worst, val)
    return worst


def loop_family(section, eps, state, j, grid, options):
    """
    Build the loop family for direction ``j`` of ``state``.

    Shape parameters are global: worst case of the slice data over ``grid``.
    """
    d = section.dims
    x, phases, _ = grid.split()
    shape = x[0].shape
    raw = _slice_data(section, eps, state, j, x, phases)
    data = {
        "beta_a": as_array(raw["beta_a"], shape),
        "beta_b": [as_array(v, shape) for v in raw["beta_b"]],
        "gbar_a": as_array(raw["gbar_a"], shape),
        "gbar_b": [as_array(v, shape) for v in raw["gbar_b"]],
    }
    lam = [as_array(v, shape) for v in raw["lam"]]
    psi = [[as_array(v, shape) for v in row] for row in raw["psi"]]
    hyp = _hyperbola_grid(lam, psi, eps, shape)
    det, m0, kappa, eta = hyp
    if not np.all(det > 0):
        i = int(np.argmin(np.min(det, axis=0)))
        raise LoopSynthesisError(f"empty slice in direction {j + 1} at x = {grid.point(i)}")
    sb = np.stack(data["beta_b"]) - data["beta_a"] * m0
    st = np.stack(data["gbar_b"]) - data["gbar_a"] * m0
    base_b = np.max(np.abs(sb), axis=0)
    eta_x = np.min(eta, axis=0)
    if not np.all(base_b < eta_x):
        i = int(np.argmax(base_b - eta_x))
        raise LoopSynthesisError(
            f"base outside inner tube in direction {j + 1} at x = {grid.point(i)}"
        )
    t = np.linspace(0.0, 1.0, options.loop_samples, endpoint=False)
    if options.amplitude is not None or options.amplitude_scale is not None:
        S = options.amplitude if options.amplitude is not None else options.amplitude_scale / eps
        s0 = float("nan")
    else:
        S, s0 = shape_parameters(
            float(np.min(kappa)),
            float(np.min(eta)),
            float(np.max(base_b)),
            float(np.max(np.abs(st - sb))),
            float(np.max(np.abs(data["beta_a"]))),
            float(np.max(np.abs(data["gbar_a"] - data["beta_a"]))),
            options.theta,
            options.safety,
        )
        if options.tighten and S > 0:
            S = _tighten(S, section, eps, raw, data, lam, psi, shape, options)
    margin = _loop_margin(S, data, hyp, t)
    if not np.all(margin > 0):
        ti, pi = np.unravel_index(int(np.argmin(margin)), margin.shape)
        raise LoopSynthesisError(
            f"loop leaves the slice in direction {j + 1} at x = {grid.point(pi)}, t = {t[ti]:.4g}"
        )
    params = {
        "S": float(S),
        "s0": float(s0),
        "kappa": float(np.min(kappa)),
        "eta": float(np.min(eta)),
        "loop_margin": float(np.min(margin)),
    }

    def terms(xx, phases=None):
        xx = list(xx)
        sd = _slice_data(section, eps, state, j, xx, phases)
        m0x = [hyperbola_terms(sd["lam"], row, eps)[1] for row in sd["psi"]]
        polys = _ansatz(sd["beta_a"], sd["beta_b"], sd["gbar_a"], sd["gbar_b"], m0x, S)
        a = polys[0]
        jet_polys = [a]
        for r in range(d.n):
            b = polys[r + 1]
            py, pv = sd["phi_y"][r], sd["phi_v"][r]
            jet_polys.append(
                TrigPoly(
                    b.c0 + py * a.c0 + pv,
                    [b.cos_[0] + py * a.cos_[0], b.cos_[1]],
                    [b.sin_[0] + py * a.sin_[0]],
                )
            )
        return sd["value"], jet_polys

    return Loop(lambda xx, phases=None: terms(xx, phases)[1], params, terms)


def _tighten(S_hi, section, eps, raw, data, lam, psi, shape, options):
    """Smallest amplitude keeping the loop in the slice at ``rho * eps``."""
    hyp = _hyperbola_grid(lam, psi, options.rho * eps, shape)
    if not np.all(hyp[0] > 0):
        return S_hi
    t = np.linspace(0.0, 1.0, max(64, options.loop_samples // 2), endpoint=False)

    def ok(S):
        return bool(np.all(_loop_margin(S, data, hyp, t) > 0))

    if not ok(S_hi):
        return S_hi
    lo, hi = 0.0, S_hi
    if ok(lo):
        return 0.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-6 * S_hi:
            break
    return min(S_hi, options.slack * hi)


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class SolveOptions:
    """
    Knobs of :func:`solve`.

    Margins are checked on a tensor grid of the cube.  In direct mode the
    axis of every corrugated direction is refined to ``samples_per_period``
    points per period of its corrugation.  In lifted mode (the default for
    ``m >= 2``) each corrugated direction gets a phase axis over one period
    instead, so the cost does not grow with the frequencies.
    """

    resolution: Optional[int] = None
    lift: Optional[bool] = None
    phase_resolution: int = 33
    samples_per_period: int = 64
    max_frequency: int = 1 << 14
    frequency_ratio: int = 4
    frequencies: Optional[tuple] = None
    amplitude: Optional[float] = None
    amplitude_scale: Optional[float] = None
    safety: float = 2.0
    theta: float = 0.81
    tighten: bool = True
    rho: float = 0.9
    slack: float = 1.1
    loop_samples: int = 256
    refine: bool = True
    inflate: bool = True
    cushion: Optional[float] = None

    def lifted(self, m):
        return m >= 2 if self.lift is None else bool(self.lift)

    def required(self, m, eps):
        """Cell bound a stage must exceed: ``cushion * eps``."""
        c = self.cushion
        if c is None:
            c = 0.02 if self.lifted(m) else 0.0
        return c * eps

    def grid(self, m, frequencies=None):
        """Check grid once the directions in ``frequencies`` are corrugated."""
        frequencies = frequencies or {}
        if self.lifted(m):
            res = self.resolution or LIFTED_RESOLUTION.get(m, 5)
            return Grid.cube(m, res, tuple(sorted(frequencies)), self.phase_resolution)
        res = self.resolution or DIRECT_RESOLUTION.get(m, 17)
        axes = []
        for i in range(m):
            n = res
            if i in frequencies:
                n = max(n, self.samples_per_period * int(frequencies[i]) + 1)
            axes.append(np.linspace(0.0, 1.0, n))
        return Grid(tuple(axes))


DIRECT_RESOLUTION = {1: 513, 2: 129, 3: 33}
LIFTED_RESOLUTION = {1: 65, 2: 9, 3: 5}


def stage_margins(section, eps, state, grid):
    """Relation margins of the mixed jet of ``state`` at the grid points."""
    x, phases, _ = grid.split()
    vals, cols = state.mixed_jet(x, phases)
    return rha_margins(section, eps, x, vals[0], vals[1:], cols[0], cols[1:])


def inflation_check(margins, grid):
    """
    Per clause: worst margin and where it sits, the numerical Lipschitz bound
    ``L`` of the margin over the grid with the global inflation ``L * diam``,
    and ``cell_bound``, the smallest over grid cells of

        min(vertex margins) - sum_a L_a h_a

    with ``L_a`` the largest finite-difference slope along axis ``a`` on the
    cell and its neighbours and ``h_a`` the spacing.  ``cell_bound > 0`` is
    the pass condition.
    """
    out = {}
    diam = float(np.sqrt(sum(s * s for s in grid.spacing)))
    for name, arr in margins.items():
        arr = np.asarray(arr, dtype=float).reshape(grid.shape)
        L = lipschitz_estimate(arr, grid.spacing)
        worst = float(np.min(arr))
        idx = int(np.argmin(arr))
        out[name] = {
            "worst_margin": worst,
            "worst_point": grid.point(idx),
            "lipschitz": L,
            "inflation": L * diam,
            "cell_bound": cell_bound(arr, grid.spacing),
        }
    return out


def lipschitz_estimate(arr, spacing):
    """Euclidean combination of the max finite-difference slopes per axis."""
    total = 0.0
    for ax, h in enumerate(spacing):
        if arr.shape[ax] < 2 or h == 0:
            continue
        slope = float(np.max(np.abs(np.diff(arr, axis=ax)))) / h
        total += slope * slope
    return float(np.sqrt(total))


def _pair_reduce(arr, axis, op):
    n = arr.shape[axis]
    lo = np.take(arr, np.arange(n - 1), axis=axis)
    hi = np.take(arr, np.arange(1, n), axis=axis)
    return op(lo, hi)


def cell_bound(arr, spacing):
    """Lower bound of the margin over every grid cell; see :func:`inflation_check`."""
    arr = np.asarray(arr, dtype=float)
    active = [a for a, h in enumerate(spacing) if arr.shape[a] > 1 and h > 0]
    if not active:
        return float(np.min(arr))
    cmin = arr
    for a in active:
        cmin = _pair_reduce(cmin, a, np.minimum)
    drop = np.zeros_like(cmin)
    size = [3 if ax in active else 1 for ax in range(arr.ndim)]
    for a in active:
        D = np.abs(np.diff(arr, axis=a))
        for b in active:
            if b != a:
                D = _pair_reduce(D, b, np.maximum)
        drop = drop + ndimage.maximum_filter(D, size=size, mode="nearest")
    return float(np.min(cmin - drop))


def _passes(report, inflate, floor=0.0):
    key = "cell_bound" if inflate else "worst_margin"
    return all(c[key] > floor for c in report.values())


def solve(section, eps, options=None):
    """
    Solve ``R_ha(sigma, eps)`` from the canonical formal solution by
    corrugating the coordinate directions one after another.

    Returns the resulting :class:`HolonomicPair`; ``pair.record`` holds the
    per-direction frequencies, loop parameters, margins and residuals.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    options = options or SolveOptions()
    d = section.dims
    state = canonical_formal_solution(section)
    records = []
    loops = {}
    freqs = {}
    prev_N = None
    for j in range(d.m):
        loop = loop_family(section, eps, state, j, options.grid(d.m, freqs), options)

        def attempt(N, state=state, loop=loop, j=j):
            grid = options.grid(d.m, {**freqs, j: N})
            new = corrugate(state, j, loop, N)
            report = inflation_check(stage_margins(section, eps, new, grid), grid)
            return new, report

        if options.frequencies is not None:
            N = int(options.frequencies[j])
            new, report = attempt(N)
            tried = [N]
        else:
            start = 1 if prev_N is None else options.frequency_ratio * prev_N
            N, new, report, tried = _search(attempt, start, options, j, options.required(d.m, eps))
        grid = options.grid(d.m, {**freqs, j: N})
        own, cross = corrugation_residual(state, new, j, loop, N, grid, split=True)
        displacement = _displacement(state, new, grid)
        rec = {
            "direction": j + 1,
            "N": N,
            "tried": tried,
            "loop": loop.params,
            "margins": report,
            "residual": max(own, cross),
            "residual_own": own,
            "residual_cross": cross,
            "displacement": displacement,
            "displacement_bound": displacement_bound(loop, N, grid),
            "grid": list(grid.shape),
            "passed": _passes(report, options.inflate, options.required(d.m, eps)),
        }
        log.info("direction %d: N=%d residual=%.3g", j + 1, N, rec["residual"])
        records.append(rec)
        loops[j] = loop
        state = new
        freqs[j] = N
        prev_N = N
    pair = state.pair()
    pair.record.update(
        {
            "directions": records,
            "loops": loops,
            "eps": eps,
            "lifted": options.lifted(d.m),
            "frequencies": dict(freqs),
            "grid_options": {
                "resolution": options.resolution,
                "lift": options.lifted(d.m),
                "phase_resolution": options.phase_resolution,
                "samples_per_period": options.samples_per_period,
            },
        }
    )
    return pair


def _search(attempt, start, options, j, floor=0.0):
    tried = []
    N = start
    lo = None
    last = None
    while True:
        if N > options.max_frequency:
            raise FrequencySearchError(
                f"direction {j + 1}: no frequency <= {options.max_frequency} verifies"
                + (f" (last tried {tried[-1]}: {_worst_clause(last)})" if last else "")
            )
        new, report = attempt(N)
        tried.append(N)
        last = report
        if _passes(report, options.inflate, floor):
            break
        lo = N
        N *= 2
    best = (N, new, report)
    if options.refine and lo is not None:
        lo_, hi = lo, N
        while hi - lo_ > 1:
            mid = (lo_ + hi) // 2
            cand, rep = attempt(mid)
            tried.append(mid)
            if _passes(rep, options.inflate, floor):
                hi = mid
                best = (mid, cand, rep)
            else:
                lo_ = mid
    return best + (tried,)


def _worst_clause(report):
    name = min(report, key=lambda k: report[k]["cell_bound"])
    c = report[name]
    return (
        f"clause {name} margin {c['worst_margin']:.3g} (cell bound {c['cell_bound']:.3g})"
        f" at {c['worst_point']}"
    )


def _displacement(old, new, grid):
    x, phases, _ = grid.split()
    a = old.value(x, phases)
    b = new.value(x, phases)
    shape = x[0].shape
    return max(float(np.max(np.abs(as_array(u, shape) - as_array(v, shape)))) for u, v in zip(a, b))

