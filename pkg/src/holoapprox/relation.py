"""
The holonomic approximation relation ``R_ha(sigma, eps)`` in
J^1(R^m, R x R^n) and the affine geometry of its principal slices.

A jet ``(x, (y, w), (Y, W))`` belongs to the relation when

* ``|y| < eps``,
* ``|w - f(x, y, 0)|_sup < eps``,
* the restriction of ``W o p_m - phi(x, y, 0)`` to the graph of ``Y`` has
  operator norm (Euclidean source, sup target) below ``eps``.

Fixing all columns of ``(Y, W)`` but the j-th gives a principal slice.  In the
chart ``(a, b)`` used here the slice is the set ``Omega(lam, psi, eps)`` of
``(a, b)`` with ``|u' b + psi u|^2 < eps^2 (u'^2 + |u|^2 + (a u' + lam u)^2)``
for all non-zero ``(u, u')``, and each target component of it is the inside of
a hyperbola ``(b_j - m0_j a)^2 - kappa_j^2 a^2 < eta_j^2``.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import numcore
from .jetmodel import as_array
from .numcore import rank_one_inverse_quadratic

__all__ = [
    "AffineChart",
    "AmplenessCertificate",
    "EmptySliceError",
    "HyperbolaParams",
    "JetPoint",
    "Membership",
    "SliceSpec",
    "ampleness_certificate",
    "hull_contains",
    "hyperbola_params",
    "hyperbola_terms",
    "restricted_norm",
    "rha_margins",
    "rha_member",
    "slice_from_state",
    "slice_hyperbolas",
    "slice_margin",
    "slice_member",
]

COLLINEAR_TOL = 1e-10


class EmptySliceError(ValueError):
    pass


@dataclass(frozen=True)
class JetPoint:
    """``(x, (y, w), (Y, W))`` with ``Y`` a row of length m, ``W`` n x m."""

    x: np.ndarray
    y: float
    w: np.ndarray
    Y: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        for name in ("x", "w", "Y", "W"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "W", self.W.reshape(len(self.w), len(self.x)))
        if self.Y.shape != self.x.shape:
            raise ValueError("Y must have one entry per source coordinate")


@dataclass(frozen=True)
class Membership:
    member: bool
    margin: float
    clauses: dict


def restricted_norm(M, Y):
    """
    Norm of ``u -> M u`` on the graph of ``Y``, measured with the Euclidean
    norm of ``(u, Y u)`` and the sup norm on the target.

    ``M`` has shape ``(n, m, ...)``, ``Y`` shape ``(m, ...)``.
    """
    M = np.asarray(M, dtype=float)
    per = np.stack([np.sqrt(rank_one_inverse_quadratic(M[i], Y)) for i in range(M.shape[0])])
    return per.max(axis=0)


def rha_margins(section, eps, x, y, w, Y, W):
    """
    Clause margins ``eps - attained`` of the relation, vectorized.

    ``x``, ``Y``: lists of m arrays; ``y``: array; ``w``: list of n arrays;
    ``W``: n lists of m arrays.  Returns a dict of arrays keyed by
    ``"height"`` (|y|), ``"value"`` (|w - f|) and ``"slope"`` (restricted
    norm).
    """
    d = section.dims
    shape = np.broadcast(*[np.asarray(v) for v in list(x) + [y]]).shape
    y = as_array(y, shape)
    f = section.f_at(x, y)
    phi = section.phi_at(x, y)
    value_gap = np.stack([np.abs(as_array(w[i], shape) - as_array(f[i], shape)) for i in range(d.n)])
    Ya = np.stack([as_array(Y[j], shape) for j in range(d.m)])
    M = np.stack(
        [
            np.stack(
                [
                    as_array(W[i][j], shape)
                    - as_array(phi[i][j], shape)
                    - as_array(phi[i][d.m], shape) * Ya[j]
                    for j in range(d.m)
                ]
            )
            for i in range(d.n)
        ]
    )
    return {
        "height": eps - np.abs(y),
        "value": eps - value_gap.max(axis=0),
        "slope": eps - restricted_norm(M, Ya),
    }


def rha_member(section, eps, p):
    """Membership of the jet ``p`` with per-clause margins."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    margins = rha_margins(
        section,
        eps,
        list(p.x),
        p.y,
        list(p.w),
        list(p.Y),
        [list(row) for row in p.W],
    )
    clauses = {k: float(np.asarray(v).reshape(-1)[0]) for k, v in margins.items()}
    worst = min(clauses.values())
    return Membership(worst > 0, worst, clauses)


# ---------------------------------------------------------------------------
# slices


@dataclass(frozen=True)
class SliceSpec:
    lam: np.ndarray
    psi: np.ndarray
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 1:
            psi = psi.reshape(1, lam.size)
        if psi.ndim != 2 or psi.shape[1] != lam.size:
            raise ValueError(f"psi must have shape (n, {lam.size})")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "psi", psi)

    @property
    def n(self):
        return self.psi.shape[0]


@dataclass(frozen=True)
class AffineChart:
    """
    Slice coordinates ``(a, b)`` versus the free column ``(Y_j, W_j)``:
    ``Y_j = a`` and ``W_j = b + a phi_y + phi_v``.
    """

    phi_y: np.ndarray
    phi_v: np.ndarray

    def to_jet(self, a, b):
        return a, np.asarray(b) + a * self.phi_y + self.phi_v

    def from_jet(self, Yj, Wj):
        return Yj, np.asarray(Wj) - Yj * self.phi_y - self.phi_v


def slice_terms(phi, Ycols, Wcols, j, m):
    """
    Generic-number version of the slice reduction.

    ``phi`` is the n x (m+1+k) value of the section's derivative, ``Ycols``
    the m entries of Y and ``Wcols`` the n x m matrix W (the j-th columns are
    ignored).  Returns ``(lam, psi, phi_y, phi_v)`` as nested lists.
    """
    others = [i for i in range(m) if i != j]
    n = len(phi)
    lam = [Ycols[i] for i in others]
    psi = [
        [Wcols[r][i] - phi[r][i] - phi[r][m] * Ycols[i] for i in others]
        for r in range(n)
    ]
    phi_y = [phi[r][m] for r in range(n)]
    phi_v = [phi[r][j] for r in range(n)]
    return lam, psi, phi_y, phi_v


def slice_from_state(section, eps, x, base, j):
    """
    Principal slice through the jet ``base`` whose free column is ``j``.

    Returns the slice spec and the affine chart from slice coordinates back to
    the column ``(Y_j, W_j)``.
    """
    d = section.dims
    if not 0 <= j < d.m:
        raise ValueError(f"direction {j} out of range for m={d.m}")
    phi = np.asarray(section.phi_at([float(t) for t in x], float(base.y)), dtype=float)
    phi = np.broadcast_to(phi, (d.n, d.source))
    lam, psi, phi_y, phi_v = slice_terms(phi, list(base.Y), [list(r) for r in base.W], j, d.m)
    spec = SliceSpec(np.array(lam, dtype=float), np.array(psi, dtype=float).reshape(d.n, d.m - 1), eps)
    return spec, AffineChart(np.array(phi_y, dtype=float), np.array(phi_v, dtype=float))


# ---------------------------------------------------------------------------
# hyperbola geometry


@dataclass(frozen=True)
class HyperbolaParams:
    m0: float
    kappa: float
    eta: float
    K: float = float("nan")
    empty: bool = False


def _dot(u, v):
    out = 0.0
    for a, b in zip(u, v):
        out = out + a * b
    return out


def hyperbola_terms(lam, mu, eps):
    """
    Hyperbola data of the one-component slice from the explicit inverse of
    ``A = Id + lam lam^T - mu mu^T`` on ``span(lam, mu)``.

    Works on lists of floats, arrays or dual numbers.  Returns
    ``(det, m0, kappa, eta, K)`` in unscaled coordinates; the slice is empty
    exactly where ``det <= 0`` (other outputs are then meaningless).
    """
    mu = [v / eps for v in mu]
    L = _dot(lam, lam)
    M = _dot(mu, mu)
    c = _dot(lam, mu)
    det = (1.0 + L) * (1.0 - M) + c * c
    lal = ((1.0 - M) * L + c * c) / det
    mam = ((1.0 + L) * M - c * c) / det
    lam_mu = c / det
    return _finish(det, lal, mam, lam_mu, eps)


def _finish(det, lal, mam, lam_mu, eps):
    N2 = 1.0 + mam
    K = 1.0 + lam_mu * lam_mu / N2 - lal
    m0 = lam_mu / N2
    if isinstance(K, float) and K < 0:
        K = float("nan")
    kappa = numcore.sqrt(K / N2)
    eta = 1.0 / numcore.sqrt(N2)
    return det, eps * m0, eps * kappa, eps * eta, K


def hyperbola_params(lam, mu, eps):
    """
    Closed-form ``(m0, kappa, eta)`` with
    ``Omega(lam, mu, eps) = {(b - m0 a)^2 - kappa^2 a^2 < eta^2}``.

    The collinear case ``mu = k lam`` (including ``lam = 0``) is handled by
    its own formulas; near the switch both branches are evaluated and must
    agree.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    lam = np.asarray(lam, dtype=float).reshape(-1)
    mu_s = np.asarray(mu, dtype=float).reshape(-1) / eps
    if lam.shape != mu_s.shape:
        raise ValueError("lam and mu must have the same length")
    L = float(lam @ lam)
    M = float(mu_s @ mu_s)
    c = float(lam @ mu_s)
    gram = L * M - c * c
    collinear = L == 0.0 or M == 0.0 or gram <= COLLINEAR_TOL * L * M
    if collinear:
        if L == 0.0:
            det = 1.0 - M
            lal, lam_mu = 0.0, 0.0
            mam = M / det if det > 0 else float("nan")
        else:
            k = c / L
            det = 1.0 + (1.0 - k * k) * L
            lal, lam_mu, mam = (L / det, k * L / det, k * k * L / det) if det > 0 else (np.nan,) * 3
    else:
        det = (1.0 + L) * (1.0 - M) + c * c
        lal = ((1.0 - M) * L + c * c) / det
        mam = ((1.0 + L) * M - c * c) / det
        lam_mu = c / det
    if det <= 0:
        return HyperbolaParams(float("nan"), float("nan"), float("nan"), float("nan"), True)
    if L > 0 and M > 0 and gram <= 1e3 * COLLINEAR_TOL * L * M:
        # continuity cross-check across the branch switch
        other = hyperbola_terms(lam, mu_s, 1.0)
        here = _finish(det, lal, mam, lam_mu, 1.0)
        for u, v in zip(here[1:], other[1:]):
            if abs(u - v) > 1e-6 * max(1.0, abs(u)):
                raise ArithmeticError("collinear and generic hyperbola formulas disagree")
    _, m0, kappa, eta, K = _finish(det, lal, mam, lam_mu, eps)
    return HyperbolaParams(float(m0), float(kappa), float(eta), float(K), False)


def slice_hyperbolas(spec):
    """Per-component ``HyperbolaParams`` of a slice."""
    return [hyperbola_params(spec.lam, spec.psi[j], spec.eps) for j in range(spec.n)]


def slice_margin(spec, a, b):
    """
    ``min_j eta_j^2 + kappa_j^2 a^2 - (b_j - m0_j a)^2``; positive exactly on
    the slice.  ``b`` has shape ``(n, ...)``.  ``-inf`` for an empty slice.
    """
    params = slice_hyperbolas(spec)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape((spec.n,) + a.shape)
    if any(p.empty for p in params):
        return np.full(a.shape, -np.inf)
    vals = [p.eta**2 + p.kappa**2 * a**2 - (b[j] - p.m0 * a) ** 2 for j, p in enumerate(params)]
    return np.min(np.stack(vals), axis=0)


def slice_member(spec, a, b):
    return bool(np.all(slice_margin(spec, a, b) > 0))


# ---------------------------------------------------------------------------
# ampleness


@dataclass
class AmplenessCertificate:
    m0: np.ndarray
    kappa: float
    eta: float
    points: np.ndarray = None
    target: np.ndarray = None
    radius: float = 0.0
    hull_ok: bool = None
    members_ok: bool = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return bool(self.hull_ok) and bool(self.members_ok)


def hull_contains(points, target):
    """Linear feasibility: is ``target`` a convex combination of ``points``?"""
    points = np.asarray(points, dtype=float)
    target = np.asarray(target, dtype=float)
    A_eq = np.vstack([points.T, np.ones((1, len(points)))])
    b_eq = np.concatenate([target, [1.0]])
    res = linprog(np.zeros(len(points)), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return bool(res.status == 0)


def ampleness_certificate(spec, target=None, radius=1.0):
    """
    Inner hyperbolic set of the slice and, for a target point, a finite set of
    slice points whose convex hull contains the ball of ``radius`` around it.

    The points sit on two cubes ``a = +-A``, ``|b - a m0|_sup <= kappa' A``
    with ``kappa' = kappa / 2``, inside the inner set
    ``|b - a m0|_sup^2 - kappa^2 a^2 < eta^2``.
    """
    params = slice_hyperbolas(spec)
    if any(p.empty for p in params):
        raise EmptySliceError("slice is empty")
    m0 = np.array([p.m0 for p in params])
    kappa = min(p.kappa for p in params)
    eta = min(p.eta for p in params)
    cert = AmplenessCertificate(m0, kappa, eta)
    if target is None:
        return cert
    target = np.asarray(target, dtype=float)
    ga, gb = target[0], target[1:]
    kp = 0.5 * kappa
    sheared = gb - ga * m0
    A = max(abs(ga) + radius, (numcore.sup_norm(sheared) + radius * (1 + numcore.sup_norm(m0))) / kp)
    A = max(A, 1e-12)
    pts = []
    for sa in (-1.0, 1.0):
        for corner in itertools.product((-1.0, 1.0), repeat=spec.n):
            a = sa * A
            pts.append(np.concatenate([[a], kp * A * np.array(corner) + a * m0]))
    pts = np.array(pts)
    inner = np.array([numcore.sup_norm(p[1:] - p[0] * m0) ** 2 - kappa**2 * p[0] ** 2 < eta**2 for p in pts])
    member = slice_margin(spec, pts[:, 0], pts[:, 1:].T) > 0
    corners = [target + radius * np.array(c) for c in itertools.product((-1.0, 1.0), repeat=spec.n + 1)]
    feasible = [hull_contains(pts, c) for c in corners]
    cert.points = pts
    cert.target = target
    cert.radius = float(radius)
    cert.hull_ok = all(feasible)
    cert.members_ok = bool(np.all(inner) and np.all(member))
    cert.details = {"A": A, "kappa_prime": kp, "corners_checked": len(corners)}
    return cert
