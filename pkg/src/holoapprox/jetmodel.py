"""
Data model: the cube ``A = [0,1]^m x {0} x {0}``, its graph deformations,
sections of the 1-jet bundle, formal solutions and evaluation grids.

Points of the source are split as ``(x, y, z)`` with ``x`` in R^m, ``y`` real
and ``z`` in R^k.  Every callable in this module takes ``x`` as a list of m
numbers (floats, arrays of grid values, or dual numbers) and is written so that
it can be differentiated by :func:`holoapprox.numcore.jacobian`.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr
from .numcore import base_value, jacobian

__all__ = [
    "DeformedCube",
    "Dims",
    "FormalSolutionState",
    "Grid",
    "HolonomicPair",
    "JetSection",
    "canonical_formal_solution",
    "lift_phase",
    "tangent_space",
]


@dataclass(frozen=True)
class Dims:
    m: int
    k: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.k < 0 or self.n < 1:
            raise ValueError(f"invalid dimensions m={self.m}, k={self.k}, n={self.n}")

    @property
    def source(self):
        return self.m + 1 + self.k

    def variables(self):
        return (
            [f"x{i + 1}" for i in range(self.m)]
            + ["y"]
            + [f"z{i + 1}" for i in range(self.k)]
        )


@dataclass(frozen=True)
class JetSection:
    """
    A section ``sigma = (f, phi)`` of J^1(R^m x R x R^k, R^n) given by
    expressions: ``f`` has n entries, ``phi`` is an n x (m+1+k) matrix.
    """

    f: tuple
    phi: tuple
    dims: Dims
    margin: float = 0.1

    def __post_init__(self):
        d = self.dims
        if len(self.f) != d.n:
            raise ValueError(f"f needs {d.n} components, got {len(self.f)}")
        if len(self.phi) != d.n or any(len(row) != d.source for row in self.phi):
            raise ValueError(f"phi must be a {d.n} x {d.source} matrix")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        allowed = set(d.variables())
        for e in list(self.f) + [e for row in self.phi for e in row]:
            extra = expr.free_variables(e) - allowed
            if extra:
                raise expr.UnknownIdentifierError(
                    f"undeclared variable(s) {sorted(extra)}", 1, 1
                )

    @classmethod
    def from_strings(cls, f, phi, m, k, n, margin=0.1):
        dims = Dims(m, k, n)
        names = dims.variables()
        fe = tuple(expr.parse(s, names) for s in f)
        pe = tuple(tuple(expr.parse(s, names) for s in row) for row in phi)
        section = cls(fe, pe, dims, margin)
        section.check_domain()
        return section

    def _bind(self, x, y, z):
        d = self.dims
        point = {f"x{i + 1}": x[i] for i in range(d.m)}
        point["y"] = y
        point.update({f"z{i + 1}": z[i] for i in range(d.k)})
        return point

    def f_at(self, x, y=0.0, z=None):
        z = [0.0] * self.dims.k if z is None else z
        point = self._bind(x, y, z)
        return [expr.evaluate(e, point) for e in self.f]

    def phi_at(self, x, y=0.0, z=None):
        z = [0.0] * self.dims.k if z is None else z
        point = self._bind(x, y, z)
        return [[expr.evaluate(e, point) for e in row] for row in self.phi]

    def check_domain(self, per_axis=5):
        """Evaluate everything on a coarse sample of the thickened cube."""
        d = self.dims
        r = self.margin
        per_axis = max(2, int(per_axis ** (3.0 / min(3, d.source))))
        axes = [np.linspace(-r, 1 + r, per_axis)] * d.m + [np.linspace(-r, r, 3)] * (1 + d.k)
        pts = [a.ravel() for a in np.meshgrid(*axes, indexing="ij")]
        x, y, z = pts[: d.m], pts[d.m], pts[d.m + 1 :]
        self.f_at(x, y, z)
        self.phi_at(x, y, z)


@dataclass(frozen=True)
class HolonomicPair:
    """
    The pair ``(delta, h)`` as one map ``x -> [delta, h_1, ..., h_n]``.

    Derivatives come from dual-number evaluation of the closed form.  The
    optional ``phases`` (direction -> array) replace the fast variables
    ``N_j x_j mod 1`` of the corrugations by free values; see
    :func:`lift_phase`.
    """

    fn: Callable
    dims: Dims
    record: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, phases=None):
        return self.fn(list(x), phases)

    def delta(self, x, phases=None):
        return self.fn(list(x), phases)[0]

    def h(self, x, phases=None):
        return self.fn(list(x), phases)[1:]

    def jet(self, x, phases=None):
        """``(delta, h, grad delta, dh)`` with ``dh[i][j] = d h_i / d x_j``."""
        vals, jac = jacobian(lambda v: self.fn(v, phases), list(x))
        return vals[0], vals[1:], jac[0], jac[1:]


@dataclass(frozen=True)
class DeformedCube:
    """Graph ``{(x, delta(x), 0)}`` of ``delta`` over the cube."""

    delta: Callable
    dims: Dims

    def point(self, x):
        return list(x) + [self.delta(list(x))] + [0.0] * self.dims.k


def tangent_space(cube, x):
    """Rows ``(e_i, d_i delta(x), 0)`` spanning the tangent space at ``x``."""
    d = cube.dims
    _, jac = jacobian(lambda v: [cube.delta(v)], [float(t) for t in x])
    out = np.zeros((d.m, d.source))
    for i in range(d.m):
        out[i, i] = 1.0
        out[i, d.m] = float(jac[0][i])
    return out


@dataclass(frozen=True)
class FormalSolutionState:
    """
    A section of J^1(R^m, R x R^n): the value ``x -> [delta, h...]`` and a
    formal derivative ``x -> (1+n) x m`` matrix (as nested lists).

    Both callables take ``(x, phases=None)``; ``phases`` is forwarded to every
    corrugation in the history.
    """

    value: Callable
    formal: Callable
    dims: Dims
    holonomic: frozenset = frozenset()
    history: tuple = ()

    def actual_jacobian(self, x, phases=None):
        return jacobian(lambda v: self.value(v, phases), list(x))

    def mixed_jet(self, x, phases=None):
        """
        Value and derivative where holonomic directions use the actual partial
        derivatives and the others the formal columns.
        """
        vals, jac = self.actual_jacobian(x, phases)
        if len(self.holonomic) == self.dims.m:
            return vals, jac
        formal = self.formal(list(x), phases)
        cols = [
            [jac[r][j] if j in self.holonomic else formal[r][j] for j in range(self.dims.m)]
            for r in range(1 + self.dims.n)
        ]
        return vals, cols

    def pair(self):
        return HolonomicPair(self.value, self.dims, {"history": self.history})


def canonical_formal_solution(section):
    """``x -> ((0, f(x,0,0)), (0, phi(x,0,0) restricted to R^m))``."""
    d = section.dims

    def value(x, phases=None):
        return [0.0] + section.f_at(x, 0.0)

    def formal(x, phases=None):
        phi = section.phi_at(x, 0.0)
        return [[0.0] * d.m] + [row[: d.m] for row in phi]

    return FormalSolutionState(value, formal, d)


def lift_phase(T, phases, j):
    """
    Replace the value of the fast variable ``T = N x_j`` by ``phases[j]``,
    keeping its derivatives.

    Corrugation terms are 1-periodic in ``T``, so the actual map is the lifted
    one restricted to ``phases[j] = N x_j mod 1``.
    """
    if not phases or j not in phases:
        return T
    return T + (np.asarray(phases[j], dtype=float) - base_value(T))


@dataclass(frozen=True)
class Grid:
    """
    Tensor grid given by one 1-D array per axis.

    The first ``m`` axes are source coordinates.  When ``lifted`` lists
    directions, the next ``len(lifted)`` axes are the phases of those
    directions over ``[0, 1]``; any remaining axes belong to the caller.
    """

    axes: tuple
    lifted: tuple = ()
    m: Optional[int] = None

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", len(self.axes) - len(self.lifted))

    @classmethod
    def cube(cls, m, resolution, lifted=(), phase_resolution=33):
        axes = [np.linspace(0.0, 1.0, int(resolution)) for _ in range(m)]
        axes += [np.linspace(0.0, 1.0, int(phase_resolution)) for _ in lifted]
        return cls(tuple(axes), tuple(lifted), m)

    def extend(self, extra_axes):
        """Same grid with trailing axes appended."""
        return Grid(tuple(self.axes) + tuple(extra_axes), self.lifted, self.m)

    def split(self, coords=None):
        """``(x, phases, rest)`` from the flattened coordinates."""
        coords = self.coordinates() if coords is None else coords
        m, q = self.m, len(self.lifted)
        phases = {j: coords[m + r] for r, j in enumerate(self.lifted)} or None
        return coords[:m], phases, coords[m + q :]

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self):
        return tuple(float(a[1] - a[0]) if len(a) > 1 else 0.0 for a in self.axes)

    def coordinates(self):
        """List of flattened coordinate arrays, one per axis."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return [g.ravel() for g in mesh]

    def point(self, flat_index):
        idx = np.unravel_index(flat_index, self.shape)
        return [float(a[i]) for a, i in zip(self.axes, idx)]


def as_array(v, shape):
    """Broadcast a (possibly scalar) evaluation result to a float array."""
    return np.broadcast_to(np.asarray(v, dtype=float), shape)

