"""
Small-scale numerics shared by the rest of the package.

Norm conventions: the target space carries the sup norm, the source space the
Euclidean norm.  Operator norms from a Euclidean source into a sup-norm target
therefore split into one Euclidean row norm per target component.

The forward-mode differentiation here uses tagged dual numbers so that
derivatives can be nested to any order: a closed form that internally takes a
Jacobian can itself be differentiated.  Leaves may be Python floats or numpy
arrays, so a single evaluation runs over a whole grid at once.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dual",
    "DualScalar",
    "TrigPoly",
    "base_value",
    "cos",
    "euclid_norm",
    "exp",
    "fabs",
    "integrate_trigpoly",
    "jacobian",
    "rank_one_inverse_quadratic",
    "seed",
    "simpson",
    "sin",
    "sqrt",
    "sup_norm",
]

_tags = itertools.count(1)


def sup_norm(v):
    """Max absolute entry; 0 for the empty vector."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(v)))


def euclid_norm(v):
    v = np.asarray(v, dtype=float).ravel()
    return float(np.sqrt(np.dot(v, v)))


def rank_one_inverse_quadratic(mvec, y):
    """
    Return ``m^T (I + y y^T)^{-1} m`` without forming a matrix.

    Uses ``(I + y y^T)^{-1} = I - y y^T / (1 + |y|^2)``.  Both arguments may
    carry trailing batch axes (shape ``(d, ...)``); the contraction is over the
    first axis.
    """
    mvec = np.asarray(mvec, dtype=float)
    y = np.asarray(y, dtype=float)
    if mvec.shape[:1] != y.shape[:1]:
        raise ValueError(f"dimension mismatch: {mvec.shape[0]} vs {y.shape[0]}")
    mm = np.sum(mvec * mvec, axis=0)
    my = np.sum(mvec * y, axis=0)
    yy = np.sum(y * y, axis=0)
    out = mm - my * my / (1.0 + yy)
    # cancellation can leave a tiny negative
    return np.maximum(out, 0.0)


# ---------------------------------------------------------------------------
# dual numbers


class Dual:
    """
    First-order dual number ``val + sum_i eps[i] * d_i`` with a nesting tag.

    ``val`` and the entries of ``eps`` are floats, arrays, or Duals with a
    smaller tag.  Between Duals of different tags, the larger tag is the outer
    one and the other operand is treated as a constant.
    """

    __slots__ = ("val", "eps", "tag")
    __array_ufunc__ = None

    def __init__(self, val, eps, tag):
        self.val = val
        self.eps = tuple(eps)
        self.tag = tag

    def __repr__(self):
        return f"Dual(tag={self.tag}, val={self.val!r}, eps={self.eps!r})"

    @property
    def value(self):
        return self.val

    @property
    def partials(self):
        return self.eps

    def _lift(self, c, fv, fe):
        # c is a constant at this level
        return Dual(fv(self.val, c), [fe(e, c) for e in self.eps], self.tag)

    def __add__(self, o):
        if isinstance(o, Dual) and o.tag == self.tag:
            return Dual(self.val + o.val, [a + b for a, b in zip(self.eps, o.eps)], self.tag)
        if isinstance(o, Dual) and o.tag > self.tag:
            return o.__radd__(self)
        return Dual(self.val + o, self.eps, self.tag)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, [-e for e in self.eps], self.tag)

    def __pos__(self):
        return self

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Dual) and o.tag == self.tag:
            return Dual(
                self.val * o.val,
                [a * o.val + self.val * b for a, b in zip(self.eps, o.eps)],
                self.tag,
            )
        if isinstance(o, Dual) and o.tag > self.tag:
            return o.__rmul__(self)
        return Dual(self.val * o, [e * o for e in self.eps], self.tag)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual) and o.tag >= self.tag:
            return self * o._reciprocal()
        return Dual(self.val / o, [e / o for e in self.eps], self.tag)

    def __rtruediv__(self, o):
        return self._reciprocal() * o

    def _reciprocal(self):
        inv = 1.0 / self.val
        d = -(inv * inv)
        return Dual(inv, [d * e for e in self.eps], self.tag)

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        if p == 2:
            return self * self
        if float(p).is_integer() and p >= 0:
            out = 1.0
            for _ in range(int(p)):
                out = self * out
            return out
        vp = self.val ** p
        d = p * self.val ** (p - 1)
        return Dual(vp, [d * e for e in self.eps], self.tag)

    def __rpow__(self, c):
        return exp(self * log(c))


DualScalar = Dual


def base_value(v):
    """Innermost (non-dual) value."""
    while isinstance(v, Dual):
        v = v.val
    return v


def _unary(np_fn, deriv):
    def fn(v):
        if isinstance(v, Dual):
            d = deriv(v.val)
            return Dual(fn(v.val), [d * e for e in v.eps], v.tag)
        return np_fn(v)

    return fn


sin = _unary(np.sin, lambda v: cos(v))
cos = _unary(np.cos, lambda v: -sin(v))
exp = _unary(np.exp, lambda v: exp(v))
log = _unary(np.log, lambda v: 1.0 / v)
sqrt = _unary(np.sqrt, lambda v: 0.5 / sqrt(v))
fabs = _unary(np.abs, lambda v: np.sign(base_value(v)))


def seed(values, tag=None):
    """Wrap ``values`` as independent active variables sharing a fresh tag."""
    if tag is None:
        tag = next(_tags)
    n = len(values)
    return [Dual(v, [1.0 if i == j else 0.0 for j in range(n)], tag) for i, v in enumerate(values)]


def jacobian(fn, x):
    """
    Evaluate ``fn`` (list of numbers -> list of numbers) and its Jacobian.

    Returns ``(values, J)`` with ``J[i][j] = d values[i] / d x[j]``.  Inputs
    may themselves be dual numbers, in which case the results carry their
    derivatives (nested differentiation).
    """
    tag = next(_tags)
    xs = seed(list(x), tag)
    out = fn(xs)
    values, jac = [], []
    for o in out:
        if isinstance(o, Dual) and o.tag == tag:
            values.append(o.val)
            jac.append(list(o.eps))
        else:
            values.append(o)
            jac.append([0.0] * len(xs))
    return values, jac


# ---------------------------------------------------------------------------
# trigonometric polynomials


@dataclass
class TrigPoly:
    """
    ``c0 + sum_l cos_[l-1] cos(2 pi l t) + sin_[l-1] sin(2 pi l t)``, period 1.

    Coefficients may be floats, arrays or dual numbers (for families indexed by
    a base point).
    """

    c0: object = 0.0
    cos_: list = field(default_factory=list)
    sin_: list = field(default_factory=list)

    @property
    def degree(self):
        return max(len(self.cos_), len(self.sin_))

    def __call__(self, t):
        out = self.c0
        for l, c in enumerate(self.cos_, 1):
            out = out + c * cos(2 * np.pi * l * t)
        for l, s in enumerate(self.sin_, 1):
            out = out + s * sin(2 * np.pi * l * t)
        return out

    def mean(self):
        return self.c0

    def antiderivative(self, t):
        """Primitive vanishing at 0."""
        out = self.c0 * t
        return out + self.oscillating_integral(t)

    def oscillating_integral(self, t):
        """``int_0^t (p(s) - c0) ds``, a periodic bounded function of t."""
        out = 0.0
        for l, c in enumerate(self.cos_, 1):
            w = 2 * np.pi * l
            out = out + c * sin(w * t) / w
        for l, s in enumerate(self.sin_, 1):
            w = 2 * np.pi * l
            out = out + s * (1.0 - cos(w * t)) / w
        return out

    def derivative(self):
        cos_ = [2 * np.pi * l * s for l, s in enumerate(self.sin_, 1)]
        sin_ = [-2 * np.pi * l * c for l, c in enumerate(self.cos_, 1)]
        return TrigPoly(0.0, cos_, sin_)


def simpson(fn, a, b, nodes=2**14):
    """Composite Simpson rule on ``nodes`` subintervals (rounded up to even)."""
    nodes = int(nodes) + int(nodes) % 2
    t = np.linspace(a, b, nodes + 1)
    y = np.asarray(fn(t), dtype=float)
    w = np.ones(nodes + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (3.0 * nodes) * np.dot(w, y))


def integrate_trigpoly(p, a, b, nodes=2**14):
    """Integral of ``p`` over ``[a, b]``: exact for TrigPoly, Simpson otherwise."""
    if isinstance(p, TrigPoly):
        return p.antiderivative(b) - p.antiderivative(a)
    return simpson(p, a, b, nodes)
