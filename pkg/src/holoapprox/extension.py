"""
Extension of ``(x, delta(x), 0) -> h(x)`` to a map ``f1`` near the deformed
cube, with an exact 1-jet.

The extension is the explicit ansatz

    f1(x, y, z) = h(x) + (y - delta(x)) g(x) + phi(x, y, z) (0, 0, z)

with ``g`` chosen so that ``df1 = phi`` on the normal direction
``(grad delta, -1, 0)`` of the graph:

    g = (dh grad(delta) - phi_x grad(delta) + phi_y) / (1 + |grad delta|^2)

evaluated with ``phi = phi(x, delta(x), 0)``.
"""

from dataclasses import dataclass

import numpy as np

from .jetmodel import as_array
from .numcore import jacobian, seed

__all__ = ["Extension", "FiberDistance", "extend", "extension_field", "jet_distance_on_fiber"]


def _g_from_jet(section, x, delta, grad, dh):
    d = section.dims
    phi = section.phi_at(x, delta)
    nrm = 1.0
    for v in grad:
        nrm = nrm + v * v
    out = []
    for i in range(d.n):
        acc = phi[i][d.m]
        for j in range(d.m):
            acc = acc + (dh[i][j] - phi[i][j]) * grad[j]
        out.append(acc / nrm)
    return out


def extension_field(section, pair, x, phases=None):
    """The coefficient ``g(x)`` of ``(y - delta(x))`` in the extension."""
    x = list(x)
    delta, _, grad, dh = pair.jet(x, phases)
    return _g_from_jet(section, x, delta, grad, dh)


@dataclass(frozen=True)
class Extension:
    section: object
    pair: object

    def core(self, x, phases=None):
        """``[delta, h_1..h_n, g_1..g_n]`` at x (generic numbers)."""
        x = list(x)
        delta, h, grad, dh = self.pair.jet(x, phases)
        return [delta] + list(h) + _g_from_jet(self.section, x, delta, grad, dh)

    def _normal_part(self, x, y, z):
        """``phi(x, y, z) (0, 0, z)``, one entry per target component."""
        d = self.section.dims
        if d.k == 0:
            return [0.0] * d.n
        phi = self.section.phi_at(x, y, z)
        out = []
        for i in range(d.n):
            acc = 0.0
            for l in range(d.k):
                acc = acc + phi[i][d.m + 1 + l] * z[l]
            out.append(acc)
        return out

    def __call__(self, x, y, z=None, phases=None):
        d = self.section.dims
        x = list(x)
        z = [0.0] * d.k if z is None else list(z)
        c = self.core(x, phases)
        delta, h, g = c[0], c[1 : 1 + d.n], c[1 + d.n :]
        extra = self._normal_part(x, y, z)
        return [h[i] + (y - delta) * g[i] + extra[i] for i in range(d.n)]

    def jet(self, x, y, z=None, phases=None):
        """Value and ``df1`` (n x (m+1+k)) by dual numbers through the closed form."""
        d = self.section.dims
        z = [0.0] * d.k if z is None else list(z)
        src = list(x) + [y] + z

        def fn(v):
            return self(v[: d.m], v[d.m], v[d.m + 1 :], phases)

        return jacobian(fn, src)

    def tube_jet(self, x, offsets, z, phases=None):
        """
        Jet of ``f1`` at ``(x, delta(x) + offsets, z)``.

        ``x`` is a list of m arrays of shape ``(P,)``; ``offsets`` and each
        entry of ``z`` broadcast against shape ``(P, Q)``.  The x-only terms
        are differentiated once on the P base points and reused across the
        fiber.  Returns ``(y, values, df1)`` as arrays of shapes ``(P, Q)``,
        ``(n, P, Q)`` and ``(n, m+1+k, P, Q)``.  ``phases`` are per base point.
        """
        d = self.section.dims
        P = x[0].shape[0]
        vals, jac = jacobian(lambda v: self.core(v, phases), list(x))
        shape = np.broadcast(np.empty((P, 1)), np.asarray(offsets), *[np.asarray(t) for t in z]).shape

        def col(v):
            return as_array(v, (P,))[:, None]

        delta = col(vals[0])
        grad = [col(jac[0][j]) for j in range(d.m)]
        h = [col(vals[1 + i]) for i in range(d.n)]
        dh = [[col(jac[1 + i][j]) for j in range(d.m)] for i in range(d.n)]
        g = [col(vals[1 + d.n + i]) for i in range(d.n)]
        dg = [[col(jac[1 + d.n + i][j]) for j in range(d.m)] for i in range(d.n)]
        s = np.broadcast_to(np.asarray(offsets, dtype=float), shape)
        y = np.broadcast_to(delta, shape) + s
        zz = [np.broadcast_to(np.asarray(t, dtype=float), shape) for t in z]
        xx = [np.broadcast_to(xi[:, None], shape) for xi in x]
        values = np.empty((d.n,) + shape)
        df = np.zeros((d.n, d.source) + shape)
        if d.k:
            src = seed(xx + [y] + zz)
            extra = self._normal_part(src[: d.m], src[d.m], src[d.m + 1 :])
        for i in range(d.n):
            values[i] = h[i] + s * g[i]
            for j in range(d.m):
                df[i, j] = dh[i][j] - g[i] * grad[j] + s * dg[i][j]
            df[i, d.m] = g[i]
            if d.k:
                e = extra[i]
                values[i] += as_array(getattr(e, "val", e), shape)
                if hasattr(e, "eps"):
                    for c in range(d.source):
                        df[i, c] += as_array(e.eps[c], shape)
        return y, values, df


def extend(section, pair):
    """Extension ``f1`` of ``(x, delta(x), 0) -> h(x)`` near the deformed cube."""
    return Extension(section, pair)


@dataclass(frozen=True)
class FiberDistance:
    first_order: float
    zeroth_order: float


def jet_distance_on_fiber(section, ext, point, directions=None, phases=None):
    """
    Distance between ``j^1 f1`` and ``sigma`` at a source point.

    The first-order part is the operator norm of ``df1 - phi`` from the
    Euclidean source to the sup-norm target (a max of Euclidean row norms);
    when ``directions`` (rows of source vectors) is given, the sup is taken
    over those directions instead.
    """
    d = section.dims
    point = [float(v) for v in point]
    x, y, z = point[: d.m], point[d.m], point[d.m + 1 :]
    vals, jac = ext.jet(x, y, z, phases)
    f = section.f_at(x, y, z)
    phi = section.phi_at(x, y, z)
    D = np.array(jac, dtype=float) - np.broadcast_to(np.array(phi, dtype=float), (d.n, d.source))
    zeroth = float(np.max(np.abs(np.array(vals, dtype=float) - np.array(f, dtype=float))))
    if directions is None:
        first = float(np.max(np.linalg.norm(D, axis=1)))
    else:
        u = np.asarray(directions, dtype=float)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        first = float(np.max(np.abs(u @ D.T)))
    return FiberDistance(first, zeroth)
