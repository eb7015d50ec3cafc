"""Compact convex action sets.

Every set supports Euclidean projection, the tangent/normal cone split at a
feasible point, acuteness classification and the times at which a projected
ray ``proj(x + s d)`` changes its active face.  All array methods accept a
trailing coordinate axis and arbitrary leading batch axes unless noted.
"""
from __future__ import annotations

import abc
import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

ACTIVE_TOL = 1e-9
ACUTE_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid set construction or an argument outside the set's domain."""


class Acuteness(Enum):
    ACUTE = "acute"
    NOT_ACUTE = "not-acute"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ConeDecomposition:
    tangent_part: np.ndarray
    normal_part: np.ndarray


def _as_points(y, dim: int, name: str = "point") -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 0 or y.shape[-1] != dim:
        raise GeometryError(f"{name} has trailing dimension {y.shape[-1:] or '()'}, expected {dim}")
    return y


class ConvexSet(abc.ABC):
    """Base class for a player's action set."""

    kind: str = "set"
    dim: int

    @property
    def curvature(self) -> float | None:
        """Upper bound on boundary curvature; 0 for polyhedra."""
        return 0.0

    @property
    def acuteness(self) -> Acuteness:
        return Acuteness.ACUTE

    def is_acute(self) -> bool:
        return self.acuteness is Acuteness.ACUTE

    @abc.abstractmethod
    def project(self, y) -> np.ndarray: ...

    @abc.abstractmethod
    def contains(self, x, tol: float = ACTIVE_TOL) -> bool: ...

    @abc.abstractmethod
    def tangent(self, x, v) -> np.ndarray:
        """Projection of ``v`` onto the tangent cone at ``x`` (no membership check)."""

    @abc.abstractmethod
    def diameter(self) -> float: ...

    @abc.abstractmethod
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]: ...

    @abc.abstractmethod
    def center(self) -> np.ndarray:
        """A fixed feasible reference point."""

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int, boundary_fraction: float = 0.0) -> np.ndarray: ...

    def halfspaces(self):
        """Return ``(A, b, E, e)`` with the set equal to ``{A x <= b, E x = e}``, or None."""
        return None

    def vertices(self) -> np.ndarray | None:
        return None

    def cone_decompose(self, x, v) -> ConeDecomposition:
        x = _as_points(x, self.dim, "x")
        v = _as_points(v, self.dim, "v")
        if x.ndim != 1 or v.ndim != 1:
            raise GeometryError("cone_decompose expects single vectors")
        if not self.contains(x):
            raise GeometryError(f"x={x} is not in the {self.kind} (tolerance {ACTIVE_TOL})")
        t = self.tangent(x, v)
        return ConeDecomposition(tangent_part=t, normal_part=v - t)

    def normal(self, x, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v - self.tangent(x, v)

    def breakpoints(self, x0, d, smax: float) -> np.ndarray:
        """Sorted times in (0, smax) where the active face of proj(x0 + s d) changes."""
        raise NotImplementedError

    def breakpoints_batch(self, X0, D, smax) -> np.ndarray:
        """Row-wise breakpoints, padded with NaN into a 2-D array."""
        X0 = np.asarray(X0, dtype=float)
        D = np.asarray(D, dtype=float)
        smax = np.broadcast_to(np.asarray(smax, dtype=float), X0.shape[:1])
        rows = [self.breakpoints(X0[k], D[k], float(smax[k])) for k in range(X0.shape[0])]
        width = max([len(r) for r in rows] + [0])
        out = np.full((X0.shape[0], width), np.nan)
        for k, r in enumerate(rows):
            out[k, : len(r)] = r
        return out


# ---------------------------------------------------------------------------
# polyhedral machinery shared by Simplex and Polyhedron


def dual_active_set(y, A, b, E=None, e=None, max_iter: int | None = None, tol: float = 1e-12):
    """Project ``y`` onto ``{A x <= b, E x = e}`` with a dual active-set method.

    Starts from the unconstrained minimiser (restricted to the affine hull),
    repeatedly adds the most violated row and takes dual steps, dropping rows
    whose multipliers would turn negative.  Returns ``(x, working, lam, nu)``
    where ``working`` lists active inequality rows with multipliers ``lam`` and
    ``nu`` are the equality multipliers.
    """
    y = np.asarray(y, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, y.shape[0])
    b = np.asarray(b, dtype=float)
    m = A.shape[0]
    n_eq = 0 if E is None else len(E)
    if max_iter is None:
        max_iter = 100 * max(m, 1)
    if n_eq:
        E = np.asarray(E, dtype=float)
        e = np.asarray(e, dtype=float)
        nu = np.linalg.solve(E @ E.T, E @ y - e)
        x = y - E.T @ nu
        nu = list(nu)
    else:
        x = y.copy()
        nu = []
    working: list[int] = []
    lam: list[float] = []
    iters = 0
    scale = 1.0 + np.abs(b)
    while True:
        viol = (A @ x - b) / scale
        if working:
            viol[working] = -np.inf
        if m == 0:
            break
        k = int(np.argmax(viol))
        if viol[k] <= tol:
            break
        lam_k = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                raise GeometryError(f"projection did not converge in {max_iter} active-set iterations")
            rows = []
            if n_eq:
                rows.append(E)
            if working:
                rows.append(A[working])
            a = A[k]
            if rows:
                N = np.vstack(rows)
                r = np.linalg.lstsq(N @ N.T, N @ a, rcond=None)[0]
                z = a - N.T @ r
            else:
                r = np.zeros(0)
                z = a
            r_ineq = r[n_eq:]
            t1, drop = np.inf, -1
            for j, rj in enumerate(r_ineq):
                if rj > 1e-14:
                    ratio = lam[j] / rj
                    if ratio < t1:
                        t1, drop = ratio, j
            zz = float(z @ z)
            slack = float(a @ x - b[k])
            t2 = slack / zz if zz > 1e-24 else np.inf
            if not np.isfinite(t1) and not np.isfinite(t2):
                raise GeometryError("polyhedron is empty")
            t = min(t1, t2)
            x = x - t * z
            if n_eq:
                nu = list(np.asarray(nu) - t * r[:n_eq])
            lam = [lj - t * rj for lj, rj in zip(lam, r_ineq)]
            lam_k += t
            if t2 <= t1:
                working.append(k)
                lam.append(lam_k)
                break
            del working[drop]
            del lam[drop]
    return x, working, np.asarray(lam), np.asarray(nu)


def _polyhedral_breakpoints(x0, d, smax, A, b, E, e, probe_rel=1e-10):
    """Parametric active-set walk along proj(x0 + s d) for s in (0, smax)."""
    x0 = np.asarray(x0, dtype=float)
    d = np.asarray(d, dtype=float)
    if smax <= 0 or not np.any(d):
        return np.zeros(0)
    n_eq = 0 if E is None else len(E)
    probe = probe_rel * max(smax, 1.0)
    out = []
    s = 0.0
    for _ in range(10 * (A.shape[0] + 2)):
        sp = s + probe
        _, working, _, _ = dual_active_set(x0 + sp * d, A, b, E, e)
        rows = ([E] if n_eq else []) + ([A[working]] if working else [])
        rhs = ([e] if n_eq else []) + ([b[working]] if working else [])
        if rows:
            N = np.vstack(rows)
            c = np.concatenate(rhs)
            G = N @ N.T
            lam0 = np.linalg.lstsq(G, N @ x0 - c, rcond=None)[0]
            lam1 = np.linalg.lstsq(G, N @ d, rcond=None)[0]
            p0 = x0 - N.T @ lam0
            p1 = d - N.T @ lam1
        else:
            lam0 = lam1 = np.zeros(0)
            p0, p1 = x0, d
        cand = []
        for j in range(len(working)):
            l0, l1 = lam0[n_eq + j], lam1[n_eq + j]
            if l1 < -1e-14:
                cand.append(-l0 / l1)
        inactive = np.setdiff1d(np.arange(A.shape[0]), working)
        if inactive.size:
            rate = A[inactive] @ p1
            gap = b[inactive] - A[inactive] @ p0
            mask = rate > 1e-14
            cand.extend(gap[mask] / rate[mask])
        cand = [c_ for c_ in cand if c_ > s + probe]
        if not cand:
            break
        s_next = min(cand)
        if s_next >= smax - probe:
            break
        out.append(s_next)
        s = s_next
    return np.asarray(out)


# ---------------------------------------------------------------------------


class Box(ConvexSet):
    kind = "box"

    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise GeometryError("box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise GeometryError("box bounds must be finite")
        if np.any(lo > hi):
            raise GeometryError("box requires lower <= upper componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lower, self.upper = lo, hi
        self.dim = lo.size

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"

    def project(self, y):
        return np.clip(_as_points(y, self.dim, "y"), self.lower, self.upper)

    def contains(self, x, tol=ACTIVE_TOL):
        x = _as_points(x, self.dim, "x")
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def tangent(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        at_lo = x - self.lower <= ACTIVE_TOL
        at_hi = self.upper - x <= ACTIVE_TOL
        return np.where((at_lo & (v < 0)) | (at_hi & (v > 0)), 0.0, v)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def halfspaces(self):
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye]), np.concatenate([self.upper, -self.lower]), None, None

    def vertices(self):
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.unique(np.array(list(corners), dtype=float), axis=0)

    def sample(self, rng, n, boundary_fraction=0.0):
        pts = rng.uniform(self.lower, self.upper, size=(n, self.dim))
        n_face = int(round(boundary_fraction * n))
        for k in range(n_face):
            pinned = rng.random(self.dim) < 0.5
            pinned[rng.integers(self.dim)] = True
            side = rng.random(self.dim) < 0.5
            pts[k, pinned] = np.where(side, self.upper, self.lower)[pinned]
        return pts

    def breakpoints(self, x0, d, smax):
        return self.breakpoints_batch(np.asarray(x0, float)[None], np.asarray(d, float)[None], smax)[0]

    def breakpoints_batch(self, X0, D, smax):
        X0 = np.asarray(X0, dtype=float)
        D = np.asarray(D, dtype=float)
        smax = np.broadcast_to(np.asarray(smax, dtype=float), X0.shape[:1])[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            hit = np.where(D > 0, (self.upper - X0) / D, np.where(D < 0, (self.lower - X0) / D, np.nan))
        valid = (hit > 0) & (hit < smax)
        return np.sort(np.where(valid, hit, np.nan), axis=1)


class Simplex(ConvexSet):
    """Probability simplex in R^n."""

    kind = "simplex"

    def __init__(self, dimension: int):
        dimension = int(dimension)
        if dimension < 1:
            raise GeometryError("simplex dimension must be positive")
        self.dim = dimension
        root = np.sqrt(dimension)
        self._A = -np.eye(dimension)
        self._b = np.zeros(dimension)
        self._E = np.full((1, dimension), 1.0 / root)
        self._e = np.array([1.0 / root])

    def __repr__(self):
        return f"Simplex(dimension={self.dim})"

    def project(self, y):
        y = _as_points(y, self.dim, "y")
        flat = y.reshape(-1, self.dim)
        u = -np.sort(-flat, axis=1)
        css = np.cumsum(u, axis=1) - 1.0
        k = np.arange(1, self.dim + 1)
        cond = u - css / k > 0
        rho = self.dim - np.argmax(cond[:, ::-1], axis=1)
        theta = css[np.arange(flat.shape[0]), rho - 1] / rho
        return np.maximum(flat - theta[:, None], 0.0).reshape(y.shape)

    def contains(self, x, tol=ACTIVE_TOL):
        x = _as_points(x, self.dim, "x")
        return bool(np.all(x >= -tol) and np.all(np.abs(x.sum(axis=-1) - 1.0) <= tol * self.dim))

    def tangent(self, x, v):
        # TC(x) = {w : sum w = 0, w_j >= 0 where x_j = 0}; the projection is
        # w = v - theta on the support and max(v - theta, 0) off it.
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(x.shape, v.shape)
        xf = np.broadcast_to(x, shape).reshape(-1, self.dim)
        vf = np.broadcast_to(v, shape).reshape(-1, self.dim)
        zero = xf <= ACTIVE_TOL
        key = np.where(zero, vf, np.inf)
        order = np.argsort(-key, axis=1, kind="stable")
        rows = np.arange(vf.shape[0])[:, None]
        vs = vf[rows, order]
        zs = zero[rows, order]
        theta_k = np.cumsum(vs, axis=1) / np.arange(1, self.dim + 1)
        ok = ~zs | (vs > theta_k)
        rho = self.dim - np.argmax(ok[:, ::-1], axis=1)
        theta = theta_k[rows[:, 0], rho - 1][:, None]
        w = np.where(zero, np.maximum(vf - theta, 0.0), vf - theta)
        return w.reshape(shape)

    def diameter(self):
        return float(np.sqrt(2.0)) if self.dim > 1 else 0.0

    def bounding_box(self):
        return np.zeros(self.dim), np.ones(self.dim)

    def center(self):
        return np.full(self.dim, 1.0 / self.dim)

    def halfspaces(self):
        return self._A, self._b, self._E, self._e

    def vertices(self):
        return np.eye(self.dim)

    def sample(self, rng, n, boundary_fraction=0.0):
        pts = rng.dirichlet(np.ones(self.dim), size=n)
        n_face = int(round(boundary_fraction * n))
        for k in range(n_face):
            zeroed = rng.random(self.dim) < 0.5
            zeroed[rng.integers(self.dim)] = False
            pts[k, zeroed] = 0.0
            pts[k] /= pts[k].sum()
        return pts

    def breakpoints(self, x0, d, smax):
        return _polyhedral_breakpoints(x0, d, smax, self._A, self._b, self._E, self._e)


class Ball(ConvexSet):
    kind = "ball"

    def __init__(self, center, radius: float):
        c = np.atleast_1d(np.asarray(center, dtype=float)).copy()
        if c.ndim != 1:
            raise GeometryError("ball center must be a vector")
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        c.setflags(write=False)
        self._center = c
        self.radius = float(radius)
        self.dim = c.size

    def __repr__(self):
        return f"Ball(center={self._center.tolist()}, radius={self.radius})"

    @property
    def curvature(self):
        return 1.0 / self.radius

    @property
    def acuteness(self):
        return Acuteness.UNKNOWN

    def is_acute(self):
        raise GeometryError("acuteness is not applicable to a ball")

    def project(self, y):
        y = _as_points(y, self.dim, "y")
        off = y - self._center
        nrm = np.linalg.norm(off, axis=-1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        return self._center + off * scale

    def contains(self, x, tol=ACTIVE_TOL):
        x = _as_points(x, self.dim, "x")
        return bool(np.all(np.linalg.norm(x - self._center, axis=-1) <= self.radius + tol))

    def tangent(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        off = x - self._center
        nrm = np.linalg.norm(off, axis=-1, keepdims=True)
        n = off / np.where(nrm > 0, nrm, 1.0)
        vn = np.sum(v * n, axis=-1, keepdims=True)
        on_boundary = self.radius - nrm <= ACTIVE_TOL
        return np.where(on_boundary & (vn > 0), v - vn * n, v)

    def diameter(self):
        return 2.0 * self.radius

    def bounding_box(self):
        return self._center - self.radius, self._center + self.radius

    def center(self):
        return self._center.copy()

    def sample(self, rng, n, boundary_fraction=0.0):
        dirs = rng.normal(size=(n, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / self.dim)
        radii[: int(round(boundary_fraction * n))] = self.radius
        return self._center + dirs * radii[:, None]

    def breakpoints(self, x0, d, smax):
        off = np.asarray(x0, dtype=float) - self._center
        d = np.asarray(d, dtype=float)
        a = d @ d
        if a == 0:
            return np.zeros(0)
        bh = off @ d
        c = off @ off - self.radius**2
        disc = bh * bh - a * c
        if disc <= 0:
            return np.zeros(0)
        root = np.sqrt(disc)
        # numerically stable pair of roots
        qv = -(bh + np.copysign(root, bh))
        roots = sorted({qv / a, c / qv if qv != 0 else np.inf})
        eps = 1e-12 * max(smax, 1.0)
        return np.asarray([s for s in roots if eps < s < smax - eps])


class Polyhedron(ConvexSet):
    """Bounded polyhedron ``{x : A x <= b}``; rows are normalised at construction."""

    kind = "polyhedron"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(b, dtype=float)).copy()
        if A.shape[0] != b.size:
            raise GeometryError("polyhedron needs one offset per row")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-14):
            raise GeometryError("polyhedron has a zero row")
        A /= norms[:, None]
        b /= norms
        self.dim = A.shape[1]
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for k in range(self.dim):
            c = np.zeros(self.dim)
            for sign, store in ((1.0, lo), (-1.0, hi)):
                c[k] = sign
                res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * self.dim, method="highs")
                if res.status == 2:
                    raise GeometryError("polyhedron is empty")
                if res.status == 3:
                    raise GeometryError(f"polyhedron is unbounded along coordinate {k}")
                if res.status != 0:
                    raise GeometryError(f"could not bound polyhedron: {res.message}")
                store[k] = sign * res.fun
        # Chebyshev centre as a reference point
        res = linprog(
            np.r_[np.zeros(self.dim), -1.0],
            A_ub=np.hstack([A, np.ones((A.shape[0], 1))]),
            b_ub=b,
            bounds=[(None, None)] * self.dim + [(0, None)],
            method="highs",
        )
        self._center = res.x[: self.dim] if res.status == 0 else 0.5 * (lo + hi)
        for arr in (A, b, lo, hi):
            arr.setflags(write=False)
        self.A, self.b, self._lo, self._hi = A, b, lo, hi
        gram = A @ A.T
        off = gram[~np.eye(A.shape[0], dtype=bool)]
        self._acute = Acuteness.ACUTE if (off.size == 0 or off.max() <= ACUTE_TOL) else Acuteness.NOT_ACUTE

    def __repr__(self):
        return f"Polyhedron(rows={self.A.shape[0]}, dim={self.dim}, {self._acute.value})"

    @property
    def acuteness(self):
        return self._acute

    def project(self, y):
        y = _as_points(y, self.dim, "y")
        flat = y.reshape(-1, self.dim)
        out = np.empty_like(flat)
        for k, row in enumerate(flat):
            out[k] = dual_active_set(row, self.A, self.b)[0]
        return out.reshape(y.shape)

    def contains(self, x, tol=ACTIVE_TOL):
        x = _as_points(x, self.dim, "x")
        return bool(np.all(x @ self.A.T <= self.b + tol))

    def tangent(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast_shapes(x.shape, v.shape)
        xf = np.broadcast_to(x, shape).reshape(-1, self.dim)
        vf = np.broadcast_to(v, shape).reshape(-1, self.dim)
        out = np.empty_like(vf)
        for k in range(vf.shape[0]):
            active = np.flatnonzero(self.b - self.A @ xf[k] <= ACTIVE_TOL)
            if active.size == 0:
                out[k] = vf[k]
            else:
                out[k] = dual_active_set(vf[k], self.A[active], np.zeros(active.size))[0]
        return out.reshape(shape)

    def diameter(self):
        # upper bound from the coordinate bounding box
        return float(np.linalg.norm(self._hi - self._lo))

    def bounding_box(self):
        return self._lo.copy(), self._hi.copy()

    def center(self):
        return self._center.copy()

    def halfspaces(self):
        return self.A, self.b, None, None

    def sample(self, rng, n, boundary_fraction=0.0):
        n_face = int(round(boundary_fraction * n))
        span = self._hi - self._lo
        far = self._center + rng.normal(size=(n_face, self.dim)) * span * 2.0
        inner = []
        while len(inner) < n - n_face:
            cand = rng.uniform(self._lo, self._hi, size=(max(4 * (n - n_face), 16), self.dim))
            inner.extend(cand[np.all(cand @ self.A.T <= self.b, axis=1)])
        pts = np.vstack([self.project(far).reshape(n_face, self.dim), np.asarray(inner[: n - n_face]).reshape(-1, self.dim)])
        return pts

    def breakpoints(self, x0, d, smax):
        return _polyhedral_breakpoints(x0, d, smax, self.A, self.b, None, None)


def random_acute_polyhedron(rng: np.random.Generator, dim: int, kind: str | None = None) -> Polyhedron:
    """A random acute polyhedron: a rotated box or a rotated corner simplex."""
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    kind = kind or ("box" if rng.random() < 0.5 else "corner")
    if kind == "box":
        half = rng.uniform(0.5, 2.0, size=dim)
        shift = rng.normal(size=dim) * 0.5
        A = np.vstack([q.T, -q.T])
        b = np.concatenate([half + q.T @ shift, half - q.T @ shift])
        return Polyhedron(A, b)
    # {Q^T x >= -s, sum(Q^T x) <= t}: pairwise products are 0 and -1/sqrt(d)
    shift = rng.uniform(0.2, 1.0, size=dim)
    top = rng.uniform(0.5, 2.0)
    A = np.vstack([-q.T, q.sum(axis=1)[None, :]])
    b = np.concatenate([shift, [top]])
    return Polyhedron(A, b)


class ProductSet:
    """Cartesian product of per-player action sets acting on stacked vectors."""

    def __init__(self, sets):
        self.sets = tuple(sets)
        if not self.sets:
            raise GeometryError("a product needs at least one factor")
        self.dims = tuple(s.dim for s in self.sets)
        self.offsets = tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.dims)]))
        self.slices = tuple(slice(self.offsets[i], self.offsets[i + 1]) for i in range(len(self.sets)))
        self.dim = self.offsets[-1]
        self._box_bounds = None
        if all(isinstance(s, Box) for s in self.sets):
            self._box_bounds = (
                np.concatenate([s.lower for s in self.sets]),
                np.concatenate([s.upper for s in self.sets]),
            )

    def __len__(self):
        return len(self.sets)

    def __repr__(self):
        return "ProductSet(" + ", ".join(map(repr, self.sets)) + ")"

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return [x[..., sl] for sl in self.slices]

    def project(self, y):
        y = _as_points(y, self.dim, "y")
        if self._box_bounds is not None:
            return np.clip(y, *self._box_bounds)
        return np.concatenate([s.project(y[..., sl]) for s, sl in zip(self.sets, self.slices)], axis=-1)

    def contains(self, x, tol=ACTIVE_TOL):
        x = _as_points(x, self.dim, "x")
        return all(s.contains(x[..., sl], tol) for s, sl in zip(self.sets, self.slices))

    def tangent(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.concatenate([s.tangent(x[..., sl], v[..., sl]) for s, sl in zip(self.sets, self.slices)], axis=-1)

    def diameter(self):
        return float(np.sqrt(sum(s.diameter() ** 2 for s in self.sets)))

    def center(self):
        return np.concatenate([s.center() for s in self.sets])

    def sample(self, rng, n, boundary_fraction=0.0):
        # factors are shuffled independently so boundary rows mix across players
        return np.hstack([s.sample(rng, n, boundary_fraction)[rng.permutation(n)] for s in self.sets])

    def curvatures(self) -> list[float | None]:
        """Per-factor curvature bound; None marks a non-acute polyhedron (no bound)."""
        out = []
        for s in self.sets:
            if isinstance(s, Ball):
                out.append(s.curvature)
            elif s.acuteness is Acuteness.ACUTE:
                out.append(0.0)
            else:
                out.append(None)
        return out

    def set_class(self) -> str:
        """'acute', 'curved' or 'no-guarantee' for the bound formulas."""
        ks = self.curvatures()
        if any(k is None for k in ks):
            return "no-guarantee"
        return "curved" if any(k > 0 for k in ks) else "acute"

    def halfspaces(self):
        """Block-diagonal halfspace description, or None if a factor is a ball."""
        A_rows, b_rows, E_rows, e_rows = [], [], [], []
        for s, sl in zip(self.sets, self.slices):
            hs = s.halfspaces()
            if hs is None:
                return None
            A, b, E, e = hs
            pad = np.zeros((A.shape[0], self.dim))
            pad[:, sl] = A
            A_rows.append(pad)
            b_rows.append(b)
            if E is not None:
                padE = np.zeros((E.shape[0], self.dim))
                padE[:, sl] = E
                E_rows.append(padE)
                e_rows.append(e)
        A = np.vstack(A_rows)
        b = np.concatenate(b_rows)
        E = np.vstack(E_rows) if E_rows else None
        e = np.concatenate(e_rows) if e_rows else None
        return A, b, E, e

    def breakpoints_batch(self, X0, D, smax) -> np.ndarray:
        """Union of per-factor breakpoints for each row, sorted and NaN padded."""
        X0 = np.asarray(X0, dtype=float)
        D = np.asarray(D, dtype=float)
        parts = []
        for s, sl in zip(self.sets, self.slices):
            moving = np.any(D[:, sl] != 0, axis=1)
            bp = np.full((X0.shape[0], 0), np.nan)
            if np.any(moving):
                idx = np.flatnonzero(moving)
                sm = np.broadcast_to(np.asarray(smax, dtype=float), X0.shape[:1])[idx]
                sub = s.breakpoints_batch(X0[idx][:, sl], D[idx][:, sl], sm)
                bp = np.full((X0.shape[0], sub.shape[1]), np.nan)
                bp[idx] = sub
            parts.append(bp)
        out = np.hstack(parts) if parts else np.full((X0.shape[0], 0), np.nan)
        return np.sort(out, axis=1)
