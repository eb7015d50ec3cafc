"""Vector-field deviations: affine fields, gradient-of-quadratic fields and families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .games import NormalFormGame, SmoothGame
from .geometry import Box, ProductSet, Simplex

SYMMETRY_TOL = 1e-12
TANGENTIAL_TOL = 1e-8


class FieldError(ValueError):
    pass


class VectorField:
    """A map X -> R^D with declared bounds ``G`` (sup norm) and ``L`` (Lipschitz)."""

    name: str
    G: float
    L: float
    is_gradient: bool

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def affine(self) -> tuple[np.ndarray, np.ndarray] | None:
        return None

    def potential(self, x) -> np.ndarray:
        """Value of h with grad h equal to this field (gradient fields only)."""
        raise FieldError(f"field {self.name} has no potential")

    def support(self, space: ProductSet) -> tuple[int, ...]:
        return tuple(range(len(space)))


class AffineField(VectorField):
    """f(x) = P x + q on stacked profiles."""

    def __init__(self, P, q, name: str = "affine", G: float | None = None, L: float | None = None, space: ProductSet | None = None):
        P = np.atleast_2d(np.asarray(P, dtype=float)).copy()
        q = np.asarray(q, dtype=float).reshape(-1).copy()
        if P.shape != (q.size, q.size):
            raise FieldError(f"P must be {q.size}x{q.size}, got {P.shape}")
        P.setflags(write=False)
        q.setflags(write=False)
        self.P, self.q, self.name = P, q, name
        self.is_gradient = bool(np.all(np.abs(P - P.T) <= SYMMETRY_TOL))
        self.L = float(np.linalg.norm(P, 2)) if L is None else float(L)
        if G is None:
            if space is None:
                raise FieldError("affine field needs a declared G or the action sets to bound it")
            G = affine_bound(P, q, space)
        self.G = float(G)

    def __repr__(self):
        return f"AffineField({self.name!r}, G={self.G:g}, L={self.L:g})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.P.T + self.q

    @property
    def affine(self):
        return self.P, self.q

    def potential(self, x):
        if not self.is_gradient:
            raise FieldError(f"field {self.name} is not a gradient field")
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.P, x) + x @ self.q

    def support(self, space):
        nz = np.any(self.P != 0, axis=1) | (self.q != 0)
        return tuple(i for i, sl in enumerate(space.slices) if np.any(nz[sl]))


class CustomField(VectorField):
    """User evaluator with declared bounds; ``potential`` is optional."""

    def __init__(self, fn: Callable, G: float, L: float, name: str = "custom", is_gradient: bool = False, potential: Callable | None = None):
        self._fn, self.G, self.L, self.name = fn, float(G), float(L), name
        self.is_gradient = bool(is_gradient)
        self._potential = potential

    def __repr__(self):
        return f"CustomField({self.name!r}, G={self.G:g}, L={self.L:g})"

    def __call__(self, x):
        return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)

    def potential(self, x):
        if self._potential is None:
            return super().potential(x)
        return np.asarray(self._potential(np.asarray(x, dtype=float)), dtype=float)


class SumField(VectorField):
    def __init__(self, fields: Sequence[VectorField], weights: Sequence[float], name: str = "combination"):
        self.fields = tuple(fields)
        self.weights = np.asarray(weights, dtype=float)
        self.name = name
        self.G = float(np.sum(np.abs(self.weights) * [f.G for f in self.fields]))
        self.L = float(np.sum(np.abs(self.weights) * [f.L for f in self.fields]))
        self.is_gradient = all(f.is_gradient for f in self.fields)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for w, f in zip(self.weights, self.fields):
            if w != 0:
                out = out + w * f(x)
        return out

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * f.potential(x) for w, f in zip(self.weights, self.fields) if w != 0)


def affine_bound(P: np.ndarray, q: np.ndarray, space: ProductSet) -> float:
    """Upper bound on max ||P x + q|| over the product set.

    Exact (vertex enumeration of a convex function) when every factor is a box
    and D <= 12; interval arithmetic over bounding boxes otherwise.
    """
    if all(isinstance(s, Box) for s in space.sets) and space.dim <= 12:
        verts = np.array(np.meshgrid(*[np.array([lo, hi]) for lo, hi in zip(*_stack_bbox(space))], indexing="ij"))
        verts = verts.reshape(space.dim, -1).T
        return float(np.linalg.norm(verts @ P.T + q, axis=1).max())
    if all(isinstance(s, Simplex) for s in space.sets):
        # affine image of a product of simplices: max over vertex products
        counts = [s.dim for s in space.sets]
        if np.prod(counts) <= 4096:
            pts = np.array([np.concatenate([np.eye(k)[a] for k, a in zip(counts, prof)]) for prof in np.ndindex(*counts)])
            return float(np.linalg.norm(pts @ P.T + q, axis=1).max())
    lo, hi = _stack_bbox(space)
    upper = q + np.where(P > 0, P * hi, P * lo).sum(axis=1)
    lower = q + np.where(P > 0, P * lo, P * hi).sum(axis=1)
    return float(np.linalg.norm(np.maximum(np.abs(upper), np.abs(lower))))


def _stack_bbox(space: ProductSet):
    boxes = [s.bounding_box() for s in space.sets]
    return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])


def gradient_quadratic(space: ProductSet, blocks: dict, name: str, G: float | None = None) -> AffineField:
    """Field of h(x) = sum_i (x_i' Q_i x_i / 2 + c_i' x_i); ``blocks`` maps player -> (Q_i, c_i)."""
    P = np.zeros((space.dim, space.dim))
    q = np.zeros(space.dim)
    for i, (Q, c) in blocks.items():
        sl = space.slices[i]
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape != (space.dims[i],) * 2 or np.any(np.abs(Q - Q.T) > SYMMETRY_TOL):
            raise FieldError(f"block {i} needs a symmetric {space.dims[i]}x{space.dims[i]} matrix")
        P[sl, sl] = Q
        q[sl] = np.asarray(c, dtype=float).reshape(space.dims[i])
    return AffineField(P, q, name=name, G=G, space=space)


@dataclass(frozen=True)
class FieldFamily:
    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise FieldError("field names in a family must be unique")

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, k):
        return self.fields[k]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.fields]

    @property
    def coarse(self) -> bool:
        return all(f.is_gradient for f in self.fields)

    @property
    def all_affine(self) -> bool:
        return all(f.affine is not None for f in self.fields)

    @property
    def G(self) -> np.ndarray:
        return np.array([f.G for f in self.fields])

    def evaluate(self, x) -> np.ndarray:
        """Stacked field values, shape ``(|F|, ..., D)``."""
        x = np.asarray(x, dtype=float)
        if not self.fields:
            return np.zeros((0,) + x.shape)
        if self.all_affine:
            P = np.stack([f.P for f in self.fields])
            q = np.stack([f.q for f in self.fields])
            return np.einsum("fij,...j->f...i", P, x) + q.reshape((len(self),) + (1,) * (x.ndim - 1) + (x.shape[-1],))
        return np.stack([f(x) for f in self.fields])

    def __add__(self, other: "FieldFamily") -> "FieldFamily":
        return FieldFamily(self.fields + tuple(other.fields))


def evaluate(field: VectorField, x) -> np.ndarray:
    return field(x)


def _label(v) -> str:
    return "(" + ",".join(format(float(a), "+g") for a in np.atleast_1d(v)) + ")"


def pull_to_point_family(game: SmoothGame) -> FieldFamily:
    """One field v - x_i per player i and vertex v of X_i, gradient of -||x_i - v||^2 / 2."""
    space = game.space
    fields = []
    for i, s in enumerate(space.sets):
        verts = s.vertices()
        if verts is None:
            raise FieldError(f"pull-to-point needs a box or simplex for player {i}")
        for k, v in enumerate(verts):
            Q = -np.eye(s.dim)
            label = f"a{k}" if isinstance(s, Simplex) else _label(v)
            fields.append(gradient_quadratic(space, {i: (Q, v)}, f"pull_p{i}_{label}", G=s.diameter()))
    return FieldFamily(fields)


def aggregated_pull_field(game: SmoothGame, targets: Sequence[int]) -> AffineField:
    """Sum over players of the pull field towards vertex ``targets[i]`` of X_i."""
    space = game.space
    blocks = {}
    for i, (s, k) in enumerate(zip(space.sets, targets)):
        verts = s.vertices()
        if verts is None:
            raise FieldError(f"pull-to-point needs a box or simplex for player {i}")
        blocks[i] = (-np.eye(s.dim), verts[int(k)])
    G = float(np.sqrt(sum(s.diameter() ** 2 for s in space.sets)))
    return gradient_quadratic(space, blocks, "pull_aggregate", G=G)


def radial_field(game: SmoothGame, center=None) -> AffineField:
    """grad of ||x - c||^2 / 2, i.e. x - c."""
    space = game.space
    c = np.zeros(space.dim) if center is None else np.asarray(center, dtype=float)
    return AffineField(np.eye(space.dim), -c, name="radial", space=space)


def projection_family(game: SmoothGame, directions: Sequence) -> FieldFamily:
    """Constant fields v on block i, gradients of <x_i, v>, for given (player, v) pairs.

    Directions are rescaled to unit length, so a finite subset of the unit
    sphere of directions stands in for the full family.
    """
    space = game.space
    fields = []
    for i, v in directions:
        i = int(i)
        if not 0 <= i < len(space.sets):
            raise FieldError(f"player {i} out of range")
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != space.dims[i] or not np.linalg.norm(v) > 0:
            raise FieldError(f"direction for player {i} must be a nonzero vector of length {space.dims[i]}")
        v = v / np.linalg.norm(v)
        blocks = {i: (np.zeros((v.size, v.size)), v)}
        fields.append(gradient_quadratic(space, blocks, f"proj_p{i}_{_label(v)}", G=1.0))
    return FieldFamily(fields)


def ce_field_family(nf_or_game) -> FieldFamily:
    """Fields x_i(a) (e_b - e_a) on block i for every player i and ordered pair a != b."""
    shape = nf_or_game.shape if isinstance(nf_or_game, NormalFormGame) else tuple(nf_or_game.space.dims)
    space = ProductSet(tuple(Simplex(k) for k in shape))
    fields = []
    for i, k in enumerate(shape):
        off = space.offsets[i]
        for a in range(k):
            for b in range(k):
                if a == b:
                    continue
                P = np.zeros((space.dim, space.dim))
                P[off + b, off + a] = 1.0
                P[off + a, off + a] = -1.0
                fields.append(AffineField(P, np.zeros(space.dim), name=f"ce_p{i}_{a}to{b}", G=np.sqrt(2.0)))
    return FieldFamily(fields)


def extension_family_2x2() -> FieldFamily:
    """Eight affine fields on [-1, 1]^2: pulls to the edges and rotational pairs."""
    z = np.zeros((2, 2))

    def field(name, P, q):
        return AffineField(np.asarray(P, float), np.asarray(q, float), name=name, G=2.0)

    return FieldFamily(
        [
            field("f1+", [[-1, 0], [0, 0]], [1, 0]),
            field("f1-", [[-1, 0], [0, 0]], [-1, 0]),
            field("f2+", [[0, 0], [0, -1]], [0, 1]),
            field("f2-", [[0, 0], [0, -1]], [0, -1]),
            field("g1+", [[-1, 1], [0, 0]], z[0]),
            field("g1-", [[-1, -1], [0, 0]], z[0]),
            field("g2+", [[0, 0], [1, -1]], z[0]),
            field("g2-", [[0, 0], [-1, -1]], z[0]),
        ]
    )


@dataclass(frozen=True)
class TangentialReport:
    tangential: bool
    worst_normal_norm: float
    worst_point: np.ndarray
    n_samples: int


def check_tangential(field: VectorField, space: ProductSet, n_samples: int = 10_000, seed: int = 0) -> TangentialReport:
    """Boundary-biased sampling test that the field lies in the tangent cone."""
    rng = np.random.default_rng(seed)
    pts = space.sample(rng, n_samples, boundary_fraction=0.5)
    F = field(pts)
    normal = F - space.tangent(pts, F)
    norms = np.linalg.norm(normal, axis=1)
    k = int(np.argmax(norms))
    return TangentialReport(bool(norms[k] <= TANGENTIAL_TOL), float(norms[k]), pts[k], n_samples)


def combine(family: FieldFamily, mu: Iterable[float], conical: bool = False, name: str = "combination") -> VectorField:
    """The field sum_f mu_f f."""
    mu = np.asarray(list(mu), dtype=float).reshape(-1)
    if mu.size != len(family):
        raise FieldError(f"need {len(family)} weights, got {mu.size}")
    if conical and np.any(mu < 0):
        raise FieldError("conical combination needs nonnegative weights")
    G = float(np.sum(np.abs(mu) * family.G)) if len(family) else 0.0
    if family.all_affine and len(family):
        P = np.einsum("f,fij->ij", mu, np.stack([f.P for f in family]))
        q = mu @ np.stack([f.q for f in family])
        return AffineField(P, q, name=name, G=G)
    if not len(family):
        raise FieldError("cannot combine an empty family")
    return SumField(family.fields, mu, name=name)
