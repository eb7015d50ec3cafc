"""Smooth games, built-in instances and multilinear extensions of normal-form games."""
from __future__ import annotations

import string
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import Ball, Box, ConvexSet, ProductSet, Simplex


class GameError(ValueError):
    pass


def max_norm(s: ConvexSet) -> float:
    """Upper bound on ``max_{x in s} ||x||``."""
    if isinstance(s, Ball):
        return float(np.linalg.norm(s.center()) + s.radius)
    if isinstance(s, Simplex):
        return 1.0
    lo, hi = s.bounding_box()
    return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))


@dataclass(frozen=True, eq=False)
class SmoothGame:
    """A game given by stacked own-gradients ``(grad_1 u_1, ..., grad_N u_N)``.

    ``gradient_fn`` and ``utility_fn`` map arrays of shape ``(..., D)`` to
    ``(..., D)`` and ``(..., N)`` respectively and must be pure.
    """

    space: ProductSet
    gradient_fn: Callable[[np.ndarray], np.ndarray]
    G: np.ndarray
    L: np.ndarray
    utility_fn: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"
    normal_form: "NormalFormGame | None" = None

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float).reshape(-1)
        L = np.asarray(self.L, dtype=float).reshape(-1)
        if G.size != len(self.space) or L.size != len(self.space):
            raise GameError("need one G and one L bound per player")
        if np.any(G < 0) or np.any(L < 0):
            raise GameError("gradient bounds must be nonnegative")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "L", L)

    @classmethod
    def from_player_gradients(
        cls,
        sets: Sequence[ConvexSet],
        gradients: Sequence[Callable[[np.ndarray], np.ndarray]],
        G,
        L,
        utilities: Sequence[Callable[[np.ndarray], float]] | None = None,
        name: str = "custom",
    ) -> "SmoothGame":
        """Wrap per-player callables ``x -> grad_i u_i(x)`` taking one full profile."""
        space = ProductSet(sets)

        def grad(x):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, space.dim)
            out = np.array([np.concatenate([np.atleast_1d(g(row)) for g in gradients]) for row in flat])
            return out.reshape(x.shape)

        util = None
        if utilities is not None:
            def util(x):
                x = np.asarray(x, dtype=float)
                flat = x.reshape(-1, space.dim)
                out = np.array([[u(row) for u in utilities] for row in flat], dtype=float)
                return out.reshape(x.shape[:-1] + (len(utilities),))

        return cls(space, grad, G, L, util, name)

    @property
    def n_players(self) -> int:
        return len(self.space)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def sets(self):
        return self.space.sets

    def gradients(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise GameError(f"profile has dimension {x.shape[-1]}, expected {self.dim}")
        return np.asarray(self.gradient_fn(x), dtype=float)

    def gradient(self, i: int, x) -> np.ndarray:
        return self.gradients(x)[..., self.space.slices[i]]

    def tangent_gradients(self, x) -> np.ndarray:
        """Per-player tangent-cone projections of the utility gradients."""
        x = np.asarray(x, dtype=float)
        return self.space.tangent(x, self.gradients(x))

    def utilities(self, x) -> np.ndarray:
        if self.utility_fn is None:
            raise GameError("not auditable: game has no utility evaluator")
        return np.asarray(self.utility_fn(np.asarray(x, dtype=float)), dtype=float)

    def check_bounds(self, n: int = 1000, seed: int = 0, warn: bool = True) -> dict:
        """Sample feasible profiles and compare gradients with the declared G and L."""
        rng = np.random.default_rng(seed)
        X = self.space.sample(rng, n, boundary_fraction=0.5)
        Y = self.space.sample(rng, n, boundary_fraction=0.5)
        gx, gy = self.gradients(X), self.gradients(Y)
        worst_G = np.zeros(self.n_players)
        worst_L = np.zeros(self.n_players)
        dist = np.linalg.norm(X - Y, axis=1)
        for i, sl in enumerate(self.space.slices):
            worst_G[i] = np.linalg.norm(gx[:, sl], axis=1).max()
            diff = np.linalg.norm(gx[:, sl] - gy[:, sl], axis=1)
            ok = dist > 1e-12
            worst_L[i] = (diff[ok] / dist[ok]).max() if np.any(ok) else 0.0
        bad_G = worst_G > self.G + 1e-9
        bad_L = worst_L > self.L + 1e-9
        if warn and (np.any(bad_G) or np.any(bad_L)):
            warnings.warn(
                f"{self.name}: declared bounds exceeded on samples "
                f"(G observed {worst_G.tolist()} vs {self.G.tolist()}, "
                f"L observed {worst_L.tolist()} vs {self.L.tolist()})",
                stacklevel=2,
            )
        return {"G_observed": worst_G, "L_observed": worst_L, "ok": not (np.any(bad_G) or np.any(bad_L))}


# ---------------------------------------------------------------------------
# built-in continuous games


def matching_pennies() -> SmoothGame:
    """u_1 = -x_1 x_2, u_2 = x_1 x_2 on [-1, 1] x [-1, 1]."""

    def grad(x):
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)

    def util(x):
        p = x[..., 0] * x[..., 1]
        return np.stack([-p, p], axis=-1)

    sets = (Box([-1.0], [1.0]), Box([-1.0], [1.0]))
    return SmoothGame(ProductSet(sets), grad, [1.0, 1.0], [1.0, 1.0], util, "matching_pennies")


def bilinear_game(A, B, set1: ConvexSet, set2: ConvexSet, name: str = "bilinear") -> SmoothGame:
    """Two players with u_1 = x_1' A x_2 and u_2 = x_1' B x_2."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != (set1.dim, set2.dim) or B.shape != A.shape:
        raise GameError(f"payoff matrices must have shape {(set1.dim, set2.dim)}")
    space = ProductSet((set1, set2))
    s1, s2 = space.slices

    def grad(x):
        return np.concatenate([x[..., s2] @ A.T, x[..., s1] @ B], axis=-1)

    def util(x):
        u1 = np.einsum("...i,ij,...j->...", x[..., s1], A, x[..., s2])
        u2 = np.einsum("...i,ij,...j->...", x[..., s1], B, x[..., s2])
        return np.stack([u1, u2], axis=-1)

    nA, nB = np.linalg.norm(A, 2), np.linalg.norm(B, 2)
    G = [nA * max_norm(set2), nB * max_norm(set1)]
    return SmoothGame(space, grad, G, [nA, nB], util, name)


# ---------------------------------------------------------------------------
# normal-form games


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """Payoff tensors ``payoffs[i][a_1, ..., a_N]`` (utilities, higher is better)."""

    payoffs: tuple
    action_names: tuple | None = None
    name: str = "normal_form"
    shape: tuple = field(init=False)

    def __post_init__(self):
        tensors = tuple(np.asarray(U, dtype=float) for U in self.payoffs)
        if not tensors:
            raise GameError("a normal-form game needs at least one player")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise GameError(f"payoff tensors must have one axis per player ({len(tensors)}), got shape {shape}")
        for i, U in enumerate(tensors):
            if U.shape != shape:
                raise GameError(f"payoff tensor {i} has shape {U.shape}, expected {shape}")
            if not np.all(np.isfinite(U)):
                raise GameError(f"payoff tensor {i} has non-finite entries")
        for U in tensors:
            U.setflags(write=False)
        object.__setattr__(self, "payoffs", tensors)
        object.__setattr__(self, "shape", shape)
        if self.action_names is not None:
            names = tuple(tuple(str(a) for a in n) for n in self.action_names)
            if tuple(len(n) for n in names) != shape:
                raise GameError("action_names do not match action counts")
            object.__setattr__(self, "action_names", names)

    @property
    def n_players(self) -> int:
        return len(self.payoffs)

    @property
    def n_actions(self) -> tuple:
        return self.shape

    def profiles(self):
        return np.ndindex(*self.shape)

    def action_index(self, player: int, label) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        if self.action_names is None:
            raise GameError(f"game has no action names; cannot resolve {label!r}")
        try:
            return self.action_names[player].index(str(label))
        except ValueError:
            raise GameError(f"unknown action {label!r} for player {player}") from None


def _contract_subscripts(n: int, keep: int | None):
    letters = string.ascii_lowercase[:n]
    ops = [letters] + [f"z{letters[j]}" for j in range(n) if j != keep]
    out = "z" + (letters[keep] if keep is not None else "")
    return ",".join(ops) + "->" + out


def multilinear_extension(nf: NormalFormGame) -> SmoothGame:
    """The mixed-strategy extension on a product of simplices."""
    n = nf.n_players
    if n > 25:
        raise GameError("too many players for the dense extension")
    sets = tuple(Simplex(k) for k in nf.shape)
    space = ProductSet(sets)
    grad_subs = [_contract_subscripts(n, i) for i in range(n)]
    util_subs = _contract_subscripts(n, None)

    def grad(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, space.dim)
        blocks = [flat[:, sl] for sl in space.slices]
        out = np.empty_like(flat)
        for i, sl in enumerate(space.slices):
            others = [blocks[j] for j in range(n) if j != i]
            out[:, sl] = np.einsum(grad_subs[i], nf.payoffs[i], *others)
        return out.reshape(x.shape)

    def util(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, space.dim)
        blocks = [flat[:, sl] for sl in space.slices]
        out = np.stack([np.einsum(util_subs, U, *blocks) for U in nf.payoffs], axis=-1)
        return out.reshape(x.shape[:-1] + (n,))

    amax = max(nf.shape)
    umax = np.array([np.abs(U).max() for U in nf.payoffs])
    G = np.sqrt(np.array(nf.shape, dtype=float)) * umax
    L = (n - 1) * np.sqrt(np.array(nf.shape, dtype=float) * amax) * umax
    return SmoothGame(space, grad, G, L, util, f"extension({nf.name})", normal_form=nf)


def pure_profile(nf: NormalFormGame, actions: Sequence[int]) -> np.ndarray:
    """Stacked one-hot mixed strategies for a pure action profile."""
    return np.concatenate([np.eye(k)[a] for k, a in zip(nf.shape, actions)])


def random_normal_form(rng: np.random.Generator, shape: Sequence[int], scale: float = 1.0) -> NormalFormGame:
    shape = tuple(int(s) for s in shape)
    return NormalFormGame(tuple(scale * rng.uniform(-1, 1, size=shape) for _ in shape), name=f"random{shape}")


def finite_difference_audit(game: SmoothGame, x, h: float = 1e-5) -> float:
    """Max relative error of central differences of u_i against grad_i u_i."""
    if game.utility_fn is None:
        raise GameError("not auditable: game has no utility evaluator")
    x = np.asarray(x, dtype=float)
    g = game.gradients(x)
    worst = 0.0
    for i, sl in enumerate(game.space.slices):
        for k in range(sl.start, sl.stop):
            step = np.zeros_like(x)
            step[k] = h
            fd = (game.utilities(x + step)[i] - game.utilities(x - step)[i]) / (2 * h)
            worst = max(worst, abs(fd - g[k]) / max(1.0, abs(g[k])))
    return float(worst)


# ---------------------------------------------------------------------------
# bundled 2x2 games


def _two_player(name, actions, U1, U2) -> NormalFormGame:
    return NormalFormGame((np.array(U1, float), np.array(U2, float)), (tuple(actions), tuple(actions)), name)


def prisoners_dilemma() -> NormalFormGame:
    """Actions (C, D); mutual cooperation 3, temptation 5, sucker 0, punishment 1."""
    return _two_player("prisoners_dilemma", ("C", "D"), [[3, 0], [5, 1]], [[3, 5], [0, 1]])


def matching_pennies_nf() -> NormalFormGame:
    return _two_player("matching_pennies", ("H", "T"), [[1, -1], [-1, 1]], [[-1, 1], [1, -1]])


def battle_of_sexes() -> NormalFormGame:
    return _two_player("battle_of_sexes", ("O", "F"), [[2, 0], [0, 1]], [[1, 0], [0, 2]])


def stag_hunt() -> NormalFormGame:
    return _two_player("stag_hunt", ("S", "H"), [[4, 0], [3, 3]], [[4, 3], [0, 3]])


def chicken() -> NormalFormGame:
    return _two_player("chicken", ("S", "C"), [[0, -1], [1, -10]], [[0, 1], [-1, -10]])


BUNDLED_NORMAL_FORM = {
    "prisoners_dilemma": prisoners_dilemma,
    "matching_pennies_nf": matching_pennies_nf,
    "battle_of_sexes": battle_of_sexes,
    "stag_hunt": stag_hunt,
    "chicken": chicken,
}
