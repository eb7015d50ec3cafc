"""Numerical audits of dual certificates, normal-form equilibria and small LPs over (C)CE."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .deviations import FieldFamily, VectorField
from .dynamics import EmpiricalDistribution
from .games import GameError, NormalFormGame, SmoothGame
from .geometry import Ball, Box, ProductSet, Simplex

PROBABILITY_TOL = 1e-12


class CertificateError(ValueError):
    pass


class LPError(RuntimeError):
    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class CoarseFunction:
    """A scalar function h on stacked profiles with its gradient (both batched)."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def from_field(cls, fld: VectorField) -> "CoarseFunction":
        if not fld.is_gradient:
            raise CertificateError(f"field {fld.name} is not a gradient field")
        return cls(fld.name, fld.potential, fld)

    def scaled(self, c: float, name: str | None = None) -> "CoarseFunction":
        return CoarseFunction(
            name or f"{c:g}*{self.name}",
            lambda x: c * self.value(x),
            lambda x: c * self.gradient(x),
        )

    def __add__(self, other: "CoarseFunction") -> "CoarseFunction":
        return CoarseFunction(
            f"{self.name}+{other.name}",
            lambda x: self.value(x) + other.value(x),
            lambda x: self.gradient(x) + other.gradient(x),
        )


@dataclass(frozen=True)
class Certificate:
    """A dual solution normalized so that ``margin(x) >= 0`` everywhere means feasible.

    ``kind`` is ``coarse`` (a function h) or ``field`` (weights ``mu`` over a
    family); ``mode`` is ``stationary`` or ``local``. The certificate then
    states that every matching equilibrium has E[q] >= gamma.
    """

    kind: str
    mode: str
    gamma: float
    q: Callable[[np.ndarray], np.ndarray]
    G_q: float = np.inf
    h: CoarseFunction | None = None
    family: FieldFamily | None = None
    mu: np.ndarray | None = None
    name: str = "certificate"
    note: str = ""

    def __post_init__(self):
        if self.kind not in ("coarse", "field"):
            raise CertificateError(f"unknown certificate kind {self.kind!r}")
        if self.mode not in ("stationary", "local"):
            raise CertificateError(f"unknown certificate mode {self.mode!r}")
        if self.kind == "coarse" and self.h is None:
            raise CertificateError("coarse certificate needs h")
        if self.kind == "field":
            if self.family is None or self.mu is None:
                raise CertificateError("field certificate needs family and mu")
            mu = np.asarray(self.mu, dtype=float).reshape(-1)
            if mu.size != len(self.family):
                raise CertificateError(f"mu has {mu.size} entries for {len(self.family)} fields")
            if self.mode == "local" and np.any(mu < 0):
                raise CertificateError("local field certificates need mu >= 0")
            object.__setattr__(self, "mu", mu)

    @property
    def program(self) -> str:
        base = "CCE" if self.kind == "coarse" else "CE"
        return f"dual-{self.mode[0].upper()}{base}"

    def deviation(self, x: np.ndarray) -> np.ndarray:
        """The vector field paired with the utility gradients, shape (n, D)."""
        if self.kind == "coarse":
            return self.h.gradient(x)
        return np.einsum("f,fnd->nd", self.mu, self.family.evaluate(x))

    def margin(self, game: SmoothGame, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dev = self.deviation(x)
        grads = game.gradients(x)
        if self.mode == "stationary":
            pairing = np.sum(dev * game.space.tangent(x, grads), axis=-1)
            return self.q(x) - self.gamma - pairing
        return self.q(x) - self.gamma + np.sum(dev * grads, axis=-1)


def _set_grid(s, resolution: int) -> np.ndarray:
    if isinstance(s, Box):
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(s.lower, s.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.dim)
    if isinstance(s, Simplex):
        n = max(resolution - 1, 1)
        pts = [c for c in itertools.product(range(n + 1), repeat=s.dim - 1) if sum(c) <= n]
        pts = np.array([list(c) + [n - sum(c)] for c in pts], dtype=float) / n
        return pts.reshape(-1, s.dim)
    lo, hi = s.bounding_box()
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    cand = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.dim)
    inside = cand[s.contains(cand)] if cand.size else cand
    if isinstance(s, Ball):
        return np.vstack([inside, s.project(cand)])
    return np.vstack([inside, s.project(cand)]) if len(inside) < len(cand) else inside


def profile_grid(space: ProductSet, resolution: int) -> np.ndarray:
    """Cartesian product of per-set grids (box lattice, simplex lattice, projected box lattice)."""
    grids = [_set_grid(s, resolution) for s in space.sets]
    n = int(np.prod([len(g) for g in grids]))
    if n > 5_000_000:
        raise CertificateError(f"grid with {n} points is too large; lower the resolution")
    idx = np.stack(np.meshgrid(*[np.arange(len(g)) for g in grids], indexing="ij"), axis=-1).reshape(-1, len(grids))
    return np.hstack([g[idx[:, k]] for k, g in enumerate(grids)])


@dataclass(frozen=True)
class CertificateReport:
    program: str
    name: str
    gamma: float
    min_margin: float
    argmin: np.ndarray
    resolution: int
    n_random: int
    seed: int
    n_points: int

    @property
    def feasible(self) -> bool:
        return self.min_margin >= 0

    def feasible_at(self, tol: float) -> bool:
        return self.min_margin >= -tol

    @property
    def certified_gamma(self) -> float:
        """Largest gamma the certificate supports on the evaluated points."""
        return self.gamma + self.min_margin

    def to_text(self) -> str:
        fmt = lambda v: format(float(v), ".17g")  # noqa: E731
        lines = [
            f"program={self.program}",
            f"name={self.name}",
            f"gamma={fmt(self.gamma)}",
            f"min_margin={fmt(self.min_margin)}",
            "argmin=" + ",".join(fmt(v) for v in self.argmin),
            f"certified_gamma={fmt(self.certified_gamma)}",
            f"grid_resolution={self.resolution}",
            f"grid_random_samples={self.n_random}",
            f"grid_seed={self.seed}",
            f"grid_points={self.n_points}",
        ]
        return "\n".join(lines) + "\n"


def check_certificate(
    game: SmoothGame,
    cert: Certificate,
    resolution: int = 101,
    n_random: int = 10_000,
    seed: int = 0,
    chunk: int = 200_000,
) -> CertificateReport:
    """Minimum margin over a deterministic grid plus seeded random samples."""
    if resolution < 2 and n_random < 1:
        raise CertificateError("grid is empty")
    parts = []
    if resolution >= 2:
        parts.append(profile_grid(game.space, resolution))
    if n_random > 0:
        parts.append(game.space.sample(np.random.default_rng(seed), n_random, boundary_fraction=0.3))
    pts = np.vstack(parts)
    best, arg = np.inf, None
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        m = cert.margin(game, block)
        k = int(np.argmin(m))
        if m[k] < best:
            best, arg = float(m[k]), block[k].copy()
    return CertificateReport(cert.program, cert.name, float(cert.gamma), best, arg, resolution, n_random, seed, len(pts))


# ---------------------------------------------------------------------------
# matching pennies


def _quarter_angle(x):
    x1, x2 = x[..., 0], x[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(x1 * x2 > 0, np.arctan(x1 / x2), np.arctan(-x2 / x1))
    return np.nan_to_num(a)


def pennies_lyapunov(M1: float, M2: float = 10.0) -> CoarseFunction:
    """h = 0 on the unit disc and -M1 (r-1)^2 / (1 + M1 (r-1)) * M2 * A(x) outside.

    A is arctan(x1/x2) when x1 x2 > 0 and arctan(-x2/x1) otherwise; both
    branches have gradient (x2, -x1) / r^2. Along the unconstrained flow
    (-x2, x1) the derivative of h is M1 M2 (r-1)^2 / (1 + M1 (r-1)).
    """
    if M1 <= 0 or M2 <= 0:
        raise CertificateError("M1 and M2 must be positive")

    def radial(r):
        s = np.maximum(r - 1.0, 0.0)
        den = 1.0 + M1 * s
        phi = M1 * s**2 / den
        dphi = M1 * s * (2.0 + M1 * s) / den**2
        return phi, dphi

    def value(x):
        x = np.asarray(x, dtype=float)
        phi, _ = radial(np.linalg.norm(x, axis=-1))
        return -M2 * phi * _quarter_angle(x)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        phi, dphi = radial(r)
        safe = np.where(r > 0, r, 1.0)
        radial_dir = x / safe[..., None]
        dA = np.stack([x[..., 1], -x[..., 0]], axis=-1) / (safe**2)[..., None]
        A = _quarter_angle(x)
        return -M2 * ((dphi * A)[..., None] * radial_dir + phi[..., None] * dA)

    return CoarseFunction(f"pennies_lyapunov(M1={M1:g},M2={M2:g})", value, gradient)


def pennies_radius_delta(M1: float) -> float:
    return 2.0 / (5.0 * M1 - 2.0)


def _neg_sq_radius(x):
    return -np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)


def pennies_certificate(M1: float = 100.0, M2: float = 10.0) -> Certificate:
    """Certificate for E[x1^2 + x2^2] <= 1 + delta, written as E[-r^2] >= -(1 + delta)."""
    delta = pennies_radius_delta(M1)
    h = pennies_lyapunov(M1, M2).scaled(-1.0, name=f"-pennies_lyapunov(M1={M1:g},M2={M2:g})")
    return Certificate(
        "coarse",
        "stationary",
        -(1.0 + delta),
        _neg_sq_radius,
        G_q=2.0 * np.sqrt(2.0),
        h=h,
        name="pennies_radius",
        note=f"E[r^2] <= 1 + {delta:.17g}",
    )


def rotational_certificate(
    k: int,
    phase: float = 0.0,
    p: Callable | None = None,
    dp: Callable | None = None,
    M: float = 100.0,
    A: float = 10.0,
    gamma: float = 0.0,
) -> Certificate:
    """Certificate for E[p(r) sin(k theta + phase)] >= gamma on matching pennies.

    Uses l = -p(r) cos(k theta + phase) / k, which the unconstrained flow
    differentiates to q exactly, plus A times the radius certificate's
    function with parameter M to absorb the boundary. Default p(r) = r^k.
    """
    if k < 1:
        raise CertificateError("k must be a positive integer")
    if p is None:
        p = lambda r: r**k  # noqa: E731
        dp = lambda r: k * r ** (k - 1)  # noqa: E731
    elif dp is None:
        raise CertificateError("a custom p needs its derivative dp")

    def q(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return p(r) * np.sin(k * np.arctan2(x[..., 1], x[..., 0]) + phase)

    def value(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return -p(r) * np.cos(k * np.arctan2(x[..., 1], x[..., 0]) + phase) / k

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        ang = k * np.arctan2(x[..., 1], x[..., 0]) + phase
        dtheta = np.stack([-x[..., 1], x[..., 0]], axis=-1) / (safe**2)[..., None]
        g = -(dp(r) * np.cos(ang) / k)[..., None] * x / safe[..., None] + (p(r) * np.sin(ang))[..., None] * dtheta
        return np.where((r > 0)[..., None], g, 0.0)

    ell = CoarseFunction(f"rotational(k={k})", value, gradient)
    h = ell + pennies_lyapunov(M).scaled(-A)
    return Certificate("coarse", "stationary", gamma, q, h=h, name=f"rotational_k{k}")


# ---------------------------------------------------------------------------
# normal-form equivalences


@dataclass(frozen=True)
class ActionDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < -PROBABILITY_TOL):
            raise CertificateError("action distribution has negative entries")
        if abs(p.sum() - 1.0) > PROBABILITY_TOL * max(1, p.size):
            raise CertificateError(f"action distribution sums to {p.sum():.17g}")
        object.__setattr__(self, "probs", p)

    @property
    def shape(self) -> tuple:
        return self.probs.shape

    @classmethod
    def point_mass(cls, shape, profile) -> "ActionDistribution":
        p = np.zeros(shape)
        p[tuple(profile)] = 1.0
        return cls(p)


def induce_action_distribution(dist: EmpiricalDistribution, nf: NormalFormGame) -> ActionDistribution:
    """sigma'(a) = sum_samples w * prod_j x_j(a_j)."""
    pts = np.atleast_2d(dist.points)
    if pts.shape[1] != sum(nf.shape):
        raise CertificateError(f"profiles have dimension {pts.shape[1]}, game needs {sum(nf.shape)}")
    offs = np.concatenate([[0], np.cumsum(nf.shape)])
    blocks = [pts[:, offs[j] : offs[j + 1]] for j in range(nf.n_players)]
    for j, b in enumerate(blocks):
        if np.any(b < -1e-9) or np.any(np.abs(b.sum(axis=1) - 1.0) > 1e-9):
            raise CertificateError(f"player {j} blocks are not on the simplex")
    letters = "abcdefghijklmnopqrstuvwxy"[: nf.n_players]
    expr = ",".join(f"z{c}" for c in letters) + ",z->" + letters
    probs = np.einsum(expr, *blocks, dist.weights)
    return ActionDistribution(probs)


@dataclass(frozen=True)
class EquilibriumReport:
    mode: str
    constraints: dict
    max_value: float
    worst: str
    tol: float

    @property
    def max_violation(self) -> float:
        return max(0.0, self.max_value)

    @property
    def passes(self) -> bool:
        return self.max_value <= self.tol

    def to_text(self) -> str:
        fmt = lambda v: format(float(v), ".17g")  # noqa: E731
        lines = [
            f"mode={self.mode}",
            f"passes={str(self.passes).lower()}",
            f"max_violation={fmt(self.max_violation)}",
            f"worst_constraint={self.worst}",
            f"tol={fmt(self.tol)}",
        ]
        lines += [f"constraint {k}={fmt(v)}" for k, v in self.constraints.items()]
        return "\n".join(lines) + "\n"


def _deviate(U: np.ndarray, player: int, action: int) -> np.ndarray:
    """u_i(a'_i, a_-i) broadcast over full profiles a."""
    return np.broadcast_to(np.take(U, [action], axis=player), U.shape)


def equilibrium_constraints(nf: NormalFormGame, mode: str, a_star: Sequence[int] | None = None):
    """Rows c such that the constraint reads sum_a sigma'(a) c(a) <= 0, keyed by field name."""
    rows = {}
    if mode == "CCE":
        for i, U in enumerate(nf.payoffs):
            for b in range(nf.shape[i]):
                rows[f"pull_p{i}_a{b}"] = _deviate(U, i, b) - U
    elif mode == "CE":
        for i, U in enumerate(nf.payoffs):
            for a in range(nf.shape[i]):
                for b in range(nf.shape[i]):
                    if a == b:
                        continue
                    mask = np.zeros(nf.shape[i])
                    mask[a] = 1.0
                    shape = [1] * nf.n_players
                    shape[i] = -1
                    rows[f"ce_p{i}_{a}to{b}"] = mask.reshape(shape) * (_deviate(U, i, b) - U)
    elif mode == "AverageCCE":
        if a_star is None:
            raise CertificateError("AverageCCE needs a reference profile a_star")
        a_star = [nf.action_index(i, a) for i, a in enumerate(a_star)]
        total = sum(_deviate(U, i, a_star[i]) - U for i, U in enumerate(nf.payoffs))
        rows["pull_aggregate"] = np.asarray(total, dtype=float)
    else:
        raise CertificateError(f"unknown equilibrium mode {mode!r}")
    return rows


def check_equilibrium(
    nf: NormalFormGame,
    sigma: ActionDistribution,
    mode: str,
    tol: float = 1e-9,
    a_star: Sequence[int] | None = None,
) -> EquilibriumReport:
    """Evaluate every CCE / CE / average-CCE constraint exactly."""
    if sigma.shape != nf.shape:
        raise CertificateError(f"distribution shape {sigma.shape} does not match game {nf.shape}")
    rows = equilibrium_constraints(nf, mode, a_star)
    values = {k: float(np.sum(sigma.probs * c)) for k, c in rows.items()}
    worst = max(values, key=values.get)
    return EquilibriumReport(mode, values, values[worst], worst, tol)


# ---------------------------------------------------------------------------
# dense LP


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    cs_residual: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _simplex_phase(T, basis, n_cols, max_iter, tol):
    """Bland's-rule simplex on tableau T whose last row holds reduced costs."""
    it = 0
    while True:
        cost = T[-1, :n_cols]
        entering = next((j for j in range(n_cols) if cost[j] < -tol), None)
        if entering is None:
            return it
        col = T[:-1, entering]
        best, leave = np.inf, None
        for r in range(len(basis)):
            if col[r] > tol:
                ratio = T[r, -1] / col[r]
                if ratio < best - tol or (abs(ratio - best) <= tol and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave is None:
            raise LPError("linear program is unbounded")
        _pivot(T, leave, entering)
        basis[leave] = entering
        it += 1
        if it > max_iter:
            raise LPError("simplex iteration limit reached")


def dense_simplex(c, A_eq, b_eq, tol: float = 1e-11, max_iter: int = 50_000) -> LPResult:
    """Minimize c'x subject to A_eq x = b_eq, x >= 0 (two-phase tableau, Bland's rule)."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A_eq, dtype=float).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    # phase 1 with one artificial per row
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    it = _simplex_phase(T, basis, n + m, max_iter, tol)
    if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise LPError(f"linear program is infeasible (phase-1 value {-T[-1, -1]:.3g})")
    # drive artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            cand = next((j for j in range(n) if abs(T[r, j]) > 1e-9), None)
            if cand is None:
                continue
            _pivot(T, r, cand)
            basis[r] = cand
        keep.append(r)
    rows = keep
    T2 = np.zeros((len(rows) + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    basis = [basis[r] for r in rows]
    T2[-1, :n] = c
    for r, j in enumerate(basis):
        T2[-1] -= c[j] * T2[r]
    try:
        it += _simplex_phase(T2, basis, n, max_iter, tol)
    except LPError as exc:
        x = np.zeros(n)
        x[basis] = T2[:-1, -1]
        raise LPError(str(exc), best_value=float(c @ x)) from None
    x = np.zeros(n)
    x[basis] = T2[:-1, -1]
    x = np.maximum(x, 0.0)
    # duals from B' y = c_B on the original rows
    B = A[:, basis]
    y, *_ = np.linalg.lstsq(B.T, c[basis], rcond=None)
    y = np.where(neg, -y, y)
    A_orig = np.asarray(A_eq, dtype=float)
    reduced = c - A_orig.T @ y
    cs = float(np.max(np.abs(x * reduced), initial=0.0))
    if np.min(reduced, initial=0.0) < -1e-8:
        raise LPError("dual infeasible at termination", best_value=float(c @ x))
    return LPResult(x, float(c @ x), y, reduced, cs, it)


@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    sigma: ActionDistribution
    duals: np.ndarray
    cs_residual: float
    mode: str
    sense: str


def worst_case_expectation(nf: NormalFormGame, q, mode: str = "CCE", sense: str = "min", a_star=None) -> WorstCaseResult:
    """Optimize E[q] over the (coarse) correlated equilibria of a normal-form game.

    ``q`` is an array of shape ``nf.shape`` or a callable on profile tuples.
    Duals are returned for the equilibrium constraints (nonnegative) followed
    by the normalization.
    """
    if sense not in ("min", "max"):
        raise CertificateError(f"unknown sense {sense!r}")
    qv = np.array([q(a) for a in nf.profiles()]).reshape(nf.shape) if callable(q) else np.asarray(q, dtype=float)
    if qv.shape != nf.shape:
        raise CertificateError(f"q has shape {qv.shape}, game has {nf.shape}")
    rows = equilibrium_constraints(nf, mode, a_star)
    n_a = int(np.prod(nf.shape))
    if n_a > 10_000 or len(rows) > 1_000:
        raise CertificateError("game too large for the dense solver")
    C = np.stack([r.reshape(-1) for r in rows.values()])
    k = C.shape[0]
    # sigma >= 0, slacks s >= 0: C sigma + s = 0, 1'sigma = 1
    A_eq = np.zeros((k + 1, n_a + k))
    A_eq[:k, :n_a] = C
    A_eq[:k, n_a:] = np.eye(k)
    A_eq[k, :n_a] = 1.0
    b_eq = np.zeros(k + 1)
    b_eq[k] = 1.0
    sign = 1.0 if sense == "min" else -1.0
    cost = np.concatenate([sign * qv.reshape(-1), np.zeros(k)])
    res = dense_simplex(cost, A_eq, b_eq)
    sigma = res.x[:n_a]
    sigma = sigma / sigma.sum()
    # constraint multipliers in the sign convention lambda >= 0 for C sigma <= 0
    duals = sign * res.duals
    duals[:k] = -duals[:k]
    return WorstCaseResult(sign * res.value, ActionDistribution(sigma.reshape(nf.shape)), duals, res.cs_residual, mode, sense)


def _simplex_lattice(m: int, n: int) -> np.ndarray:
    pts = []
    for c in itertools.combinations(range(n + m - 1), m - 1):
        bars = (-1,) + c + (n + m - 1,)
        pts.append([bars[j + 1] - bars[j] - 1 for j in range(m)])
    return np.array(pts, dtype=float) / n


@dataclass(frozen=True)
class GridOracle:
    inner: float | None
    outer: float
    gap: float
    resolution: int


def grid_oracle(nf: NormalFormGame, q, mode: str = "CCE", sense: str = "min", resolution: int = 50, a_star=None) -> GridOracle:
    """Brute-force bounds on the LP optimum from the lattice Delta(A) / resolution.

    ``inner`` optimizes over exactly feasible lattice points (None if there
    are none), so it can never beat the true optimum. ``outer`` relaxes each
    constraint by its Lipschitz constant times the rounding distance, so the
    true optimum can never beat it. ``gap`` bounds the change in E[q] over
    that rounding distance (l1 distance below |A| / resolution).
    """
    qv = np.asarray(q, dtype=float).reshape(-1)
    C = np.stack([r.reshape(-1) for r in equilibrium_constraints(nf, mode, a_star).values()])
    m = qv.size
    pts = _simplex_lattice(m, resolution)
    dist = m / resolution
    lhs = pts @ C.T
    pick = np.min if sense == "min" else np.max
    exact = np.all(lhs <= 1e-12, axis=1)
    inner = float(pick(pts[exact] @ qv)) if np.any(exact) else None
    slack = 0.5 * (C.max(axis=1) - C.min(axis=1)) * dist
    outer = float(pick(pts[np.all(lhs <= slack + 1e-12, axis=1)] @ qv))
    gap = 0.5 * (qv.max() - qv.min()) * dist
    return GridOracle(inner, outer, float(gap), resolution)


# ---------------------------------------------------------------------------
# smoothness


@dataclass(frozen=True)
class SmoothnessParams:
    lam: float
    mu: float
    a_star: tuple | None = None

    def __post_init__(self):
        if not self.mu < 1:
            raise CertificateError(f"smoothness needs mu < 1, got {self.mu}")


def check_smoothness(costs, params: SmoothnessParams) -> dict:
    """Check sum_i C_i(a*_i, a_-i) <= lam C(a*) + mu C(a) over every profile a.

    ``costs`` is a NormalFormGame whose payoff tensors are read as costs, or
    a sequence of cost tensors.
    """
    tensors = costs.payoffs if isinstance(costs, NormalFormGame) else tuple(np.asarray(c, float) for c in costs)
    shape = tensors[0].shape
    if any(np.any(c < 0) for c in tensors):
        raise CertificateError("costs must be nonnegative")
    social = sum(tensors)
    a_star = params.a_star
    if a_star is None:
        a_star = tuple(int(v) for v in np.unravel_index(int(np.argmin(social)), shape))
    if len(a_star) != len(shape):
        raise GameError("a_star has the wrong number of players")
    lhs = sum(_deviate(c, i, a_star[i]) for i, c in enumerate(tensors))
    slack = params.lam * social[tuple(a_star)] + params.mu * social - lhs
    k = int(np.argmin(slack))
    return {
        "holds": bool(slack.reshape(-1)[k] >= -1e-12),
        "worst_slack": float(slack.reshape(-1)[k]),
        "worst_profile": tuple(int(v) for v in np.unravel_index(k, shape)),
        "a_star": tuple(a_star),
    }


def poa_bound(params: SmoothnessParams) -> float:
    return params.lam / (1.0 - params.mu)
