"""Regret matching against finite vector-field families, with fixed-point oracles."""
from __future__ import annotations

import copy
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .deviations import FieldFamily, check_tangential, combine
from .dynamics import EmpiricalDistribution
from .games import SmoothGame
from .geometry import ProductSet
from .regret import TheoremViolation, stationary_pairing, unprojected_pairing

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
MAX_FACES = 4096


class MatcherError(ValueError):
    pass


class OracleFailure(RuntimeError):
    def __init__(self, message: str, state: "MatcherState | None" = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class FixedPointResult:
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool = True
    method: str = "pgd"


def fixed_point_residual(P: np.ndarray, q: np.ndarray, space: ProductSet, x: np.ndarray) -> float:
    """Norm of the tangent part of P x + q at x (zero exactly at fixed points)."""
    return float(np.linalg.norm(space.tangent(x, P @ x + q)))


def _power_iteration(M: np.ndarray, iters: int = 200) -> float:
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        lam_new = float(v @ M @ v)
        if abs(lam_new - lam) <= 1e-14 * max(1.0, lam_new):
            return lam_new
        lam = lam_new
    return lam


def _pgd(P, q, space, tol, max_iter):
    lam = _power_iteration(P.T @ P)
    x = space.center()
    if lam <= 0:
        return x, 0
    step = 1.0 / (2.0 * lam)
    for k in range(max_iter):
        r = P @ x + q
        if np.linalg.norm(space.tangent(x, r)) <= tol:
            return x, k
        x = space.project(x - step * 2.0 * (P.T @ r))
    return x, max_iter


def _enumerate_faces(P, q, space, tol):
    """Exact fixed point by solving the KKT system on each candidate face.

    Looks for x with ``A_W x = b_W``, ``E x = e`` and ``P x + q = A_W' lam + E' nu``
    with ``lam >= 0`` and ``x`` feasible, trying faces of increasing codimension.
    """
    hs = space.halfspaces()
    if hs is None:
        return None
    A, b, E, e = hs
    D = space.dim
    n_eq = 0 if E is None else E.shape[0]
    max_codim = D - n_eq
    center = space.center()
    checked = 0
    for size in range(0, max_codim + 1):
        for W in itertools.combinations(range(A.shape[0]), size):
            checked += 1
            if checked > MAX_FACES:
                return None
            W = list(W)
            nW = len(W)
            # unknowns z = (x, lam, nu)
            n = D + nW + n_eq
            rows, rhs = [], []
            top = np.zeros((D, n))
            top[:, :D] = P
            if nW:
                top[:, D : D + nW] = -A[W].T
            if n_eq:
                top[:, D + nW :] = -E.T
            rows.append(top)
            rhs.append(-q)
            if nW:
                blk = np.zeros((nW, n))
                blk[:, :D] = A[W]
                rows.append(blk)
                rhs.append(b[W])
            if n_eq:
                blk = np.zeros((n_eq, n))
                blk[:, :D] = E
                rows.append(blk)
                rhs.append(e)
            K = np.vstack(rows)
            c = np.concatenate(rhs)
            z, *_ = np.linalg.lstsq(K, c, rcond=None)
            if np.linalg.norm(K @ z - c) > 1e-9 * (1.0 + np.linalg.norm(c)):
                continue
            # move within the solution set towards the reference point
            _, sv, Vt = np.linalg.svd(K)
            rank = int(np.sum(sv > 1e-10 * max(1.0, sv.max() if sv.size else 1.0)))
            Z = Vt[rank:].T
            if Z.shape[1]:
                w, *_ = np.linalg.lstsq(Z[:D], center - z[:D], rcond=None)
                z = z + Z @ w
            x, lam = z[:D], z[D : D + nW]
            ok = np.all(lam >= -1e-10) and np.all(A @ x <= b + FEAS_TOL)
            if not ok and Z.shape[1]:
                # feasibility LP over the solution set
                G_ub = np.vstack([A @ Z[:D], -Z[D : D + nW]]) if nW else A @ Z[:D]
                h_ub = np.concatenate([b - A @ z[:D], z[D : D + nW]]) if nW else b - A @ z[:D]
                res = linprog(np.zeros(Z.shape[1]), A_ub=G_ub, b_ub=h_ub, bounds=[(None, None)] * Z.shape[1], method="highs")
                if res.status == 0:
                    z = z + Z @ res.x
                    x, lam = z[:D], z[D : D + nW]
                    ok = np.all(lam >= -1e-9) and np.all(A @ x <= b + FEAS_TOL)
            if ok:
                x = space.project(x)
                if fixed_point_residual(P, q, space, x) <= max(tol, 1e-9):
                    return x, checked
    return None


def fixed_point_affine(
    family: FieldFamily,
    mu,
    space: ProductSet,
    tol: float = 1e-10,
    max_iter: int = 20_000,
    method: str = "auto",
) -> FixedPointResult:
    """Fixed point of ``sum_f mu_f f`` for affine fields.

    ``pgd`` runs projected gradient descent on ||P x + q||^2 with step
    1 / (2 lambda_max(P'P)); ``enumerate`` solves the KKT system face by face;
    ``auto`` enumerates on small polyhedral products and otherwise runs PGD,
    falling back to enumeration when PGD stalls (signed weights may leave no
    zero of the field, only a point where it lies in the normal cone).
    The residual is the norm of the field's tangent part at the point.
    """
    if not family.all_affine:
        raise MatcherError("fixed_point_affine needs affine-linear fields")
    mu = np.asarray(mu, dtype=float)
    if not np.any(mu):
        return FixedPointResult(space.center(), 0.0, 0, True, "trivial")
    comb = combine(family, mu)
    P, q = comb.P, comb.q
    small = space.halfspaces() is not None and space.halfspaces()[0].shape[0] <= 12
    if method == "enumerate" or (method == "auto" and small):
        found = _enumerate_faces(P, q, space, tol)
        if found is not None:
            x, n = found
            return FixedPointResult(x, fixed_point_residual(P, q, space, x), n, True, "enumerate")
        if method == "enumerate":
            x = space.center()
            return FixedPointResult(x, fixed_point_residual(P, q, space, x), 0, False, "enumerate")
    x, n = _pgd(P, q, space, tol, max_iter)
    res = fixed_point_residual(P, q, space, x)
    if res > tol and method == "auto" and not small:
        found = _enumerate_faces(P, q, space, tol)
        if found is not None:
            x2, n2 = found
            return FixedPointResult(x2, fixed_point_residual(P, q, space, x2), n + n2, True, "pgd+enumerate")
    return FixedPointResult(x, res, n, res <= tol, "pgd")


# ---------------------------------------------------------------------------


def instantaneous_regret(game: SmoothGame, x, family: FieldFamily, mode: str = "stationary") -> np.ndarray:
    """Per-field regret at a single profile.

    ``stationary``: sum_i <f_i(x), tangent part of grad_i u_i(x)>;
    ``local``: sum_i <f_i(x), grad_i u_i(x)> (equal to the local regret for tangential fields).
    """
    x = np.asarray(x, dtype=float)
    if mode == "stationary":
        return stationary_pairing(game, family, x)
    if mode == "local":
        return unprojected_pairing(game, family, x)
    raise MatcherError(f"unknown mode {mode!r}")


def theorem_bound(game: SmoothGame, family: FieldFamily, iterations: int) -> float:
    """sqrt(|F| / (k + 1)) * sum_i G_i * max_f G_f after ``k`` completed iterations."""
    B = float(np.sum(game.G) * (family.G.max() if len(family) else 0.0))
    return float(np.sqrt(len(family) / (iterations + 1.0)) * B)


@dataclass
class MatcherState:
    mode: str
    t: int
    points: np.ndarray
    weights: np.ndarray
    raw_mu: np.ndarray
    alphas: list = field(default_factory=list)
    log: list = field(default_factory=list)
    converged: bool = False
    hit_max_iter: bool = False
    bound_violations: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.t - 1

    @property
    def mu(self) -> np.ndarray:
        """Regret vector driving the algorithm (rectified in local mode)."""
        return self.raw_mu if self.mode == "stationary" else np.maximum(self.raw_mu, 0.0)

    def score(self) -> float:
        m = self.mu
        if not m.size:
            return 0.0
        return float(np.max(np.abs(m)) if self.mode == "stationary" else np.max(m))

    @property
    def distribution(self) -> EmpiricalDistribution:
        w = self.weights / self.weights.sum()
        return EmpiricalDistribution(self.points, w)

    def snapshot(self) -> "MatcherState":
        return copy.deepcopy(self)

    def log_csv(self) -> str:
        fmt = lambda v: format(float(v), ".17g")  # noqa: E731
        lines = ["t,max_regret,alpha,oracle_residual,oracle_iterations,bound"]
        for row in self.log:
            alpha = "" if row["alpha"] is None else fmt(row["alpha"])
            res = "" if row["residual"] is None else fmt(row["residual"])
            its = "" if row["oracle_iterations"] is None else str(row["oracle_iterations"])
            lines.append(f"{row['t']},{fmt(row['max_regret'])},{alpha},{res},{its},{fmt(row['bound'])}")
        return "\n".join(lines) + "\n"


def _line_search(mu: np.ndarray, r: np.ndarray, rectified: bool) -> float:
    lo, hi = 1e-12, 1.0 - 1e-12
    d = r - mu
    if not rectified:
        dd = float(d @ d)
        if dd == 0:
            return 0.5
        return float(np.clip(-(mu @ d) / dd, lo, hi))

    def obj(a):
        return float(np.sum(np.maximum(mu + a * d, 0.0) ** 2))

    cands = [lo, hi]
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = np.where(d != 0, -mu / d, np.nan)
    knots = np.sort(np.concatenate([[lo, hi], roots[(roots > lo) & (roots < hi)]]))
    for a0, a1 in zip(knots[:-1], knots[1:]):
        am = 0.5 * (a0 + a1)
        act = mu + am * d > 0
        den = float(d[act] @ d[act])
        cands.append(a0)
        if den > 0:
            cands.append(float(np.clip(-(mu[act] @ d[act]) / den, a0, a1)))
    return min(cands, key=obj)


def _run_matcher(
    mode: str,
    game: SmoothGame,
    family: FieldFamily,
    sigma1: EmpiricalDistribution,
    eps: float,
    max_iter: int,
    alpha_rule: str,
    oracle: Callable | None,
    strict: bool,
    oracle_tol: float,
    validate_tol: float,
    callback: Callable | None,
) -> MatcherState:
    if alpha_rule not in ("harmonic", "line_search"):
        raise MatcherError(f"unknown alpha rule {alpha_rule!r}")
    if not len(family):
        raise MatcherError("family is empty")
    space = game.space
    if oracle is None:
        if not family.all_affine:
            raise MatcherError("non-affine family needs a user fixed-point oracle")

        def oracle(m, fam, sp):
            return fixed_point_affine(fam, m, sp, tol=oracle_tol)

    pts = np.atleast_2d(np.asarray(sigma1.points, dtype=float))
    for p in pts:
        if not space.contains(p):
            raise MatcherError(f"initial atom {p.tolist()} is infeasible")
    regrets = instantaneous_regret(game, pts, family, mode)
    state = MatcherState(mode, 1, pts.copy(), sigma1.weights.copy(), regrets @ sigma1.weights)
    rectified = mode == "local"

    def record(alpha, fp):
        bound = theorem_bound(game, family, state.iterations)
        score = state.score()
        state.log.append(
            dict(
                t=state.t,
                max_regret=score,
                alpha=alpha,
                residual=None if fp is None else fp.residual,
                oracle_iterations=None if fp is None else fp.iterations,
                bound=bound,
            )
        )
        if score > bound + 1e-9:
            state.bound_violations.append((state.t, score, bound))
            if strict:
                raise TheoremViolation(f"iteration {state.t}: max regret {score:.6g} exceeds bound {bound:.6g}")

    record(None, None)
    while state.score() > eps:
        if state.iterations >= max_iter:
            state.hit_max_iter = True
            return state
        weights = state.mu
        fp = oracle(weights, family, space)
        x = np.asarray(fp.point, dtype=float)
        if not space.contains(x):
            raise OracleFailure(f"oracle returned an infeasible point at t={state.t}", state)
        comb = combine(family, weights)
        check = float(np.linalg.norm(space.tangent(x, comb(x))))
        scale = 1.0 + float(np.sum(np.abs(weights) * family.G))
        if check > validate_tol * scale:
            raise OracleFailure(f"oracle residual {check:.3g} too large at t={state.t}", state)
        r = instantaneous_regret(game, x, family, mode)
        if alpha_rule == "harmonic":
            alpha = 1.0 / (state.t + 1)
            new_mu = (state.t * state.raw_mu + r) / (state.t + 1)
        else:
            alpha = _line_search(state.raw_mu, r, rectified)
            new_mu = (1.0 - alpha) * state.raw_mu + alpha * r
        state.points = np.vstack([state.points, x])
        state.weights = np.append((1.0 - alpha) * state.weights, alpha)
        state.raw_mu = new_mu
        state.alphas.append(alpha)
        state.t += 1
        record(alpha, fp)
        if callback is not None:
            callback(state)
    state.converged = True
    return state


def regret_match_stationary(
    game: SmoothGame,
    family: FieldFamily,
    sigma1: EmpiricalDistribution,
    eps: float,
    max_iter: int,
    alpha_rule: str = "harmonic",
    oracle: Callable | None = None,
    strict: bool = True,
    oracle_tol: float = 1e-10,
    validate_tol: float = 1e-6,
    callback: Callable | None = None,
) -> MatcherState:
    """Drive every signed stationary regret below ``eps`` in magnitude."""
    return _run_matcher("stationary", game, family, sigma1, eps, max_iter, alpha_rule, oracle, strict, oracle_tol, validate_tol, callback)


def regret_match_local(
    game: SmoothGame,
    family: FieldFamily,
    sigma1: EmpiricalDistribution,
    eps: float,
    max_iter: int,
    alpha_rule: str = "harmonic",
    oracle: Callable | None = None,
    strict: bool = True,
    allow_non_tangential: bool = False,
    tangential_samples: int = 2000,
    oracle_tol: float = 1e-10,
    validate_tol: float = 1e-6,
    callback: Callable | None = None,
) -> MatcherState:
    """Drive every local regret below ``eps`` using rectified weights."""
    bad = [f.name for f in family if not check_tangential(f, game.space, tangential_samples).tangential]
    if bad:
        if not allow_non_tangential:
            raise MatcherError(f"family is not tangential: {', '.join(bad)}")
        log.warning("running local regret matching with non-tangential fields: %s", ", ".join(bad))
    return _run_matcher("local", game, family, sigma1, eps, max_iter, alpha_rule, oracle, strict, oracle_tol, validate_tol, callback)
