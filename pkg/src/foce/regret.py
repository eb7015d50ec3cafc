"""First-order regret of distributions and curves, and the closed-form bounds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .deviations import FieldFamily, VectorField
from .dynamics import EmpiricalDistribution, StepSchedule, Trajectory
from .games import SmoothGame
from .geometry import ACTIVE_TOL, Ball, Box, ProductSet

NO_GUARANTEE = "no guarantee"
QUADRATURE_TOL = 1e-6


class RegretError(ValueError):
    pass


class TheoremViolation(AssertionError):
    """A measured quantity exceeded a proven bound."""


# ---------------------------------------------------------------------------
# pointwise integrands


def _as_family(fields) -> FieldFamily:
    if isinstance(fields, FieldFamily):
        return fields
    if isinstance(fields, VectorField):
        return FieldFamily((fields,))
    return FieldFamily(tuple(fields))


def stationary_pairing(game: SmoothGame, family: FieldFamily, x: np.ndarray) -> np.ndarray:
    """sum_i <f_i(x), tangent part of grad_i u_i(x)> for every field, shape (|F|, ...)."""
    tg = game.tangent_gradients(x)
    return np.einsum("f...d,...d->f...", family.evaluate(x), tg)


def local_pairing(game: SmoothGame, family: FieldFamily, x: np.ndarray) -> np.ndarray:
    """sum_i <tangent part of f_i(x), grad_i u_i(x)> for every field."""
    g = game.gradients(x)
    F = family.evaluate(x)
    return np.einsum("f...d,...d->f...", game.space.tangent(x, F), g)


def unprojected_pairing(game: SmoothGame, family: FieldFamily, x: np.ndarray) -> np.ndarray:
    """sum_i <f_i(x), grad_i u_i(x)> for every field."""
    return np.einsum("f...d,...d->f...", family.evaluate(x), game.gradients(x))


# ---------------------------------------------------------------------------
# distributions


def stationary_regret(dist: EmpiricalDistribution, game: SmoothGame, field: VectorField) -> float:
    return float(stationary_regrets(dist, game, _as_family(field))[0])


def local_regret(dist: EmpiricalDistribution, game: SmoothGame, field: VectorField) -> float:
    return float(local_regrets(dist, game, _as_family(field))[0])


def stationary_regrets(dist: EmpiricalDistribution, game: SmoothGame, family: FieldFamily) -> np.ndarray:
    if not len(family):
        return np.zeros(0)
    return stationary_pairing(game, family, dist.points) @ dist.weights


def local_regrets(dist: EmpiricalDistribution, game: SmoothGame, family: FieldFamily) -> np.ndarray:
    if not len(family):
        return np.zeros(0)
    return local_pairing(game, family, dist.points) @ dist.weights


# ---------------------------------------------------------------------------
# curves


def _rule(traj: Trajectory, M: int, rule: str | None):
    if M < 1:
        raise RegretError("quadrature order M must be at least 1")
    if rule is None:
        rule = "midpoint" if any(isinstance(s, Ball) for s in traj.space.sets) else "gauss"
    if rule == "gauss":
        nodes, weights = np.polynomial.legendre.leggauss(M)
        return 0.5 * (nodes + 1.0), 0.5 * weights
    if rule == "midpoint":
        return (np.arange(M) + 0.5) / M, np.full(M, 1.0 / M)
    raise RegretError(f"unknown quadrature rule {rule!r}")


def _box_pinned(space: ProductSet, x: np.ndarray) -> np.ndarray:
    """Mask of coordinates sitting on a bound of a box factor."""
    mask = np.zeros(x.shape, dtype=bool)
    for s, sl in zip(space.sets, space.slices):
        if isinstance(s, Box):
            xs = x[..., sl]
            mask[..., sl] = (xs - s.lower <= ACTIVE_TOL) | (s.upper - xs <= ACTIVE_TOL)
    return mask


def refine_pieces(traj: Trajectory, projected: Callable[[np.ndarray], np.ndarray], rounds: int = 3, chunk: int = 20_000):
    """Split curve pieces where a vector that is cone-projected changes sign on a pinned box coordinate.

    ``projected(x)`` maps (K, D) points to (K, S, D) vectors whose tangent-cone
    projections enter the integrand.  Inside a piece the pinned coordinates are
    fixed, so the integrand is smooth between such sign changes.
    """
    seg, lo, hi = traj.pieces
    if not any(isinstance(s, Box) for s in traj.space.sets):
        return seg, lo, hi
    for _ in range(rounds):
        new_seg, new_lo, new_hi = [seg], [lo], [hi]
        split_any = False
        keep = np.ones(seg.size, dtype=bool)
        for start in range(0, seg.size, chunk):
            sl = slice(start, start + chunk)
            t, a, b = seg[sl], lo[sl], hi[sl]
            pad = 1e-9 * (b - a)
            mid = traj.point(t, 0.5 * (a + b))
            pinned = _box_pinned(traj.space, mid)[:, None, :]
            va = projected(traj.point(t, a + pad))
            vb = projected(traj.point(t, b - pad))
            flip = pinned & (np.sign(va) * np.sign(vb) < 0)
            rows = np.flatnonzero(np.any(flip, axis=(1, 2)))
            if rows.size == 0:
                continue
            # first flipping component per piece, located by bisection
            idx = np.array([np.argwhere(flip[r])[0] for r in rows])
            tt, left, right = t[rows], a[rows] + pad[rows], b[rows] - pad[rows]
            sign_left = np.sign(va[rows, idx[:, 0], idx[:, 1]])
            for _ in range(60):
                m = 0.5 * (left + right)
                vm = projected(traj.point(tt, m))[np.arange(rows.size), idx[:, 0], idx[:, 1]]
                same = np.sign(vm) == sign_left
                left = np.where(same, m, left)
                right = np.where(same, right, m)
            root = 0.5 * (left + right)
            ok = (root > a[rows]) & (root < b[rows])
            rows, root = rows[ok], root[ok]
            if rows.size == 0:
                continue
            split_any = True
            keep[start + rows] = False
            new_seg += [t[rows], t[rows]]
            new_lo += [a[rows], root]
            new_hi += [root, b[rows]]
        if not split_any:
            break
        new_seg[0], new_lo[0], new_hi[0] = seg[keep], lo[keep], hi[keep]
        seg, lo, hi = (np.concatenate(v) for v in (new_seg, new_lo, new_hi))
        order = np.lexsort((lo, seg))
        seg, lo, hi = seg[order], lo[order], hi[order]
    return seg, lo, hi


def curve_integral(
    traj: Trajectory,
    integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    M: int = 16,
    rule: str | None = None,
    chunk: int = 20_000,
    pieces=None,
) -> np.ndarray:
    """Integrate ``integrand(x, t, s)`` over the curve, piece by piece.

    ``x`` has shape (K, M, D) and ``t``, ``s`` shape (K, M); the integrand
    returns an array whose last two axes are (K, M).  Gauss-Legendre nodes
    are used on polyhedral factors and the midpoint rule when a ball is present.
    """
    nodes, weights = _rule(traj, M, rule)
    seg, lo, hi = traj.pieces if pieces is None else pieces
    total = None
    for start in range(0, seg.size, chunk):
        sl = slice(start, start + chunk)
        length = hi[sl] - lo[sl]
        s = lo[sl, None] + length[:, None] * nodes
        t = np.broadcast_to(seg[sl, None], s.shape)
        vals = np.asarray(integrand(traj.point(t, s), t, s))
        part = np.sum(vals * (weights * length[:, None]), axis=(-2, -1))
        total = part if total is None else total + part
    if total is None:
        return np.zeros(0)
    return total


def curve_average(traj: Trajectory, fn: Callable[[np.ndarray], np.ndarray], M: int = 16, rule: str | None = None) -> float:
    """(1 / tau_bar) * integral of ``fn(x(tau))``."""
    return float(curve_integral(traj, lambda x, t, s: fn(x), M, rule) / traj.tau_bar)


def curve_stationary_regrets(traj: Trajectory, game: SmoothGame, family, M: int = 16, rule: str | None = None) -> np.ndarray:
    family = _as_family(family)
    if not len(family):
        return np.zeros(0)
    pieces = refine_pieces(traj, lambda x: game.gradients(x)[:, None, :])
    return curve_integral(traj, lambda x, t, s: stationary_pairing(game, family, x), M, rule, pieces=pieces) / traj.tau_bar


def curve_local_regrets(traj: Trajectory, game: SmoothGame, family, M: int = 16, rule: str | None = None) -> np.ndarray:
    family = _as_family(family)
    if not len(family):
        return np.zeros(0)
    pieces = refine_pieces(traj, lambda x: np.moveaxis(family.evaluate(x), 0, -2))
    return curve_integral(traj, lambda x, t, s: local_pairing(game, family, x), M, rule, pieces=pieces) / traj.tau_bar


def curve_stationary_regret(traj: Trajectory, game: SmoothGame, field: VectorField, M: int = 16) -> float:
    if not field.is_gradient:
        raise RegretError(f"field {field.name} is not a gradient field")
    return float(curve_stationary_regrets(traj, game, field, M)[0])


def curve_local_regret(traj: Trajectory, game: SmoothGame, field: VectorField, M: int = 16) -> float:
    return float(curve_local_regrets(traj, game, field, M)[0])


def weighted_path_integral(traj: Trajectory, field: VectorField, M: int = 16) -> float:
    """sum_t mu_t * integral over segment t of <grad h, dx/dtau>, on acute sets."""
    space = traj.space
    if space.set_class() != "acute":
        raise RegretError("exact curve velocity requires acute factors")

    def integrand(x, t, s):
        vel = space.tangent(x, traj.direction[t])
        return traj.mu[t] * np.einsum("kmd,kmd->km", field(x), vel)

    return float(curve_integral(traj, integrand, M, "gauss"))


# ---------------------------------------------------------------------------
# bounds


def _curvatures(space: ProductSet, K=None) -> np.ndarray | None:
    if K is not None:
        return np.broadcast_to(np.asarray(K, dtype=float), (len(space),)).copy()
    ks = space.curvatures()
    if any(k is None for k in ks):
        return None
    return np.asarray(ks, dtype=float)


def schedule_bound(set_class: str, G, L, G_h: float, K, diameter: float, eta, mu) -> float | str:
    """Right-hand side of the curve regret bound for an explicit step schedule.

    2 d G_h (mu_{T-1} + mu_0) / tau_bar
        + (sum eta_t^2 mu_t) / (2 tau_bar) * G_h * sum_i (K_i G_i^2 + L_i sum_j G_j)
    with K = 0 for acute sets.
    """
    if set_class not in ("acute", "curved"):
        return NO_GUARANTEE
    G = np.asarray(G, dtype=float)
    L = np.asarray(L, dtype=float)
    K = np.zeros_like(G) if set_class == "acute" else np.broadcast_to(np.asarray(K, dtype=float), G.shape)
    eta = np.asarray(eta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    tau_bar = float(np.sum(mu * eta))
    first = 2.0 * diameter * G_h * (mu[-1] + mu[0]) / tau_bar
    second = float(np.sum(eta**2 * mu)) / (2.0 * tau_bar) * G_h * float(np.sum(K * G**2 + L * G.sum()))
    return float(first + second)


def bound_formula(set_class: str, G, L, G_h: float, K, diameter: float, T: int, C: float, mu_mode: str) -> float | str:
    """Bound for eta_t = C / sqrt(t + 1) with the given ``mu_mode``."""
    sched = StepSchedule.inverse_sqrt(C, mu_mode)
    eta = sched.etas(int(T))
    return schedule_bound(set_class, G, L, G_h, K, diameter, eta, sched.mus(eta))


def poly_factor(set_class: str, G, L, G_h: float, K=0.0) -> float | str:
    """1 + sum_i G_h (K_i G_i^2 + L_i sum_j G_j), with K = 0 for acute sets."""
    if set_class not in ("acute", "curved"):
        return NO_GUARANTEE
    G = np.asarray(G, dtype=float)
    L = np.asarray(L, dtype=float)
    K = np.zeros_like(G) if set_class == "acute" else np.broadcast_to(np.asarray(K, dtype=float), G.shape)
    return float(1.0 + G_h * np.sum(K * G**2 + L * G.sum()))


def adversarial_bound(G, L, G_h: float, L_h: float, K, diameter: float, eta, learners: Sequence[int], discrete: bool = False) -> float:
    """Bound for the partially adversarial regime (unit-length curve segments).

    The curve version restricts the drift sums to the learners ``N'``; the
    discrete-time version for tangential h adds
    (sum eta) / (2T) * (sum_i L_h G_i + G_h L_i) * (sum_{i in N'} G_i).
    Values are raw; no normalisation is applied.
    """
    G = np.asarray(G, dtype=float)
    L = np.asarray(L, dtype=float)
    K = np.broadcast_to(np.asarray(K, dtype=float), G.shape)
    eta = np.asarray(eta, dtype=float)
    T = eta.size
    idx = np.asarray(sorted(learners), dtype=int)
    GN = G[idx].sum()
    value = 2.0 * diameter * G_h * (1.0 / eta[-1] + 1.0 / eta[0]) / T
    value += eta.sum() / (2.0 * T) * G_h * float(np.sum(K[idx] * G[idx] ** 2 + L[idx] * GN))
    if discrete:
        value += eta.sum() / (2.0 * T) * float(np.sum(L_h * G + G_h * L)) * GN
    return float(value)


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    return v if isinstance(v, str) else format(float(v), ".17g")


@dataclass
class RegretEntry:
    field_id: str
    raw: float
    epsilon: float | str
    bound: float | str
    poly: float | str
    coarse: bool
    tangential: bool | None = None

    def score(self, mode: str) -> float:
        """Magnitude compared against bounds: |raw| (stationary) or raw (local)."""
        return abs(self.raw) if mode == "stationary" else self.raw


@dataclass
class RegretReport:
    mode: str
    entries: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def family_max(self) -> float:
        return max((e.score(self.mode) for e in self.entries), default=0.0)

    def by_name(self) -> dict:
        return {e.field_id: e for e in self.entries}

    def violations(self, tol: float = QUADRATURE_TOL) -> list:
        """Entries whose measured value exceeds a numeric theorem bound."""
        out = []
        for e in self.entries:
            if isinstance(e.bound, str):
                continue
            if e.score(self.mode) > e.bound + tol:
                out.append(e)
        return out

    def assert_compliance(self, tol: float = QUADRATURE_TOL) -> None:
        bad = self.violations(tol)
        if bad:
            desc = ", ".join(f"{e.field_id}: {e.score(self.mode):.6g} > {e.bound:.6g}" for e in bad)
            raise TheoremViolation(f"regret exceeds theorem bound ({desc})")

    def to_text(self) -> str:
        lines = [f"mode={self.mode}"]
        for k, v in self.metadata.items():
            lines.append(f"{k}={v if isinstance(v, (str, int)) else _fmt(v)}")
        lines.append(f"n_fields={len(self.entries)}")
        lines.append(f"family_max={_fmt(self.family_max)}")
        for e in self.entries:
            lines.append(
                f"field_id={e.field_id} mode={self.mode} raw={_fmt(e.raw)} epsilon={_fmt(e.epsilon)} "
                f"bound={_fmt(e.bound)} poly={_fmt(e.poly)} coarse={str(e.coarse).lower()}"
            )
        return "\n".join(lines) + "\n"


def regret_report(
    source: Trajectory | EmpiricalDistribution,
    game: SmoothGame,
    family: FieldFamily,
    mode: str = "stationary",
    M: int = 16,
    tangential: Sequence[bool] | None = None,
) -> RegretReport:
    """Per-field regret, poly-normalised epsilon and, for coarse fields on curves, the bound.

    In local mode non-coarse fields are accepted; pass ``tangential`` flags to
    record which members were verified tangential.
    """
    if mode not in ("stationary", "local"):
        raise RegretError(f"unknown mode {mode!r}")
    family = _as_family(family)
    space = game.space
    set_class = space.set_class()
    K = _curvatures(space)
    meta: dict = {"set_class": set_class}
    is_curve = isinstance(source, Trajectory)
    if is_curve:
        raw = (curve_stationary_regrets if mode == "stationary" else curve_local_regrets)(source, game, family, M)
        sched = source.schedule
        meta.update(
            T=source.T,
            C=_fmt(sched.C) if sched is not None and sched.kind != "custom" else "n/a",
            schedule=sched.kind if sched is not None else "n/a",
            mu_mode=sched.mu_mode if sched is not None else "n/a",
            tau_bar=source.tau_bar,
            quadrature=M,
        )
    else:
        raw = (stationary_regrets if mode == "stationary" else local_regrets)(source, game, family)
        meta.update(samples=len(source))
    meta["diameter"] = space.diameter()
    entries = []
    for k, f in enumerate(family):
        poly = poly_factor(set_class, game.G, game.L, f.G, K if K is not None else 0.0)
        eps = NO_GUARANTEE if isinstance(poly, str) else abs(raw[k]) / poly
        bound: float | str = "n/a"
        if is_curve and f.is_gradient:
            bound = schedule_bound(set_class, game.G, game.L, f.G, K if K is not None else 0.0, space.diameter(), source.eta, source.mu)
        tan = None if tangential is None else bool(tangential[k])
        entries.append(RegretEntry(f.name, float(raw[k]), eps, bound, poly, f.is_gradient, tan))
    return RegretReport(mode, entries, meta)
