"""Projected gradient ascent and the piecewise curve interpolating its iterates.

Segment ``t`` of the curve starts at curve time ``tau_start[t]``, spans
``mu[t] * eta[t]`` and follows ``proj(x^t + s * g^t / mu[t])`` with the
gradient ``g^t`` cached at the discrete iterate.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .games import SmoothGame
from .geometry import Ball, ProductSet

log = logging.getLogger(__name__)

BREAKPOINT_TOL = 1e-9
FD_STEP = 1e-6


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``eta_t`` and curve weights ``mu_t``.

    ``kind`` is ``inverse_sqrt`` (eta_t = C / sqrt(t + 1)), ``constant`` (eta_t = C)
    or ``custom`` (explicit ``values``).  ``mu_mode`` is ``unit`` or ``inverse_eta``.
    """

    kind: str = "inverse_sqrt"
    C: float = 1.0
    mu_mode: str = "unit"
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("inverse_sqrt", "constant", "custom"):
            raise DynamicsError(f"unknown schedule kind {self.kind!r}")
        if self.mu_mode not in ("unit", "inverse_eta"):
            raise DynamicsError(f"unknown mu_mode {self.mu_mode!r}")
        if self.kind == "custom":
            if self.values is None:
                raise DynamicsError("custom schedule needs values")
            v = np.asarray(self.values, dtype=float)
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise DynamicsError("custom step sizes must be nonnegative and non-increasing")
            object.__setattr__(self, "values", tuple(float(a) for a in v))
        elif not self.C > 0:
            raise DynamicsError("step constant C must be positive")

    @classmethod
    def inverse_sqrt(cls, C: float, mu_mode: str = "unit") -> "StepSchedule":
        return cls("inverse_sqrt", float(C), mu_mode)

    @classmethod
    def constant(cls, eta: float, mu_mode: str = "unit") -> "StepSchedule":
        return cls("constant", float(eta), mu_mode)

    @classmethod
    def custom(cls, values: Sequence[float], mu_mode: str = "unit") -> "StepSchedule":
        return cls("custom", 1.0, mu_mode, tuple(values))

    def etas(self, T: int) -> np.ndarray:
        if self.kind == "inverse_sqrt":
            return self.C / np.sqrt(np.arange(1, T + 1, dtype=float))
        if self.kind == "constant":
            return np.full(T, self.C)
        if len(self.values) < T:
            raise DynamicsError(f"custom schedule has {len(self.values)} steps, need {T}")
        return np.asarray(self.values[:T], dtype=float)

    def mus(self, etas: np.ndarray) -> np.ndarray:
        if self.mu_mode == "unit":
            return np.ones_like(etas)
        if np.any(etas <= 0):
            raise DynamicsError("mu_mode inverse_eta needs positive step sizes")
        return 1.0 / etas


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Weighted atoms over strategy profiles."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.size or w.size == 0:
            raise DynamicsError("distribution needs one weight per atom and at least one atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DynamicsError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "EmpiricalDistribution":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @classmethod
    def point_mass(cls, x) -> "EmpiricalDistribution":
        return cls(np.asarray(x, dtype=float)[None, :], np.ones(1))

    def __len__(self):
        return self.weights.size

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def expect(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class Trajectory:
    space: ProductSet
    iterates: np.ndarray
    grads: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    moving: np.ndarray = field(default=None)
    schedule: StepSchedule | None = None

    def __post_init__(self):
        T = self.grads.shape[0]
        if self.iterates.shape != (T + 1, self.space.dim):
            raise DynamicsError("iterates must have shape (T + 1, D)")
        if self.moving is None:
            object.__setattr__(self, "moving", np.ones(self.space.dim, dtype=bool))
        for arr in (self.iterates, self.grads, self.eta, self.mu, self.moving):
            arr.setflags(write=False)

    @property
    def T(self) -> int:
        return self.grads.shape[0]

    @cached_property
    def span(self) -> np.ndarray:
        return self.mu * self.eta

    @cached_property
    def tau_start(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.span)[:-1]])

    @cached_property
    def tau_bar(self) -> float:
        return float(np.sum(self.span))

    @cached_property
    def direction(self) -> np.ndarray:
        """Per-segment curve velocity before projection, g^t / mu_t on moving coordinates."""
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(self.moving, self.grads / self.mu[:, None], 0.0)
        return np.nan_to_num(d)

    def locate(self, tau) -> tuple[np.ndarray, np.ndarray]:
        """Segment index and offset within the segment for curve times ``tau``."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < -1e-12) or np.any(tau > self.tau_bar + 1e-12):
            raise DynamicsError(f"curve time outside [0, {self.tau_bar}]")
        t = np.clip(np.searchsorted(self.tau_start, tau, side="right") - 1, 0, self.T - 1)
        s = np.clip(tau - self.tau_start[t], 0.0, self.span[t])
        return t, s

    def point(self, t, s) -> np.ndarray:
        """Curve point at offset ``s`` into segment ``t`` (arrays broadcast)."""
        t = np.asarray(t)
        s = np.asarray(s, dtype=float)
        start = self.iterates[t]
        y = start + s[..., None] * self.direction[t]
        x = np.where(self.moving, self.space.project(y), start)
        at_start = (s == 0)[..., None]
        at_end = (s >= self.span[t])[..., None]
        x = np.where(at_end, self.iterates[t + 1], x)
        return np.where(at_start, start, x)

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """(T, W) NaN-padded in-segment offsets where the active face changes."""
        return self.space.breakpoints_batch(self.iterates[:-1], self.direction, self.span)

    @cached_property
    def pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Smooth pieces ``(segment, s_begin, s_end)`` covering the whole curve."""
        bp = self.breakpoints
        span = self.span[:, None]
        edges = np.hstack([np.zeros_like(span), np.where(np.isnan(bp), span, bp), span])
        edges = np.sort(edges, axis=1)
        lo, hi = edges[:, :-1], edges[:, 1:]
        keep = hi > lo
        seg = np.broadcast_to(np.arange(self.T)[:, None], lo.shape)[keep]
        return seg, lo[keep], hi[keep]

    def to_csv(self, dest=None) -> str:
        """Write ``step,tau_start,eta,mu,coord_*`` rows (one per iterate)."""
        buf = io.StringIO()
        buf.write(",".join(["step", "tau_start", "eta", "mu"] + [f"coord_{k}" for k in range(self.space.dim)]) + "\n")
        fmt = lambda v: format(float(v), ".17g")  # noqa: E731
        taus = np.append(self.tau_start, self.tau_bar)
        for t in range(self.T + 1):
            head = [str(t), fmt(taus[t])]
            head += [fmt(self.eta[t]), fmt(self.mu[t])] if t < self.T else ["", ""]
            buf.write(",".join(head + [fmt(v) for v in self.iterates[t]]) + "\n")
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _check_start(game: SmoothGame, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != game.dim:
        raise DynamicsError(f"x0 has dimension {x0.size}, expected {game.dim}")
    if not game.space.contains(x0):
        raise DynamicsError(f"x0={x0.tolist()} is infeasible")
    return x0


def run_pga(game: SmoothGame, x0, T: int, sched: StepSchedule) -> Trajectory:
    """Projected gradient ascent x^{t+1} = proj(x^t + eta_t grad u(x^t))."""
    if T < 1:
        raise DynamicsError("T must be at least 1")
    x = _check_start(game, x0)
    eta = sched.etas(T)
    mu = sched.mus(eta)
    X = np.empty((T + 1, game.dim))
    G = np.empty((T, game.dim))
    X[0] = x
    project, gradients = game.space.project, game.gradients
    for t in range(T):
        g = gradients(x)
        G[t] = g
        x = project(x + eta[t] * g)
        X[t + 1] = x
    return Trajectory(game.space, X, G, eta, mu, schedule=sched)


def run_partial_adversarial(
    game: SmoothGame,
    learners: Sequence[int],
    adversary: Callable[[int, np.ndarray], Sequence],
    x0,
    T: int,
    sched: StepSchedule,
) -> Trajectory:
    """Learners run projected gradient ascent; the others follow ``adversary``.

    ``adversary(t, history)`` receives the iterates ``x^0..x^t`` and returns the
    next blocks of the non-learning players in increasing player order.  Each
    segment spans one unit of curve time and adversarial coordinates are held
    constant inside it, jumping at integer times.
    """
    if T < 1:
        raise DynamicsError("T must be at least 1")
    learners = sorted(set(int(i) for i in learners))
    if any(i < 0 or i >= game.n_players for i in learners):
        raise DynamicsError("learner index out of range")
    others = [i for i in range(game.n_players) if i not in learners]
    space = game.space
    x = _check_start(game, x0)
    eta = sched.etas(T)
    if np.any(eta <= 0):
        raise DynamicsError("partial-adversarial curve needs positive step sizes")
    mu = 1.0 / eta
    moving = np.zeros(game.dim, dtype=bool)
    for i in learners:
        moving[space.slices[i]] = True
    X = np.empty((T + 1, game.dim))
    G = np.empty((T, game.dim))
    X[0] = x
    for t in range(T):
        g = game.gradients(x)
        G[t] = g
        nxt = x.copy()
        for i in learners:
            sl = space.slices[i]
            nxt[sl] = space.sets[i].project(x[sl] + eta[t] * g[sl])
        if others:
            blocks = adversary(t, X[: t + 1])
            if len(blocks) != len(others):
                raise DynamicsError(f"adversary returned {len(blocks)} blocks, expected {len(others)}")
            for i, blk in zip(others, blocks):
                sl, s = space.slices[i], space.sets[i]
                blk = np.asarray(blk, dtype=float).reshape(s.dim)
                if not s.contains(blk):
                    log.warning("adversary strategy for player %d at step %d infeasible; projecting", i, t)
                    blk = s.project(blk)
                nxt[sl] = blk
        x = nxt
        X[t + 1] = x
    return Trajectory(space, X, G, eta, mu, moving, schedule=sched)


def eval_curve(traj: Trajectory, tau) -> np.ndarray:
    t, s = traj.locate(tau)
    return traj.point(t, s)


def _smooth_sets_exact(space: ProductSet) -> list[bool]:
    # tangent-cone velocity is exact on acute polyhedra
    return [not isinstance(s, Ball) and s.is_acute() for s in space.sets]


def velocity(traj: Trajectory, tau: float) -> np.ndarray:
    """Right-hand curve derivative at a point where the curve is differentiable."""
    tau = float(tau)
    t, s = traj.locate(tau)
    t, s = int(t), float(s)
    if s <= BREAKPOINT_TOL or traj.span[t] - s <= BREAKPOINT_TOL:
        raise DynamicsError(f"breakpoint: tau={tau} is at a segment boundary")
    bp = traj.breakpoints[t]
    bp = bp[~np.isnan(bp)]
    if bp.size and np.min(np.abs(bp - s)) <= BREAKPOINT_TOL:
        raise DynamicsError(f"breakpoint: tau={tau} is at an active-set change")
    x = traj.point(t, s)
    d = traj.direction[t]
    space = traj.space
    out = np.zeros(space.dim)
    exact = _smooth_sets_exact(space)
    for i, (sset, sl) in enumerate(zip(space.sets, space.slices)):
        if not np.any(traj.moving[sl]):
            continue
        if exact[i]:
            out[sl] = sset.tangent(x[sl], d[sl])
        else:
            h = min(FD_STEP, 0.5 * s, 0.5 * (traj.span[t] - s))
            start = traj.iterates[t][sl]
            plus = sset.project(start + (s + h) * d[sl])
            minus = sset.project(start + (s - h) * d[sl])
            out[sl] = (plus - minus) / (2 * h)
    return out


def sample_uniform(traj: Trajectory, n: int, seed: int, times=None) -> EmpiricalDistribution:
    """``n`` equally weighted curve points at i.i.d. uniform curve times.

    ``times`` overrides the random draw (used to pin specific curve times).
    """
    if n < 1:
        raise DynamicsError("n must be positive")
    if times is None:
        rng = np.random.default_rng(seed)
        times = rng.uniform(0.0, traj.tau_bar, size=n)
    times = np.asarray(times, dtype=float).reshape(n)
    return EmpiricalDistribution.uniform(eval_curve(traj, times))


def telescoping_sum(traj: Trajectory, h: Callable[[np.ndarray], np.ndarray]) -> float:
    """sum_t mu_t (h(x^{t+1}) - h(x^t)) for a potential ``h`` evaluated on batches."""
    vals = np.asarray(h(traj.iterates), dtype=float)
    return float(np.sum(traj.mu * np.diff(vals)))
