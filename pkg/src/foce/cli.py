"""Experiment runner: ``foce run|describe --config FILE [--seed N] [--out DIR]``.

Config files hold one ``key = value`` pair per line with a JSON value and
dotted keys; ``#`` starts a comment line. Normal-form game files use the
same format with keys ``players``, ``actions``, ``payoffs.<i>`` (row-major)
and optionally ``action_names.<i>`` and ``name``.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import certify as cert_mod
from .deviations import (
    AffineField,
    FieldFamily,
    aggregated_pull_field,
    ce_field_family,
    check_tangential,
    extension_family_2x2,
    projection_family,
    pull_to_point_family,
    radial_field,
)
from .dynamics import EmpiricalDistribution, StepSchedule, run_pga, sample_uniform
from .games import (
    BUNDLED_NORMAL_FORM,
    NormalFormGame,
    SmoothGame,
    bilinear_game,
    matching_pennies,
    multilinear_extension,
)
from .geometry import Ball, Box, Polyhedron, Simplex
from .phi_regret import regret_match_local, regret_match_stationary, theorem_bound
from .regret import (
    TheoremViolation,
    _curvatures,
    curve_average,
    local_regrets,
    regret_report,
    schedule_bound,
    stationary_regrets,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_THEOREM = 0, 1, 2
MODES = ("dynamics", "regret", "match-stationary", "match-local", "certify", "nf-audit")

KNOWN_KEYS = {
    "mode", "seed", "game.builtin", "game.file", "game.A", "game.B", "x0",
    "schedule.kind", "schedule.C", "schedule.eta", "schedule.T", "schedule.mu_mode",
    "family", "family.targets", "family.center", "family.directions", "quadrature.M", "samples.n", "tolerance.regret",
    "match.eps", "match.max_iter", "match.alpha", "match.x0", "match.allow_non_tangential",
    "certify.kind", "certify.M1", "certify.M2", "certify.k", "certify.phase", "certify.A", "certify.gamma",
    "certify.resolution", "certify.n_random", "certify.tol", "certify.trajectory",
    "audit.mode", "audit.profile", "audit.distribution", "audit.a_star", "audit.tol",
    "audit.lp_q", "audit.lp_sense", "audit.lp_mode", "output.dir",
}
KEY_PATTERNS = (re.compile(r"set\.\d+"),)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


def parse_kv(text: str, source: str = "config") -> dict:
    """Parse ``key = <json>`` lines into a flat dict."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"{source}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            out[key] = json.loads(value.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(key, f"value is not valid JSON ({exc.msg})") from None
    return out


@dataclass
class Config:
    values: dict
    base_dir: Path

    @classmethod
    def load(cls, path, seed_override: int | None = None) -> "Config":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
        values = parse_kv(text)
        if seed_override is not None:
            values["seed"] = seed_override
        cfg = cls(values, path.parent)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key in self.values:
            if key not in KNOWN_KEYS and not any(p.fullmatch(key) for p in KEY_PATTERNS):
                raise ConfigError(key, "unknown key")
        if "seed" not in self.values:
            raise ConfigError("seed", "missing (runs are always seeded)")
        self.int("seed")
        mode = self.get("mode")
        if mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
        if "game.builtin" not in self.values and "game.file" not in self.values:
            raise ConfigError("game.builtin", "either game.builtin or game.file is required")
        if "game.file" in self.values and not self.path("game.file").is_file():
            raise ConfigError("game.file", f"file {self.values['game.file']} does not exist")
        if "schedule.T" in self.values and self.int("schedule.T") < 1:
            raise ConfigError("schedule.T", "must be at least 1")

    def get(self, key, default=None, required: bool = False):
        if key not in self.values:
            if required:
                raise ConfigError(key, "missing")
            return default
        return self.values[key]

    def int(self, key, default=None) -> int:
        v = self.get(key, default, required=default is None)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        return v

    def float(self, key, default=None) -> float:
        v = self.get(key, default, required=default is None)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(key, f"expected a number, got {v!r}")
        return float(v)

    def vector(self, key, default=None) -> np.ndarray | None:
        v = self.get(key, default)
        if v is None:
            return None
        try:
            arr = np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(key, "expected a list of numbers") from None
        if not np.all(np.isfinite(arr)):
            raise ConfigError(key, "entries must be finite")
        return arr

    def path(self, key) -> Path:
        p = Path(self.get(key, required=True))
        return p if p.is_absolute() else self.base_dir / p


# ---------------------------------------------------------------------------
# building blocks


def load_normal_form(path) -> NormalFormGame:
    path = Path(path)
    values = parse_kv(path.read_text(encoding="utf-8"), str(path))
    for key in values:
        if key not in ("players", "actions", "name") and not re.fullmatch(r"(payoffs|action_names)\.\d+", key):
            raise ConfigError(key, f"unknown key in game file {path}")
    players = values.get("players")
    actions = values.get("actions")
    if not isinstance(players, int) or players < 1:
        raise ConfigError("players", "expected a positive integer")
    if not isinstance(actions, list) or len(actions) != players or not all(isinstance(a, int) and a >= 1 for a in actions):
        raise ConfigError("actions", f"expected {players} positive action counts")
    size = int(np.prod(actions))
    payoffs = []
    for i in range(players):
        key = f"payoffs.{i}"
        if key not in values:
            raise ConfigError(key, "missing")
        flat = np.asarray(values[key], dtype=float).reshape(-1)
        if flat.size != size:
            raise ConfigError(key, f"expected {size} entries, got {flat.size}")
        payoffs.append(flat.reshape(actions))
    names = None
    if any(f"action_names.{i}" in values for i in range(players)):
        names = tuple(tuple(values.get(f"action_names.{i}", [str(a) for a in range(actions[i])])) for i in range(players))
    return NormalFormGame(tuple(payoffs), names, values.get("name", path.stem))


def _build_set(spec: dict, key: str):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(key, "expected an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "box":
            return Box(spec["lower"], spec["upper"])
        if kind == "simplex":
            return Simplex(int(spec["dimension"]))
        if kind == "ball":
            return Ball(spec["center"], float(spec["radius"]))
        if kind == "polyhedron":
            return Polyhedron(spec["A"], spec["b"])
    except KeyError as exc:
        raise ConfigError(key, f"missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    raise ConfigError(key, f"unknown set kind {kind!r}")


def build_game(cfg: Config) -> tuple[SmoothGame, NormalFormGame | None]:
    if "game.file" in cfg.values:
        nf = load_normal_form(cfg.path("game.file"))
        return multilinear_extension(nf), nf
    name = cfg.get("game.builtin")
    if name == "matching_pennies":
        return matching_pennies(), None
    if name in BUNDLED_NORMAL_FORM:
        nf = BUNDLED_NORMAL_FORM[name]()
        return multilinear_extension(nf), nf
    if name == "bilinear":
        A, B = cfg.vector("game.A"), cfg.vector("game.B")
        if A is None or A.ndim != 2:
            raise ConfigError("game.A", "expected a matrix")
        if B is None or B.shape != A.shape:
            raise ConfigError("game.B", "expected a matrix shaped like game.A")
        sets = [_build_set(cfg.get(f"set.{i}", required=True), f"set.{i}") for i in range(2)]
        try:
            return bilinear_game(A, B, sets[0], sets[1]), None
        except ValueError as exc:
            raise ConfigError("game.A", str(exc)) from None
    raise ConfigError("game.builtin", f"unknown game {name!r}")


def build_family(cfg: Config, game: SmoothGame, nf: NormalFormGame | None) -> FieldFamily:
    spec = cfg.get("family", ["pull_to_point"])
    if isinstance(spec, str):
        spec = [spec]
    fam = FieldFamily([])
    for name in spec:
        try:
            if isinstance(name, dict):
                # inline affine field {"name", "P", "q"}; G is bounded over the action sets
                if "P" not in name or "q" not in name:
                    raise ConfigError("family", "inline fields need 'P' and 'q'")
                part = FieldFamily([AffineField(name["P"], name["q"], name=str(name.get("name", "inline")), space=game.space)])
            elif name == "pull_to_point":
                part = pull_to_point_family(game)
            elif name == "radial":
                part = FieldFamily([radial_field(game, cfg.vector("family.center"))])
            elif name == "extension_2x2":
                if game.dim != 2:
                    raise ConfigError("family", "extension_2x2 needs a two-dimensional game")
                part = extension_family_2x2()
            elif name == "ce":
                part = ce_field_family(nf if nf is not None else game)
            elif name == "projection":
                part = projection_family(game, cfg.get("family.directions", required=True))
            elif name == "aggregated_pull":
                targets = cfg.get("family.targets", required=True)
                part = FieldFamily([aggregated_pull_field(game, targets)])
            else:
                raise ConfigError("family", f"unknown family {name!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("family", str(exc)) from None
        fam = fam + part
    return fam


def build_schedule(cfg: Config) -> StepSchedule:
    kind = cfg.get("schedule.kind", "inverse_sqrt")
    mu_mode = cfg.get("schedule.mu_mode", "unit")
    if mu_mode not in ("unit", "inverse_eta"):
        raise ConfigError("schedule.mu_mode", "must be 'unit' or 'inverse_eta'")
    try:
        if kind == "inverse_sqrt":
            return StepSchedule.inverse_sqrt(cfg.float("schedule.C"), mu_mode)
        if kind == "constant":
            return StepSchedule.constant(cfg.float("schedule.eta"), mu_mode)
    except ValueError as exc:
        raise ConfigError("schedule.C" if kind == "inverse_sqrt" else "schedule.eta", str(exc)) from None
    raise ConfigError("schedule.kind", f"unknown schedule {kind!r}")


def _start(cfg: Config, key: str, game: SmoothGame) -> np.ndarray:
    x0 = cfg.vector(key)
    if x0 is None:
        return game.space.center()
    x0 = x0.reshape(-1)
    if x0.size != game.dim or not game.space.contains(x0):
        raise ConfigError(key, f"start point must be a feasible profile of dimension {game.dim}")
    return x0


def _fmt(v) -> str:
    return v if isinstance(v, str) else format(float(v), ".17g")


def _write(out: Path, name: str, text: str) -> Path:
    p = out / name
    with open(p, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return p


def _distribution_csv(dist: EmpiricalDistribution) -> str:
    dim = dist.points.shape[1]
    lines = [",".join(["weight"] + [f"coord_{k}" for k in range(dim)])]
    for w, p in zip(dist.weights, dist.points):
        lines.append(",".join([_fmt(w)] + [_fmt(v) for v in p]))
    return "\n".join(lines) + "\n"


def _action_csv(sigma: cert_mod.ActionDistribution) -> str:
    n = sigma.probs.ndim
    lines = [",".join([f"action_{i}" for i in range(n)] + ["probability"])]
    for a in np.ndindex(*sigma.shape):
        lines.append(",".join([str(v) for v in a] + [_fmt(sigma.probs[a])]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# modes


def _run_dynamics(cfg, game, nf, out):
    T = cfg.int("schedule.T")
    traj = run_pga(game, _start(cfg, "x0", game), T, build_schedule(cfg))
    _write(out, "trajectory.csv", traj.to_csv())
    return EXIT_OK, traj


def _run_regret(cfg, game, nf, out):
    status, traj = _run_dynamics(cfg, game, nf, out)
    fam = build_family(cfg, game, nf)
    M = cfg.int("quadrature.M", 16)
    tol = cfg.float("tolerance.regret", 1e-6)
    seed = cfg.int("seed")
    text = ""
    violated = False
    for mode in ("stationary", "local"):
        rep = regret_report(traj, game, fam, mode, M)
        n = cfg.int("samples.n", 0)
        if n > 0:
            sampled = (stationary_regrets if mode == "stationary" else local_regrets)(sample_uniform(traj, n, seed), game, fam)
            rep.metadata["sampled_family_max"] = float(np.max(np.abs(sampled)) if mode == "stationary" else np.max(sampled))
            rep.metadata["samples"] = n
        violated |= bool(rep.violations(tol))
        text += rep.to_text() + "\n"
    _write(out, "regret_report.txt", text)
    return (EXIT_THEOREM if violated else EXIT_OK), None


def _run_match(cfg, game, nf, out, local: bool):
    fam = build_family(cfg, game, nf)
    eps = cfg.float("match.eps", 0.0)
    max_iter = cfg.int("match.max_iter")
    alpha = cfg.get("match.alpha", "harmonic")
    if alpha not in ("harmonic", "line_search"):
        raise ConfigError("match.alpha", "must be 'harmonic' or 'line_search'")
    sigma1 = EmpiricalDistribution.point_mass(_start(cfg, "match.x0", game))
    try:
        if local:
            state = regret_match_local(
                game, fam, sigma1, eps, max_iter, alpha, strict=False,
                allow_non_tangential=bool(cfg.get("match.allow_non_tangential", False)),
            )
        else:
            state = regret_match_stationary(game, fam, sigma1, eps, max_iter, alpha, strict=False)
    except ValueError as exc:
        raise ConfigError("family", str(exc)) from None
    _write(out, "matcher_log.csv", state.log_csv())
    dist = state.distribution
    _write(out, "distribution.csv", _distribution_csv(dist))
    lines = [
        f"mode={'local' if local else 'stationary'}",
        f"alpha_rule={alpha}",
        f"t={state.t}",
        f"iterations={state.iterations}",
        f"converged={str(state.converged).lower()}",
        f"hit_max_iter={str(state.hit_max_iter).lower()}",
        f"max_regret={_fmt(state.score())}",
        f"theorem_bound={_fmt(theorem_bound(game, fam, state.iterations))}",
        f"bound_violations={len(state.bound_violations)}",
        "mean=" + ",".join(_fmt(v) for v in dist.mean()),
    ]
    lines += [f"field_id={name} regret={_fmt(v)}" for name, v in zip(fam.names, state.raw_mu)]
    if nf is not None:
        sigma = cert_mod.induce_action_distribution(dist, nf)
        _write(out, "action_distribution.csv", _action_csv(sigma))
        ce = cert_mod.check_equilibrium(nf, sigma, "CE", tol=eps + 1e-9)
        cce = cert_mod.check_equilibrium(nf, sigma, "CCE", tol=eps + 1e-9)
        lines += [f"ce_max_violation={_fmt(ce.max_violation)}", f"cce_max_violation={_fmt(cce.max_violation)}"]
    _write(out, "match_report.txt", "\n".join(lines) + "\n")
    return (EXIT_THEOREM if state.bound_violations else EXIT_OK), state


def _run_certify(cfg, game, nf, out):
    kind = cfg.get("certify.kind", "pennies")
    if game.name != "matching_pennies":
        raise ConfigError("certify.kind", f"certificate {kind!r} is defined for matching_pennies")
    if kind == "pennies":
        M1 = cfg.float("certify.M1", 100.0)
        if M1 <= 0.4:
            raise ConfigError("certify.M1", "must exceed 0.4")
        certificate = cert_mod.pennies_certificate(M1, cfg.float("certify.M2", 10.0))
    elif kind == "rotational":
        certificate = cert_mod.rotational_certificate(
            cfg.int("certify.k", 1),
            cfg.float("certify.phase", 0.0),
            M=cfg.float("certify.M1", 100.0),
            A=cfg.float("certify.A", 10.0),
            gamma=cfg.float("certify.gamma", 0.0),
        )
    else:
        raise ConfigError("certify.kind", f"unknown certificate {kind!r}")
    rep = cert_mod.check_certificate(
        game,
        certificate,
        resolution=cfg.int("certify.resolution", 400),
        n_random=cfg.int("certify.n_random", 10_000),
        seed=cfg.int("seed"),
    )
    tol = cfg.float("certify.tol", 1e-6)
    text = rep.to_text() + f"tol={_fmt(tol)}\nfeasible={str(rep.feasible_at(tol)).lower()}\n"
    status = EXIT_OK
    if cfg.get("certify.trajectory", False):
        T = cfg.int("schedule.T")
        traj = run_pga(game, _start(cfg, "x0", game), T, build_schedule(cfg))
        avg_q = curve_average(traj, certificate.q, M=cfg.int("quadrature.M", 16))
        G_h = float(np.max(np.linalg.norm(certificate.h.gradient(cert_mod.profile_grid(game.space, 201)), axis=-1)))
        K = _curvatures(game.space)
        eps = schedule_bound(game.space.set_class(), game.G, game.L, G_h, K if K is not None else 0.0,
                             game.space.diameter(), traj.eta, traj.mu)
        text += f"trajectory_T={T}\naverage_q={_fmt(avg_q)}\nG_h={_fmt(G_h)}\n"
        if isinstance(eps, str):
            text += f"soundness_bound={eps}\n"
        else:
            sound = avg_q >= certificate.gamma - eps - 1e-9
            text += f"soundness_bound={_fmt(certificate.gamma - eps)}\nsound={str(sound).lower()}\n"
            if not sound:
                status = EXIT_THEOREM
    _write(out, "certificate_report.txt", text)
    return status, rep


def _run_audit(cfg, game, nf, out):
    if nf is None:
        raise ConfigError("game.builtin", "nf-audit needs a normal-form game")
    mode = cfg.get("audit.mode", "CE")
    if mode not in ("CCE", "CE", "AverageCCE"):
        raise ConfigError("audit.mode", "must be CCE, CE or AverageCCE")
    a_star = cfg.get("audit.a_star")
    if mode == "AverageCCE" and a_star is None:
        raise ConfigError("audit.a_star", "required for AverageCCE")
    if "audit.profile" in cfg.values:
        prof = cfg.get("audit.profile")
        try:
            idx = [nf.action_index(i, a) for i, a in enumerate(prof)]
            sigma = cert_mod.ActionDistribution.point_mass(nf.shape, idx)
        except (ValueError, IndexError, TypeError) as exc:
            raise ConfigError("audit.profile", str(exc)) from None
    elif "audit.distribution" in cfg.values:
        probs = cfg.vector("audit.distribution")
        if probs.size != int(np.prod(nf.shape)):
            raise ConfigError("audit.distribution", f"expected {int(np.prod(nf.shape))} probabilities")
        try:
            sigma = cert_mod.ActionDistribution(probs.reshape(nf.shape))
        except ValueError as exc:
            raise ConfigError("audit.distribution", str(exc)) from None
    else:
        raise ConfigError("audit.profile", "give audit.profile or audit.distribution")
    try:
        a_idx = None if a_star is None else [nf.action_index(i, a) for i, a in enumerate(a_star)]
    except ValueError as exc:
        raise ConfigError("audit.a_star", str(exc)) from None
    rep = cert_mod.check_equilibrium(nf, sigma, mode, cfg.float("audit.tol", 1e-9), a_idx)
    text = rep.to_text()
    lp_q = cfg.get("audit.lp_q")
    if lp_q is not None:
        if lp_q == "social_welfare":
            q = sum(nf.payoffs)
        elif lp_q == "social_cost":
            q = -sum(nf.payoffs)
        else:
            q = cfg.vector("audit.lp_q")
            if q.size != int(np.prod(nf.shape)):
                raise ConfigError("audit.lp_q", f"expected {int(np.prod(nf.shape))} values")
            q = q.reshape(nf.shape)
        sense = cfg.get("audit.lp_sense", "min")
        if sense not in ("min", "max"):
            raise ConfigError("audit.lp_sense", "must be 'min' or 'max'")
        lp_mode = cfg.get("audit.lp_mode", "CCE" if mode == "AverageCCE" else mode)
        if lp_mode not in ("CCE", "CE"):
            raise ConfigError("audit.lp_mode", "must be CCE or CE")
        res = cert_mod.worst_case_expectation(nf, q, lp_mode, sense)
        text += f"lp_mode={lp_mode}\nlp_sense={sense}\nlp_value={_fmt(res.value)}\nlp_cs_residual={_fmt(res.cs_residual)}\n"
        text += "lp_sigma=" + ",".join(_fmt(v) for v in res.sigma.probs.reshape(-1)) + "\n"
    _write(out, "audit_report.txt", text)
    return EXIT_OK, rep


def describe(cfg: Config) -> str:
    """Resolved constants and the applicable regret bound, without running anything."""
    game, nf = build_game(cfg)
    space = game.space
    set_class = space.set_class()
    lines = [
        f"mode={cfg.get('mode')}",
        f"seed={cfg.int('seed')}",
        f"game={game.name}",
        f"players={game.n_players}",
        "dims=" + ",".join(str(d) for d in space.dims),
        "sets=" + ",".join(type(s).__name__ for s in space.sets),
        "G=" + ",".join(_fmt(v) for v in game.G),
        "L=" + ",".join(_fmt(v) for v in game.L),
        f"diameter={_fmt(space.diameter())}",
        f"set_class={set_class}",
    ]
    K = _curvatures(space)
    if set_class == "acute":
        lines.append("theorem=acute polyhedra bound (K=0)")
    elif set_class == "curved":
        lines.append("theorem=curvature bound with K=" + ",".join(_fmt(v) for v in K))
    else:
        lines.append("theorem=no guarantee")
    if "schedule.T" in cfg.values and cfg.get("mode") in ("dynamics", "regret", "certify"):
        sched = build_schedule(cfg)
        T = cfg.int("schedule.T")
        eta = sched.etas(T)
        mu = sched.mus(eta)
        lines += [
            f"schedule={sched.kind}",
            f"C={_fmt(sched.C)}",
            f"T={T}",
            f"mu_mode={sched.mu_mode}",
            f"tau_bar={_fmt(np.sum(eta * mu))}",
            f"mu_first={_fmt(mu[0])}",
            f"mu_last={_fmt(mu[-1])}",
            f"sum_eta2_mu={_fmt(np.sum(eta**2 * mu))}",
        ]
        if cfg.get("mode") == "regret":
            fam = build_family(cfg, game, nf)
            for f in fam:
                if not f.is_gradient:
                    continue
                b = schedule_bound(set_class, game.G, game.L, f.G, K if K is not None else 0.0, space.diameter(), eta, mu)
                lines.append(f"bound field_id={f.name} G_h={_fmt(f.G)} bound={_fmt(b)}")
    if cfg.get("mode") in ("match-stationary", "match-local"):
        fam = build_family(cfg, game, nf)
        n = cfg.int("match.max_iter")
        lines += [
            f"family_size={len(fam)}",
            f"max_field_G={_fmt(fam.G.max())}",
            f"sum_G={_fmt(np.sum(game.G))}",
            f"matcher_bound_at_max_iter={_fmt(theorem_bound(game, fam, n))}",
        ]
        if cfg.get("mode") == "match-local":
            bad = [f.name for f in fam if not check_tangential(f, space, 2000, cfg.int("seed")).tangential]
            lines.append("non_tangential=" + (",".join(bad) if bad else "none"))
    return "\n".join(lines) + "\n"


def run(cfg: Config, out: Path) -> int:
    game, nf = build_game(cfg)
    out.mkdir(parents=True, exist_ok=True)
    mode = cfg.get("mode")
    if mode == "dynamics":
        status, _ = _run_dynamics(cfg, game, nf, out)
    elif mode == "regret":
        status, _ = _run_regret(cfg, game, nf, out)
    elif mode == "match-stationary":
        status, _ = _run_match(cfg, game, nf, out, local=False)
    elif mode == "match-local":
        status, _ = _run_match(cfg, game, nf, out, local=True)
    elif mode == "certify":
        status, _ = _run_certify(cfg, game, nf, out)
    else:
        status, _ = _run_audit(cfg, game, nf, out)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="foce", description="First-order correlated equilibrium experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "describe"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config, args.seed)
        if args.command == "describe":
            sys.stdout.write(describe(cfg))
            return EXIT_OK
        out = Path(args.out) if args.out else Path(cfg.get("output.dir", "."))
        if not out.is_absolute() and args.out is None:
            out = cfg.base_dir / out
        status = run(cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TheoremViolation as exc:
        print(f"theorem violation: {exc}", file=sys.stderr)
        return EXIT_THEOREM
    if status == EXIT_THEOREM:
        print("theorem violation: see report", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
