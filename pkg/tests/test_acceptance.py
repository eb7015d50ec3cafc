"""Acceptance criteria, one test per criterion; each records a PASS/FAIL line."""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from foce.certify import (
    check_certificate,
    check_equilibrium,
    grid_oracle,
    induce_action_distribution,
    pennies_certificate,
    worst_case_expectation,
)
from foce.deviations import (
    FieldFamily,
    aggregated_pull_field,
    ce_field_family,
    extension_family_2x2,
    pull_to_point_family,
    radial_field,
)
from foce.dynamics import EmpiricalDistribution, StepSchedule, Trajectory, run_pga, velocity
from foce.games import (
    BUNDLED_NORMAL_FORM,
    finite_difference_audit,
    matching_pennies,
    multilinear_extension,
    prisoners_dilemma,
    random_normal_form,
)
from foce.geometry import Ball, Box, ProductSet, Simplex, random_acute_polyhedron
from foce.phi_regret import regret_match_stationary
from foce.regret import curve_average, local_regrets, regret_report

X0 = (0.5, 0.3)


def record(log, number, ok, detail):
    log.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def pennies():
    return matching_pennies()


@pytest.fixture(scope="module")
def coarse_family(pennies):
    return pull_to_point_family(pennies) + FieldFamily([radial_field(pennies)])


@pytest.fixture(scope="module")
def reports(pennies, coarse_family):
    out = {}
    for T in (100, 10_000):
        start = time.perf_counter()
        traj = run_pga(pennies, X0, T, StepSchedule.inverse_sqrt(0.5, "inverse_eta"))
        stat = regret_report(traj, pennies, coarse_family, "stationary")
        loc = regret_report(traj, pennies, coarse_family, "local")
        out[T] = (stat, loc, time.perf_counter() - start)
    return out


def test_criterion_01_acute_bound(reports, criterion_log):
    stat, _, elapsed = reports[10_000]
    worst = max(abs(e.raw) - e.bound for e in stat.entries)
    ok = all(abs(e.raw) <= e.bound + 1e-6 for e in stat.entries) and elapsed < 10
    record(criterion_log, 1, ok, f"max(|regret| - bound) = {worst:.4g} over {len(stat.entries)} fields, {elapsed:.2f}s")


def test_criterion_02_decay(reports, criterion_log):
    small, large = reports[100][0].family_max, reports[10_000][0].family_max
    ratio = small / large
    record(criterion_log, 2, ratio >= 3, f"family max {small:.4g} (T=1e2) vs {large:.4g} (T=1e4), factor {ratio:.2f}")


def test_criterion_03_local_below_stationary(reports, criterion_log):
    stat, loc, _ = reports[10_000]
    s, l = stat.by_name(), loc.by_name()
    gaps = [l[k].raw - abs(s[k].raw) for k in s if s[k].coarse]
    record(criterion_log, 3, max(gaps) <= 1e-6, f"max(local - |stationary|) = {max(gaps):.4g}")


def test_criterion_04_velocity_matches_tangent(criterion_log):
    rng = np.random.default_rng(2024)
    checked = failures = skipped = 0
    worst = 0.0
    eps = 1e-6
    while checked < 100:
        kind = ["box", "simplex", "poly"][checked % 3]
        dim = int(rng.integers(2, 5))
        if kind == "box":
            lo = rng.uniform(-2, 0, dim)
            s = Box(lo, lo + rng.uniform(0.5, 2, dim))
        elif kind == "simplex":
            s = Simplex(dim)
        else:
            s = random_acute_polyhedron(rng, dim, ["box", "corner"][checked % 2])
        x_star = s.sample(rng, 1, boundary_fraction=0.5)[0]
        g = rng.normal(size=dim)
        tau = float(rng.uniform(0.01, 2.0))
        bps = s.breakpoints(x_star, g, tau + 1.0)
        if bps.size and np.min(np.abs(bps - tau)) < 1e-3:
            skipped += 1
            continue
        fd = (s.project(x_star + (tau + eps) * g) - s.project(x_star + tau * g)) / eps
        exact = s.tangent(s.project(x_star + tau * g), g)
        err = float(np.max(np.abs(fd - exact)))
        worst = max(worst, err)
        failures += err > 1e-4
        checked += 1
    record(criterion_log, 4, failures == 0, f"{checked} cases, {failures} failures, worst {worst:.3g}, {skipped} near breakpoints skipped")


def test_criterion_05_pennies_radius(pennies, criterion_log):
    cert = pennies_certificate(100.0)
    rep = check_certificate(pennies, cert, resolution=400, n_random=10_000, seed=0)
    start = time.perf_counter()
    traj = run_pga(pennies, (1.0, 1.0), 100_000, StepSchedule.inverse_sqrt(0.5, "inverse_eta"))
    mean_r2 = curve_average(traj, lambda x: np.sum(x**2, axis=-1))
    elapsed = time.perf_counter() - start
    ok = rep.min_margin >= -1e-6 and mean_r2 <= 1.1 and elapsed < 60
    record(criterion_log, 5, ok, f"min margin {rep.min_margin:.4g} on 400x400, E[r^2] = {mean_r2:.5f} at T=1e5 ({elapsed:.1f}s)")


def test_criterion_06_matcher_bound(pennies, criterion_log):
    fam = extension_family_2x2()
    state = regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0.7, -0.4]), 0.0, 10_000, "harmonic", strict=False)
    over = [row for row in state.log if row["max_regret"] > np.sqrt(8.0 / (row["t"])) * 4 + 1e-12]
    mean = state.distribution.mean()
    ok = not over and not state.bound_violations and np.linalg.norm(mean) <= 0.1
    record(
        criterion_log,
        6,
        ok,
        f"{len(state.log)} iterates checked, {len(over)} over bound, terminal max|mu| {state.score():.3g}, mean {np.round(mean, 6).tolist()}",
    )


def test_criterion_07_equivalences(criterion_log):
    rng = np.random.default_rng(77)
    games = [random_normal_form(rng, (2, 2)) for _ in range(3)] + [random_normal_form(rng, (2, 2, 2))]
    worst = 0.0
    for nf in games:
        ext = multilinear_extension(nf)
        pull, ce = pull_to_point_family(ext), ce_field_family(nf)
        a_star = [int(v) for v in rng.integers(0, 2, nf.n_players)]
        agg = FieldFamily([aggregated_pull_field(ext, a_star)])
        for _ in range(20):
            n = int(rng.integers(1, 8))
            dist = EmpiricalDistribution(ext.space.sample(rng, n, boundary_fraction=0.3), rng.dirichlet(np.ones(n)))
            sigma = induce_action_distribution(dist, nf)
            for mode, fam in (("CCE", pull), ("CE", ce), ("AverageCCE", agg)):
                rep = check_equilibrium(nf, sigma, mode, a_star=a_star)
                regrets = dict(zip(fam.names, local_regrets(dist, ext, fam)))
                worst = max(worst, max(abs(rep.constraints[k] - regrets[k]) for k in rep.constraints))
    record(criterion_log, 7, worst <= 1e-9, f"max |constraint - local regret| = {worst:.3g} over 80 distributions x 3 modes")


def test_criterion_08_lp(criterion_log):
    pd = prisoners_dilemma()
    cost = -(pd.payoffs[0] + pd.payoffs[1])
    pd_err = max(abs(worst_case_expectation(pd, cost, "CCE", s).value - cost[1, 1]) for s in ("min", "max"))
    worst_ratio = 0.0
    consistent = True
    for make in BUNDLED_NORMAL_FORM.values():
        nf = make()
        q = nf.payoffs[0] + nf.payoffs[1]
        for mode in ("CCE", "CE"):
            for sense in ("min", "max"):
                lp = worst_case_expectation(nf, q, mode, sense)
                oracle = grid_oracle(nf, q, mode, sense, resolution=50)
                sign = 1.0 if sense == "min" else -1.0
                ref = oracle.inner if oracle.inner is not None else oracle.outer
                consistent &= oracle.inner is None or sign * (oracle.inner - lp.value) >= -1e-9
                consistent &= sign * (lp.value - oracle.outer) >= -1e-9
                consistent &= lp.cs_residual <= 1e-8
                if oracle.gap > 0:
                    worst_ratio = max(worst_ratio, abs(lp.value - ref) / (2 * oracle.gap))
                else:
                    consistent &= abs(lp.value - ref) <= 1e-9
    ok = pd_err <= 1e-9 and consistent and worst_ratio <= 1 + 1e-9
    record(criterion_log, 8, ok, f"PD error {pd_err:.3g}; worst |LP - oracle| / (2 gap) = {worst_ratio:.3f}")


def test_criterion_09_gradient_audits(criterion_log):
    rng = np.random.default_rng(9)
    pennies = matching_pennies()
    errs = [finite_difference_audit(pennies, rng.uniform(-0.9, 0.9, 2)) for _ in range(10)]
    for _ in range(5):
        shape = tuple(int(k) for k in rng.integers(2, 4, int(rng.integers(2, 4))))
        ext = multilinear_extension(random_normal_form(rng, shape))
        errs += [finite_difference_audit(ext, x) for x in ext.space.sample(rng, 5)]
    record(criterion_log, 9, max(errs) <= 1e-6, f"max relative error {max(errs):.3g} over {len(errs)} audits")


def test_criterion_10_curvature_drift(criterion_log):
    rng = np.random.default_rng(10)
    ball = Ball(np.zeros(2), 1.0)
    space = ProductSet((ball,))
    K = 1.0
    worst = -np.inf
    for _ in range(50):
        start = ball.sample(rng, 1, boundary_fraction=1.0)[0]
        g = rng.normal(size=2)
        g += abs(rng.normal()) * start  # keep an outward component so the curve rides the boundary
        eta = float(rng.uniform(0.2, 1.0))
        end = ball.project(start + eta * g)
        traj = Trajectory(space, np.stack([start, end]), g[None, :], np.array([eta]), np.array([1.0]))
        s = float(rng.uniform(0.1, 0.9)) * eta
        x = ball.project(start + s * g)
        tangent = ball.tangent(x, g)
        offset = K * np.linalg.norm(g) * s
        lhs = np.linalg.norm(velocity(traj, s) - tangent)
        rhs = offset / (1 + offset) * np.linalg.norm(tangent) + 1e-3
        worst = max(worst, lhs - rhs)
    record(criterion_log, 10, worst <= 0, f"max(drift - bound) = {worst:.4g} over 50 boundary configurations")


CONFIGS = {
    "criterion1.cfg": """mode = "regret"
seed = 11
game.builtin = "matching_pennies"
schedule.C = 0.5
schedule.T = 10000
schedule.mu_mode = "inverse_eta"
x0 = [0.5, 0.3]
family = ["pull_to_point", "radial"]
""",
    "criterion5.cfg": """mode = "certify"
seed = 5
game.builtin = "matching_pennies"
certify.M1 = 100
certify.resolution = 400
certify.n_random = 10000
certify.trajectory = true
schedule.C = 0.5
schedule.T = 100000
schedule.mu_mode = "inverse_eta"
x0 = [1, 1]
""",
    "criterion6.cfg": """mode = "match-stationary"
seed = 6
game.builtin = "matching_pennies"
family = "extension_2x2"
match.max_iter = 10000
match.x0 = [0.7, -0.4]
""",
}


def _artifacts(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_11_reproducibility(tmp_path, criterion_log):
    codes, runs = [], []
    for rep in ("a", "b"):
        out_root = tmp_path / rep
        for name, text in CONFIGS.items():
            cfg = tmp_path / name
            cfg.write_text(text)
            proc = subprocess.run(
                [sys.executable, "-m", "foce", "run", "--config", str(cfg), "--out", str(out_root / name)],
                capture_output=True,
            )
            codes.append(proc.returncode)
        runs.append(_artifacts(out_root))
    same = runs[0] == runs[1] and len(runs[0]) >= 3
    ok = same and all(c == 0 for c in codes)
    record(criterion_log, 11, ok, f"{len(runs[0])} artifacts compared byte for byte, exit codes {sorted(set(codes))}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
