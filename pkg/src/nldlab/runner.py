"""Run orchestration: mode dispatch, deterministic CSV / plot-data emission,
run manifests with content digests, the built-in verification battery, and
concurrent parameter sweeps.

All floats are written with 17 significant digits so identical configurations
produce byte-identical artifacts.  Exit codes: 0 success, 1 configuration
error, 2 numerical failure, 3 property violation.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import (
    CoefficientBoundsError,
    RationalCoefficient,
    build_staircase,
    designed_intervals,
    interval_condition_check,
    scalar_mu_roots,
)
from .config import ConfigError, RunConfig, parse_config_data, realize_problem
from .grids import (
    EigenIterationError,
    RadialField,
    build_grid,
    constant_field,
    l2_norm,
    principal_eigenvalue,
    sup_norm,
)
from .kernels import BoundViolation, build_kernel, cap_fraction
from .parabolic import (
    LedgerViolation,
    contraction_check,
    corridor_check,
    CorridorPreconditionError,
    energy_ledger,
    linf_tracking,
    make_parabolic,
    moser_exponents,
    moser_sigma,
    run as run_parabolic,
    steady_convergence_report,
)
from .stability import certify_stability
from .stationary import (
    FixedPointDiverged,
    comparison_check,
    continue_branch,
    fixed_point_solve,
    make_problem,
    multistart_solve,
    poisson_phi,
    solve_at_max_radius,
    solve_linear_radial,
    uniqueness_quotient,
    with_radius,
)

DEFAULT_SEED = 20250810

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_PROPERTY = 3

_NUMERICAL_ERRORS = (FixedPointDiverged, EigenIterationError, ArithmeticError,
                     np.linalg.LinAlgError)


def fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_xy(path: Path, x, y) -> None:
    lines = [f"{fmt(a)} {fmt(b)}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunContext:
    cfg: RunConfig
    out_dir: Path
    seed: int
    workers: int
    strict: bool
    started: float
    outputs: list[Path]
    notes: dict

    def emit_csv(self, name: str, header, rows) -> Path:
        path = self.out_dir / name
        write_csv(path, header, rows)
        self.outputs.append(path)
        return path

    def emit_xy(self, name: str, x, y) -> Path:
        path = self.out_dir / name
        write_xy(path, x, y)
        self.outputs.append(path)
        return path


def write_manifest(ctx: RunContext, status: int) -> Path:
    manifest = {
        "artifact": {"name": "nldlab", "version": __version__},
        "mode": ctx.cfg.run.mode,
        "status": status,
        "seed": ctx.seed,
        "resolved_config": ctx.cfg.to_dict(),
        "tolerances": {
            "fixed_point_tol": ctx.cfg.run.tol,
            "max_iter": ctx.cfg.run.max_iter,
            "eps": ctx.cfg.constants.eps,
        },
        "notes": ctx.notes,
        "wall_clock_seconds": time.time() - ctx.started,
        "outputs": [
            {"path": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)}
            for p in ctx.outputs
        ],
    }
    path = ctx.out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_mode(cfg: RunConfig, out_dir=None, seed: int = DEFAULT_SEED,
             workers: int = 1, strict: bool = False) -> int:
    """Dispatch a parsed configuration.  The manifest is written even when a
    mode fails, so a nonzero exit still leaves an inspectable record."""
    out = Path(out_dir) if out_dir is not None else Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg=cfg, out_dir=out, seed=seed, workers=workers,
                     strict=strict, started=time.time(), outputs=[], notes={})
    try:
        if cfg.run.mode == "stationary":
            status = _mode_stationary(ctx)
        elif cfg.run.mode == "pd_roots":
            status = _mode_pd_roots(ctx)
        elif cfg.run.mode == "branch":
            status = _mode_branch(ctx)
        elif cfg.run.mode == "parabolic":
            status = _mode_parabolic(ctx)
        elif cfg.run.mode == "sweep":
            status = _mode_sweep(ctx)
        else:
            status = _mode_verify(ctx)
    except (ConfigError, CoefficientBoundsError) as exc:
        ctx.notes["error"] = str(exc)
        status = EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        ctx.notes["error"] = str(exc)
        status = EXIT_NUMERICAL
    except (LedgerViolation, BoundViolation) as exc:
        ctx.notes["error"] = str(exc)
        status = EXIT_PROPERTY
    write_manifest(ctx, status)
    return status


def run_config_text(text: str, out_dir=None, seed: int = DEFAULT_SEED,
                    workers: int = 1, strict: bool = False) -> int:
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"configuration error: {exc}")
        return EXIT_CONFIG
    return run_mode(cfg, out_dir=out_dir, seed=seed, workers=workers, strict=strict)


# -- individual modes ---------------------------------------------------------


def _build(ctx: RunContext):
    grid, coeff, f, g, u0, r = realize_problem(ctx.cfg)
    bps = ctx.cfg.problem.coefficient.staircase_breakpoints()
    if bps is not None:
        ctx.notes["staircase_breakpoints"] = bps
    return grid, coeff, f, g, u0, r


def _mode_stationary(ctx: RunContext) -> int:
    grid, coeff, f, g, u0, r = _build(ctx)
    problem = make_problem(grid, coeff, f, g, r)
    sol = fixed_point_solve(problem, tol=ctx.cfg.run.tol, max_iter=ctx.cfg.run.max_iter)
    ctx.notes["iterations"] = sol.iterations
    ctx.notes["residual"] = sol.residual
    ctx.notes["pde_residual"] = sol.pde_residual
    rows = zip(range(grid.N + 1), grid.nodes, sol.u.values,
               sol.interaction.values, sol.coefficient_field.values)
    ctx.emit_csv("solution.csv", ["node", "rho", "u", "interaction", "coefficient"], rows)
    return EXIT_OK


def _mode_pd_roots(ctx: RunContext) -> int:
    grid, coeff, f, g, u0, _ = _build(ctx)
    problem = make_problem(grid, coeff, f, g, 2.0 * grid.R)
    phi = poisson_phi(problem)
    c = float(problem.kernel.apply_values(phi.values)[0])
    ctx.notes["reduction_constant"] = c
    roots = scalar_mu_roots(coeff, c, mu_max=ctx.cfg.constants.mu_max)
    sols = solve_at_max_radius(problem, mu_max=ctx.cfg.constants.mu_max)
    rows = [
        (k, rt.mu, rt.residual, int(rt.tangential), sup_norm(s.u), s.pde_residual)
        for k, (rt, s) in enumerate(zip(roots, sols))
    ]
    ctx.emit_csv("mu_roots.csv",
                 ["index", "mu", "scalar_residual", "tangential", "sup_u", "pde_residual"],
                 rows)
    return EXIT_OK


def _mode_branch(ctx: RunContext) -> int:
    grid, coeff, f, g, u0, r = _build(ctx)
    problem = make_problem(grid, coeff, f, g, r)
    branch = continue_branch(problem, r_steps=ctx.cfg.run.r_steps,
                             tol=ctx.cfg.run.tol, max_iter=ctx.cfg.run.max_iter,
                             eps=ctx.cfg.constants.eps, C1=ctx.cfg.constants.C1)
    rows = [
        (p.r, sup_norm(p.solution.u), p.solution.interaction.values[0],
         p.lambda_min, p.uniqueness_q, p.solution.residual, p.solution.iterations)
        for p in branch.points
    ]
    ctx.emit_csv("branch.csv",
                 ["r", "sup_u", "lr_center", "lambda_min", "Q", "residual", "iterations"],
                 rows)
    if branch.truncated:
        ctx.notes["truncated"] = branch.truncated
        return EXIT_NUMERICAL
    return EXIT_OK


def _mode_parabolic(ctx: RunContext) -> int:
    grid, coeff, f, g, u0, r = _build(ctx)
    cfg = ctx.cfg
    problem = make_parabolic(grid, coeff, f, g, r, u0, cfg.run.T, cfg.run.dt)
    traj = run_parabolic(problem, stride=cfg.run.stride)

    # Corridor endpoints and the steady target at this radius.
    stat = make_problem(grid, coeff, f, g, r)
    u_lo = solve_linear_radial(constant_field(grid, coeff(0.0)), f)
    pd = with_radius(stat, 2.0 * grid.R)
    u_hi = min(solve_at_max_radius(pd, mu_max=cfg.constants.mu_max),
               key=lambda s: sup_norm(s.u)).u
    u_r = fixed_point_solve(stat, tol=cfg.run.tol, max_iter=cfg.run.max_iter).u

    led = energy_ledger(traj, problem)
    ctx.notes["energy_ok"] = led.ok
    corridor = None
    try:
        corridor = corridor_check(traj, u_lo, u_hi)
        ctx.notes["corridor_ok"] = corridor.ok
    except CorridorPreconditionError as exc:
        ctx.notes["corridor_ok"] = f"skipped: {exc}"
        if ctx.strict:
            raise LedgerViolation(str(exc))
    steady = steady_convergence_report(traj, u_r)
    ctx.notes["dist_to_steady_final_ratio"] = steady.final_ratio
    linf = linf_tracking(traj)
    ctx.notes["sup_overall"] = linf.sup_overall

    idx = [int(round(t / problem.dt)) for t in traj.snapshot_times]
    dists = {int(round(t / problem.dt)): d
             for t, d in zip(steady.times, steady.distances)}
    rows = []
    for j, k in enumerate(idx):
        mlo = corridor.margins_lo[j] if corridor else float("nan")
        mhi = corridor.margins_hi[j] if corridor else float("nan")
        rows.append((traj.times[k], traj.l2[k], traj.h1[k], traj.sup[k],
                     traj.lr_center[k], led.lhs[k], led.rhs[k], mlo, mhi,
                     dists.get(k, float("nan"))))
    ctx.emit_csv(
        "trajectory.csv",
        ["t", "l2", "h1", "sup", "lr_center", "energy_lhs", "energy_rhs",
         "corridor_margin_lo", "corridor_margin_hi", "dist_to_steady"],
        rows)
    if "xy" in cfg.output.formats:
        ctx.emit_xy("energy_lhs.xy", traj.times[idx], led.lhs[idx])
        ctx.emit_xy("energy_rhs.xy", traj.times[idx], led.rhs[idx])
        ctx.emit_xy("linf.xy", traj.times[idx], traj.sup[idx])
        ctx.emit_xy("dist_to_steady.xy", steady.times, steady.distances)
        if corridor:
            ctx.emit_xy("corridor_lo.xy", traj.snapshot_times, corridor.margins_lo)
            ctx.emit_xy("corridor_hi.xy", traj.snapshot_times, corridor.margins_hi)
    if not led.ok or (corridor is not None and not corridor.ok):
        raise LedgerViolation("a parabolic ledger failed; see the manifest notes")
    return EXIT_OK


def _set_by_path(tree: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = tree
    for key in parts[:-1]:
        if key not in node or node[key] is None:
            node[key] = {}
        node = node[key]
    node[parts[-1]] = value


def _mode_sweep(ctx: RunContext) -> int:
    cfg = ctx.cfg
    if cfg.sweep is None:
        raise ConfigError("sweep: mode 'sweep' requires a sweep block")
    paths = [p for p, _ in cfg.sweep.parameters]
    value_lists = [vals for _, vals in cfg.sweep.parameters]
    combos = list(itertools.product(*value_lists))
    base = cfg.to_dict()
    base.pop("sweep")
    base["run"]["mode"] = cfg.sweep.mode

    def run_entry(item):
        index, combo = item
        tree = copy.deepcopy(base)
        for path, value in zip(paths, combo):
            _set_by_path(tree, path, value)
        sub_cfg = parse_config_data(tree)
        subdir = ctx.out_dir / f"sweep_{index:03d}"
        return run_mode(sub_cfg, out_dir=subdir, seed=ctx.seed, strict=ctx.strict)

    if ctx.workers > 1:
        with ThreadPoolExecutor(max_workers=ctx.workers) as pool:
            statuses = list(pool.map(run_entry, enumerate(combos)))
    else:
        statuses = [run_entry(item) for item in enumerate(combos)]

    rows = [(i,) + combo + (statuses[i],) for i, combo in enumerate(combos)]
    ctx.emit_csv("sweep_index.csv", ["entry"] + paths + ["status"], rows)
    ctx.notes["entries"] = len(combos)
    return EXIT_OK if all(s == EXIT_OK for s in statuses) else max(statuses)


# -- verification battery ------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float


def _mc_cap_oracle(rng, n, t, s, r, samples):
    """Monte Carlo fraction of the sphere {|y| = s} within r of (t, 0, ...)."""
    if n == 1:
        pts = s * rng.choice([-1.0, 1.0], size=samples)
        return float(np.mean(np.abs(pts - t) <= r))
    if n == 2:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=samples)
        d2 = (s * np.cos(ang) - t) ** 2 + (s * np.sin(ang)) ** 2
    else:
        z = rng.uniform(-1.0, 1.0, size=samples)
        ang = rng.uniform(0.0, 2.0 * np.pi, size=samples)
        rad = np.sqrt(1.0 - z**2)
        d2 = (s * rad * np.cos(ang) - t) ** 2 + (s * rad * np.sin(ang)) ** 2 + (s * z) ** 2
    return float(np.mean(d2 <= r * r))


def verification_checks(seed: int = DEFAULT_SEED, fast: bool = True):
    """The regression battery behind ``verify`` mode: every assertable
    invariant at desk scale on built-in configurations."""
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []

    def record(name, measured, threshold, larger_is_fine=False):
        ok = measured >= threshold if larger_is_fine else measured <= threshold
        checks.append(CheckResult(name, bool(ok), float(measured), float(threshold)))

    # Quadrature and norms.
    grid = build_grid(3, 1.0, 128)
    one = constant_field(grid, 1.0)
    record("quadrature_ball_volume",
           abs(grid.integrate(one.values) - 4 * np.pi / 3), 4 * np.pi * grid.h**2 / 6 * 1.01)
    u = RadialField(grid, rng.standard_normal(grid.N + 1))
    record("norm_homogeneity", abs(l2_norm(3.5 * u) - 3.5 * l2_norm(u)), 1e-12 * l2_norm(u))

    # Principal eigenvalue against the closed forms.
    from scipy.special import jn_zeros
    refs = {1: (np.pi / 2) ** 2, 2: jn_zeros(0, 1)[0] ** 2, 3: np.pi**2}
    worst = max(abs(principal_eigenvalue(build_grid(n, 1.0, 256)) - refs[n]) / refs[n]
                for n in (1, 2, 3))
    record("eigenvalue_closed_forms_rel", worst, 5e-3)

    # Kernel endpoints.
    g128 = build_grid(3, 1.0, 128)
    gfield = constant_field(g128, 1.0)
    k0 = build_kernel(g128, gfield, 0.0)
    record("kernel_zero_radius", float(np.max(np.abs(k0.matrix))), 0.0)
    kd = build_kernel(g128, gfield, 2.0)
    rows = kd.matrix.sum(axis=1)
    record("kernel_full_radius_row_spread", float(rows.max() - rows.min()), 1e-12)
    record("kernel_full_radius_matches_quadrature",
           abs(rows[0] - g128.integrate(gfield.values)), 1e-12)

    # Monte Carlo cap oracle.
    samples = 100_000 if fast else 1_000_000
    worst_sigma = 0.0
    for n in (1, 2, 3):
        for _ in range(10 if fast else 50):
            t, s = rng.uniform(0.0, 1.0, size=2)
            r = rng.uniform(0.0, 2.0)
            p = cap_fraction(n, t, s, r)
            phat = _mc_cap_oracle(rng, n, t, s, r, samples)
            se = np.sqrt(max(p * (1 - p), 1e-12) / samples)
            worst_sigma = max(worst_sigma, abs(phat - p) / se)
    record("cap_fraction_mc_sigmas", worst_sigma, 4.0)

    # Linear oracle and convergence order.
    errs = []
    for N in (64, 128, 256, 512):
        gg = build_grid(3, 1.0, N)
        sol = solve_linear_radial(constant_field(gg, 1.0), constant_field(gg, 1.0))
        errs.append(np.max(np.abs(sol.values - (1 - gg.nodes**2) / 6)))
    record("linear_oracle_sup_error", errs[2], 5e-4)
    slope = -np.polyfit(np.log([64, 128, 256, 512]), np.log(errs), 1)[0]
    record("linear_oracle_order", slope, 1.8, larger_is_fine=True)

    # Scalar reduction at full radius.
    gridq = build_grid(3, 1.0, 256)
    f1 = constant_field(gridq, 1.0)
    arat = RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))
    probd = make_problem(gridq, arat, f1, constant_field(gridq, 1.0), 2.0)
    c = float(probd.kernel.apply_values(poisson_phi(probd).values)[0])
    mu_star = c / (1 - c)
    solfp = fixed_point_solve(probd)
    record("reduction_fixed_point", abs(solfp.interaction.values[0] - mu_star), 1e-6)
    record("reduction_constant_vs_hand", abs(c - 4 * np.pi / 45), 1e-5)

    # Staircase multiplicity.
    cmin, cmax = 0.8 * c, 1.25 * c
    coeff, bps = build_staircase(cmin, cmax, 2.0, 3)
    ivals = designed_intervals(bps)
    conds = all(interval_condition_check(coeff, lo, hi, cmin, cmax) for lo, hi in ivals)
    roots = scalar_mu_roots(coeff, c)
    local = [rt for rt in roots if any(lo <= rt.mu <= hi for lo, hi in ivals)]
    per_interval = [sum(lo <= rt.mu <= hi for rt in roots) for lo, hi in ivals]
    probst = make_problem(gridq, coeff, f1, constant_field(gridq, 1.0), 2.0)
    ms = multistart_solve(probst, ivals)
    ok = conds and len(local) == 2 and per_interval == [1, 1] and len(ms.solutions) == 2
    checks.append(CheckResult("staircase_multiplicity", bool(ok),
                              float(len(ms.solutions)), 2.0))

    # Frozen-solve comparison on random positive data.
    worst = 0.0
    gg = build_grid(3, 1.0, 64)
    for _ in range(20):
        A = RadialField(gg, 0.2 + rng.uniform(0.0, 1.0, gg.N + 1))
        B = RadialField(gg, A.values + rng.uniform(0.0, 1.0, gg.N + 1))
        f = RadialField(gg, rng.uniform(0.0, 1.0, gg.N + 1))
        ua = solve_linear_radial(A, f)
        ub = solve_linear_radial(B, f)
        worst = max(worst, float(np.max(ub.values - ua.values)))
    record("frozen_solve_comparison", worst, 1e-14)

    # Branch structure in the certified regime.
    gridb = build_grid(3, 1.0, 128)
    fsmall = constant_field(gridb, 0.05)
    gone = constant_field(gridb, 1.0)
    probq = make_problem(gridb, arat, fsmall, gone, 1.0)
    branch = continue_branch(probq, r_steps=8)
    record("branch_uniqueness_quotient", branch.points[0].uniqueness_q, 1.0)
    record("branch_lambda_min", min(p.lambda_min for p in branch.points), 0.0,
           larger_is_fine=True)
    u_lo = branch.points[-1].solution.u
    u_hi = branch.points[0].solution.u
    mono_ok = all(
        comparison_check(u_lo, p.solution.u, u_hi).ok for p in branch.points
    )
    steps_ok = all(
        np.all(branch.points[k].solution.u.values
               >= branch.points[k + 1].solution.u.values - 1e-9)
        for k in range(len(branch.points) - 1)
    )
    checks.append(CheckResult("branch_corridor_monotone", bool(mono_ok and steps_ok),
                              1.0 if (mono_ok and steps_ok) else 0.0, 1.0))

    # Iteration exponents.
    me = moser_exponents(3, 2.0, 1.0)
    exact = (abs(me.sigma - 5 / 7) + abs(me.beta - 0.4) + abs(me.delta - 0.7)
             + abs(me.rho - 2 / 7) + abs(me.theta - 7 / 8))
    record("moser_flagship_values", exact, 1e-12)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 7))
        p = rng.uniform(1.0 + 1e-6, n / (n - 2) - 1e-6)
        rr = rng.uniform(1.0, 20.0)
        m = moser_exponents(n, p, rr)
        worst = max(worst, abs(2 * rr * m.sigma * m.delta - 1.0),
                    abs(2 * m.rho - m.alpha * m.beta / m.delta))
    record("moser_identities", worst, 1e-12)

    # Parabolic physics (short runs).
    aone = RationalCoefficient(1.0, 1.0, 0.0, domain=(-0.5, 5.0))
    gridp = build_grid(3, 1.0, 128)
    gp = constant_field(gridp, 1.0)
    from .coefficients import ConstantCoefficient
    aconst = ConstantCoefficient(1.0)
    u0 = RadialField(gridp, (1 - gridp.nodes**2) / 6)
    probl = make_parabolic(gridp, aconst, constant_field(gridp, 0.0), gp, 2.0,
                           u0, T=0.3, dt=2e-4)
    traj = run_parabolic(probl, stride=50)
    lam = principal_eigenvalue(gridp)
    mask = traj.times >= 0.15
    slope = -np.polyfit(traj.times[mask], np.log(traj.l2[mask]), 1)[0]
    record("parabolic_decay_rate_rel", abs(slope - lam) / lam, 0.05)

    probf = make_parabolic(gridp, aconst, constant_field(gridp, 1.0), gp, 2.0,
                           constant_field(gridp, 0.0), T=0.5, dt=1e-3)
    trajf = run_parabolic(probf, stride=50)
    led = energy_ledger(trajf, probf)
    record("energy_ledger_excess", led.worst_excess, 0.0)

    statq = make_problem(gridp, aone, fsmall_p := constant_field(gridp, 0.05), gp, 1.0)
    u_lo = solve_linear_radial(constant_field(gridp, aone(0.0)), fsmall_p)
    u_hi = min(solve_at_max_radius(with_radius(statq, 2.0)),
               key=lambda s: sup_norm(s.u)).u
    probc = make_parabolic(gridp, aone, fsmall_p, gp, 1.0, u_lo, T=1.0, dt=2e-3)
    trajc = run_parabolic(probc, stride=50)
    cor = corridor_check(trajc, u_lo, u_hi)
    record("corridor_ledger_margin", max(-cor.worst_lo, -cor.worst_hi), cor.slack)

    con0 = contraction_check(
        make_parabolic(gridp, aconst, constant_field(gridp, 0.0), gp, 2.0,
                       u0, T=0.2, dt=1e-3),
        u0, constant_field(gridp, 0.0))
    con1 = contraction_check(probc, u_lo, constant_field(gridp, 0.0))
    checks.append(CheckResult("contraction_ledgers", bool(con0.ok and con1.ok),
                              1.0 if (con0.ok and con1.ok) else 0.0, 1.0))

    # Determinism of the integrator.
    t1 = run_parabolic(probf, stride=100)
    t2 = run_parabolic(probf, stride=100)
    identical = np.array_equal(t1.final.values, t2.final.values)
    checks.append(CheckResult("integrator_determinism", bool(identical),
                              1.0 if identical else 0.0, 1.0))
    return checks


def _mode_verify(ctx: RunContext) -> int:
    checks = verification_checks(seed=ctx.seed)
    rows = [(c.name, "pass" if c.passed else "FAIL", c.measured, c.threshold)
            for c in checks]
    ctx.emit_csv("verify_report.csv", ["check", "status", "measured", "threshold"], rows)
    for c in checks:
        print(f"{'pass' if c.passed else 'FAIL'}  {c.name}  "
              f"measured={c.measured:.6g} threshold={c.threshold:.6g}")
    failed = [c for c in checks if not c.passed]
    ctx.notes["checks"] = len(checks)
    ctx.notes["failed"] = [c.name for c in failed]
    return EXIT_OK if not failed else EXIT_PROPERTY
