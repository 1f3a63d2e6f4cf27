"""Experiment drivers behind the CLI: deterministic artifacts per (config, seed)."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .dynamics import (
    DiagnosticsRecord,
    SolverParams,
    galerkin_convergence,
    new_solver_state,
    run_simulation,
)
from .figures import (
    render_chaos_zscores,
    render_energy_series,
    render_galerkin_decay,
    render_identity_residuals,
    render_noise_variance,
    render_renorm_growth,
)
from .grid import GridSpec, SpectralField, VectorField
from .identities import identity_suite
from .noise import (
    initial_noise_state,
    ou_step,
    ou_variance,
    perturbation_fields,
    sample_noise_at_time,
)
from .renorm import block_variance_study, chaos_diagnostics, renorm_constant
from .reporting import (
    ExperimentConfig,
    load_checkpoint,
    load_field_json,
    save_checkpoint,
    write_csv,
    write_json,
    write_manifest,
)
from .spectral import leray_project, random_divfree_field

__all__ = ["build_initial_data", "run_experiment"]


def parallel_map(fn, items, threads: int = 1):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def build_initial_data(spec: dict, grid: GridSpec) -> tuple[VectorField, VectorField]:
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return VectorField.zeros(grid), VectorField.zeros(grid)
    if kind == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        norm = float(spec.get("l2_norm", 0.5))
        return (
            random_divfree_field(grid, rng, l2_norm=norm),
            random_divfree_field(grid, rng, l2_norm=norm),
        )
    if kind == "single-mode":
        m1, m2 = (int(v) for v in spec.get("mode", (1, 0)))
        amp = float(spec.get("amplitude", 0.5))
        channel = spec.get("channel", "u")
        c = np.zeros((grid.n, grid.n), dtype=np.complex128)
        c[m1 % grid.n, m2 % grid.n] = amp
        c[(-m1) % grid.n, (-m2) % grid.n] = amp
        v = leray_project(
            VectorField(SpectralField(grid, c, mask=False), SpectralField.zeros(grid))
        )
        z = VectorField.zeros(grid)
        return (v, z) if channel == "u" else (z, v)
    if kind == "file":
        paths = spec["paths"]
        u = VectorField(load_field_json(paths["u1"]), load_field_json(paths["u2"]))
        b = VectorField(load_field_json(paths["b1"]), load_field_json(paths["b2"]))
        return u, b
    raise ValueError(f"unknown initial-data kind {kind!r}")


# ---------------------------------------------------------------------------
# per-kind drivers


def _run_identities(cfg: ExperimentConfig, out: Path, threads: int) -> tuple[list[Path], int]:
    records = identity_suite(
        grid_n=cfg.grid_n, seeds=cfg.seeds, lam=cfg.lam, nu=cfg.nu, eps=cfg.eps,
    )
    header = ["identity_id", "lhs", "rhs", "residual", "relative_residual",
              "scale", "grid_n", "seed"]
    rows = [[r.identity_id, r.lhs, r.rhs, r.residual, r.relative_residual,
             r.scale, r.grid_n, r.seed] for r in records]
    files = [out / "identities.csv"]
    write_csv(files[0], header, rows)

    worst: dict[str, float] = {}
    for r in records:
        worst[r.identity_id] = max(worst.get(r.identity_id, 0.0), r.relative_residual)
    passed = {k: v < cfg.tolerance for k, v in worst.items()}
    summary = {
        "tolerance": cfg.tolerance,
        "identities": {k: {"worst_relative_residual": worst[k], "passed": passed[k]}
                       for k in sorted(worst)},
        "all_passed": all(passed.values()),
    }
    files.append(out / "summary.json")
    write_json(files[-1], summary)
    if cfg.figures:
        files.append(render_identity_residuals(out / "residuals.png", worst, cfg.tolerance))
    return files, 0 if summary["all_passed"] else 1


def _run_renorm(cfg: ExperimentConfig, out: Path, threads: int) -> tuple[list[Path], int]:
    grid = GridSpec(cfg.grid_n)
    times = [0.0, 0.1, 0.5, 1.0, 5.0, 10.0]
    rows = []
    for lam in cfg.lams:
        for t in times:
            rows.append([lam, t, renorm_constant(lam, t, cfg.nu)])
    files = [out / "renorm_table.csv"]
    write_csv(files[0], ["lam", "t", "r_value"], rows)

    reports = {}
    for lam in cfg.lams:
        rep = chaos_diagnostics(cfg.samples, lam, cfg.chaos_time, cfg.nu, grid,
                                seed=cfg.seed, threads=threads)
        reports[str(lam)] = rep.to_dict()
    files.append(out / "chaos_report.json")
    write_json(files[-1], {"reports": reports})

    study = block_variance_study(min(cfg.samples, 300), list(cfg.lams), cfg.chaos_time,
                                 cfg.nu, grid, seed=cfg.seed)
    files.append(out / "block_variance.json")
    write_json(files[-1], study)

    if cfg.figures:
        tmax = times[-1]
        vals = [renorm_constant(lam, tmax, cfg.nu) for lam in cfg.lams]
        files.append(render_renorm_growth(out / "renorm_growth.png", list(cfg.lams), vals))
        z = np.array(
            [[reports[str(cfg.lams[-1])]["entries"][4 * i + j]["z_score"] for j in range(4)]
             for i in range(4)]
        )
        files.append(render_chaos_zscores(out / "chaos_zscores.png", z))
    return files, 0


def _run_simulate(cfg: ExperimentConfig, out: Path, threads: int,
                  resume: Path | None = None) -> tuple[list[Path], int]:
    grid = GridSpec(cfg.grid_n)
    if resume is not None:
        state = load_checkpoint(resume)
    else:
        params = SolverParams(grid, cfg.nu, cfg.dt,
                              threshold_exponent=cfg.threshold_exponent, kappa=cfg.kappa)
        u0, b0 = build_initial_data(cfg.initial_data, grid)
        zu, zb = perturbation_fields(cfg.perturbation, grid)
        state = new_solver_state(params, u0, b0,
                                 seed=cfg.seed if cfg.noise else None,
                                 zeta_u=zu, zeta_b=zb)
    records, state = run_simulation(state, cfg.t_final, diag_every=cfg.diag_every)
    header = list(DiagnosticsRecord.FIELDS)
    rows = [r.row() for r in records]
    files = [out / "series.csv"]
    write_csv(files[0], header, rows)
    files.append(out / "ledger.json")
    write_json(files[-1], {
        "i0": state.i0,
        "entries": [[e.index, e.time, e.norm] for e in state.ledger],
    })
    files.append(out / "checkpoint.bin")
    save_checkpoint(files[-1], state)
    if cfg.figures:
        files.append(render_energy_series(out / "energy.png", rows, header))
    return files, 0


def _run_galerkin(cfg: ExperimentConfig, out: Path, threads: int) -> tuple[list[Path], int]:
    grid = GridSpec(cfg.grid_n)
    u0, b0 = build_initial_data(cfg.initial_data, grid)
    report = galerkin_convergence(grid, cfg.nu, cfg.dt, cfg.t_final,
                                  list(cfg.galerkin_levels), list(cfg.seeds), u0, b0,
                                  snapshot_every=cfg.snapshot_every)
    files = [out / "galerkin.json"]
    write_json(files[0], report)
    rows = []
    for per_seed in report["pairs"]:
        for row in per_seed["rows"]:
            rows.append([per_seed["seed"], row["n"], row["sup_l2"],
                         row["l2_time_l2"], row["l2_time_h_half"]])
    files.append(out / "galerkin.csv")
    write_csv(files[-1], ["seed", "n", "sup_l2", "l2_time_l2", "l2_time_h_half"], rows)
    if cfg.figures:
        files.append(render_galerkin_decay(out / "galerkin.png", report))
    return files, 0


def _run_noise_stats(cfg: ExperimentConfig, out: Path, threads: int) -> tuple[list[Path], int]:
    grid = GridSpec(cfg.grid_n)
    t = cfg.chaos_time if cfg.chaos_time > 0 else 0.7
    probes = [((1, 0), 1.0), ((2, 0), 4.0), ((4, 0), 16.0)]

    def one(i: int):
        st = sample_noise_at_time(grid, cfg.nu, t, seed=cfg.seed, sample_index=i)
        vals = [abs(st.F_u[m1 % grid.n, m2 % grid.n]) ** 2 for (m1, m2), _ in probes]
        cross = (st.F_u[1, 0] * np.conj(st.F_b[1, 0])).real
        return vals, cross

    results = parallel_map(one, range(cfg.samples), threads)
    var_rows = []
    for idx, ((m1, m2), msq) in enumerate(probes):
        samples = np.array([r[0][idx] for r in results])
        exact = float(ou_variance(cfg.nu, np.array([msq]), t)[0])
        se = float(samples.std(ddof=1) / np.sqrt(samples.size))
        var_rows.append({
            "mode": [m1, m2], "mode_sq": msq, "sample_var": float(samples.mean()),
            "exact_var": exact, "stderr": se,
            "z_score": (float(samples.mean()) - exact) / se,
        })
    cross = np.array([r[1] for r in results])
    cross_z = float(cross.mean() / (cross.std(ddof=1) / np.sqrt(cross.size)))

    files = [out / "noise_stats.json"]
    write_json(files[0], {"t": t, "nu": cfg.nu, "samples": cfg.samples,
                          "variances": var_rows, "cross_correlation_z": cross_z})
    files.append(out / "noise_stats.csv")
    write_csv(files[-1], ["m1", "m2", "mode_sq", "sample_var", "exact_var", "stderr", "z"],
              [[r["mode"][0], r["mode"][1], r["mode_sq"], r["sample_var"],
                r["exact_var"], r["stderr"], r["z_score"]] for r in var_rows])

    if cfg.dump_trajectory:
        lines = []
        st = initial_noise_state(grid, cfg.nu, cfg.seed)
        for _ in range(50):
            st = ou_step(st, cfg.dt)
            for m1, m2 in ((1, 0), (0, 1), (1, 1)):
                v = st.F_u[m1, m2]
                lines.append(json.dumps({"t": st.t, "mode": [m1, m2],
                                         "re": v.real, "im": v.imag}))
        files.append(out / "trajectory.jsonl")
        files[-1].write_text("\n".join(lines) + "\n")

    if cfg.figures:
        files.append(render_noise_variance(out / "noise_variance.png", var_rows))
    return files, 0


_DRIVERS = {
    "identities": _run_identities,
    "renorm": _run_renorm,
    "simulate": _run_simulate,
    "galerkin": _run_galerkin,
    "noise-stats": _run_noise_stats,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1,
                   resume: str | Path | None = None) -> tuple[Path, int]:
    """Dispatch one experiment; returns (manifest path, exit code)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "simulate":
        files, code = _run_simulate(cfg, out, threads,
                                    Path(resume) if resume else None)
    else:
        files, code = _DRIVERS[cfg.kind](cfg, out, threads)
    manifest = write_manifest(out, cfg, files)
    return manifest, code
