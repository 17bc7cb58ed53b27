"""
Experiment orchestration behind the CLI subcommands. Each runner takes a
validated ExperimentConfig plus resolved overrides, writes its artifacts
(manifest, CSV, optional binary snapshots, companion figures) into the output
directory, and returns a flat summary dict.

Replica fan-out is parallel over a thread pool; results are merged by replica
index so output ordering never depends on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import figures
from .config import ConfigError, ExperimentConfig
from .diagnostics import (
    accumulate_kinetic_measure,
    entropy_report,
    l1_distance,
    l1_series,
)
from .grid import RealField, lp_norm
from .kernels import mollify, save_kernel_table
from .particles import (
    ParticleState,
    empirical_density,
    particle_draws,
    sample_from_density,
    step_particles,
)
from .presets import parse_initial
from .records import save_snapshots, write_csv_series
from .solver import SolverConfig, mean_field_run, run

__all__ = ["RUNNERS", "run_experiment"]


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write_manifest(out: Path, cfg: ExperimentConfig, record) -> None:
    record.write_manifest(out / "manifest.txt", config_echo=cfg.text)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def simulate(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)

    def one(replica: int):
        return run(replace(base, replica=replica, label=f"replica-{replica}"))

    records = _parallel_map(one, list(range(replicas)), threads)
    rec = records[0]
    _write_manifest(out, cfg, rec)
    rec.write_csv(out / "series.csv")
    if cfg.write_snapshots:
        rec.write_snapshots(out / "snapshots.bin")
    hist = accumulate_kinetic_measure(rec)
    hist.write_csv(out / "kinetic_histogram.csv")

    budgets = []
    for r, record in enumerate(records):
        if r > 0:
            record.write_csv(out / f"series_r{r:03d}.csv")
        if record.entropy_enabled:
            budgets.append(entropy_report(record).budget())
    if budgets:
        write_csv_series(
            out / "budgets.csv",
            "replica,budget",
            [(r, float(b)) for r, b in enumerate(budgets)],
        )
    if cfg.write_figures:
        figures.trajectory_figure(rec, out / "diagnostics.png")
        figures.field_figure(rec.final_field, out / "final_state.png", title="rho(T)")

    mass_drift = float(np.abs(rec.mass - rec.mass[0]).max() / max(abs(rec.mass[0]), 1e-300))
    return {
        "config_digest": rec.config_digest,
        "steps": len(rec.times) - 1,
        "mass_drift": mass_drift,
        "min_rho": float(rec.min_rho.min()),
        "clamp_events": rec.clamp_events,
        "unreliable": rec.unreliable,
        "mean_budget": float(np.mean(budgets)) if budgets else float("nan"),
    }


# ---------------------------------------------------------------------------
# uniqueness / stability
# ---------------------------------------------------------------------------


def uniqueness(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)
    grid = base.grid
    second = parse_initial(grid, cfg.initial2)
    eps = l1_distance(base.initial, second)

    rec1, rec2 = _parallel_map(
        lambda init: run(replace(base, initial=init)), [base.initial, second], threads
    )
    times, distances = l1_series(rec1, rec2)
    _write_manifest(out, cfg, rec1)
    write_csv_series(
        out / "uniqueness.csv",
        "t,l1_distance",
        [(float(t), float(d)) for t, d in zip(times, distances)],
    )
    sup = float(distances.max())
    amplification = sup / eps if eps > 0 else 0.0
    if cfg.write_figures:
        figures.series_figure(
            times, {"|rho1 - rho2|_L1": distances}, out / "uniqueness.png", ylabel="L1 distance"
        )
    return {
        "initial_l1_perturbation": eps,
        "sup_l1_distance": sup,
        "amplification": amplification,
    }


# ---------------------------------------------------------------------------
# regularization ladder
# ---------------------------------------------------------------------------


def ladder(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)
    tasks: list[tuple[str, float, SolverConfig]] = []
    for n in cfg.n_ladder:
        tasks.append(("sigma_n", float(n), replace(base, sigma_index=int(n))))
    for gamma in cfg.gamma_ladder:
        tasks.append(("gamma", float(gamma), replace(base, gamma=float(gamma))))

    records = _parallel_map(lambda t: run(t[2]), tasks, threads)
    rows = []
    summaries: dict[str, list] = {}
    for (ladder_name, level, _), rec in zip(tasks, records):
        report = entropy_report(rec)
        entry = {
            "ladder": ladder_name,
            "level": level,
            "record": rec,
            "sup_entropy": float(report.running_sup_entropy[-1]),
            "dissipation_integral": report.dissipation_integral,
            "budget": report.budget(),
        }
        summaries.setdefault(ladder_name, []).append(entry)

    for name, entries in summaries.items():
        prev = None
        for entry in entries:
            if prev is None:
                diff = float("nan")
            else:
                diff = l1_distance(
                    RealField(base.grid, prev["record"].final_field),
                    RealField(base.grid, entry["record"].final_field),
                )
            entry["l1_diff_prev"] = diff
            prev = entry

    for entries in summaries.values():
        rows.extend(
            {k: e[k] for k in ("ladder", "level", "l1_diff_prev", "sup_entropy", "dissipation_integral", "budget")}
            for e in entries
        )
    _write_manifest(out, cfg, records[0])
    write_csv_series(
        out / "ladder.csv",
        "ladder,level,l1_diff_prev,sup_entropy,dissipation_integral,budget",
        [
            (r["ladder"], float(r["level"]), r["l1_diff_prev"], r["sup_entropy"], r["dissipation_integral"], r["budget"])
            for r in rows
        ],
    )
    if cfg.write_figures and len(rows) > 1:
        figures.ladder_figure(rows, out / "ladder.png")

    gamma_budgets = [e["budget"] for e in summaries.get("gamma", [])]
    budget_spread = (
        max(gamma_budgets) / max(min(gamma_budgets), 1e-300) if gamma_budgets else float("nan")
    )
    return {
        "levels": len(rows),
        "gamma_budget_spread": budget_spread,
        "cauchy_monotone": all(
            _nonincreasing([e["l1_diff_prev"] for e in entries][1:])
            for entries in summaries.values()
        ),
    }


def _nonincreasing(seq) -> bool:
    seq = [s for s in seq if not np.isnan(s)]
    return all(b <= a * (1 + 1e-12) for a, b in zip(seq, seq[1:]))


# ---------------------------------------------------------------------------
# particles and mean-field comparison
# ---------------------------------------------------------------------------


def _evolve_particles(cfg: ExperimentConfig, base: SolverConfig, count: int, seed: int, replica: int):
    grid = base.grid
    dt = cfg.particle_dt if cfg.particle_dt is not None else base.dt
    span = base.t_end - base.t_start
    steps = round(span / dt)
    if steps < 1 or abs(steps * dt - span) > 1e-9 * max(span, 1.0):
        raise ConfigError("particle time window must be an integer number of steps")
    density = base.initial
    if abs(float(density.values.mean()) - 1.0) > 1e-8:
        raise ConfigError("particle experiments need unit-mass initial data")
    kernel = base.kernel
    if kernel is not None and base.gamma is not None:
        kernel = mollify(kernel, base.gamma)
    positions = sample_from_density(density, count, seed, replica)
    state = ParticleState(positions, base.t_start)
    history = [state]
    for i in range(steps):
        draws = particle_draws(count, grid.dimension, i, seed, replica)
        state = step_particles(state, dt, kernel, draws)
        history.append(state)
    return history


def particles(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)
    grid = base.grid
    history = _evolve_particles(cfg, base, cfg.particle_count, seed, replica=0)
    stride = cfg.snapshot_stride
    kept = [st for i, st in enumerate(history) if i % stride == 0 or i == len(history) - 1]

    rows = []
    for st in kept:
        for i, pos in enumerate(st.positions):
            rows.append((float(st.t), i, *map(float, pos)))
    coord_cols = ",".join(f"x{a + 1}" for a in range(grid.dimension))
    write_csv_series(out / "positions.csv", f"t,i,{coord_cols}", rows)

    densities = [empirical_density(st, grid, cfg.bandwidth) for st in kept]
    fields = np.stack([d.field.values for d in densities])
    save_snapshots(out / "density_snapshots.bin", grid, fields)

    mf = mean_field_run(base)
    _write_manifest(out, cfg, mf)
    summary: dict = {
        "count": cfg.particle_count,
        "final_l1_to_mean_field": l1_distance(
            densities[-1].field, RealField(grid, mf.final_field)
        ),
    }
    if cfg.export_fluctuations:
        mf_lookup = {round(float(t), 12): s for t, s in zip(mf.snapshot_times, mf.snapshots)}
        flucts = []
        for st, dens in zip(kept, densities):
            key = round(float(st.t), 12)
            if key in mf_lookup:
                flucts.append(np.sqrt(cfg.particle_count) * (dens.field.values - mf_lookup[key]))
        if flucts:
            save_snapshots(out / "fluctuations.bin", grid, np.stack(flucts))
            summary["fluctuation_snapshots"] = len(flucts)
    if cfg.write_figures:
        figures.field_figure(densities[-1].field.values, out / "empirical_density.png", "KDE at T")
        figures.field_figure(mf.final_field, out / "mean_field.png", "mean-field at T")
    return summary


def compare(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)
    grid = base.grid
    mf = mean_field_run(base)
    target = RealField(grid, mf.final_field)

    tasks = [(count, r) for count in cfg.particle_counts for r in range(replicas)]

    def one(task):
        count, replica = task
        history = _evolve_particles(cfg, base, count, seed, replica)
        kde = empirical_density(history[-1], grid, cfg.bandwidth)
        return l1_distance(kde.field, target)

    distances = _parallel_map(one, tasks, threads)
    by_count: dict[int, list[float]] = {}
    for (count, _), dist in zip(tasks, distances):
        by_count.setdefault(count, []).append(dist)

    rows = []
    means = []
    for count in cfg.particle_counts:
        vals = by_count[count]
        mean = float(np.mean(vals))
        means.append(mean)
        rows.append((count, mean, float(np.std(vals)), len(vals)))
    _write_manifest(out, cfg, mf)
    write_csv_series(out / "compare.csv", "count,mean_l1,std_l1,replicas", rows)
    if cfg.write_figures:
        figures.compare_figure(cfg.particle_counts, means, out / "compare.png")
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    return {
        "counts": ",".join(str(c) for c in cfg.particle_counts),
        "mean_distances": ",".join(f"{m:.6g}" for m in means),
        "strictly_decreasing": decreasing,
    }


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


def kernel_audit(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    grid = cfg.build_grid()
    kern = cfg.build_kernel(grid)
    if kern is None:
        raise ConfigError("kernel-audit needs a kernel")
    if kern.exponents is None:
        raise ConfigError("kernel-audit needs declared exponents")
    report = kern.lps_report()
    from .kernels import divergence_of

    div_defect = float(np.abs(divergence_of(kern).coefficients).max())
    vmag = kern.component_fields().magnitude_squared()
    vmag = RealField(grid, np.sqrt(vmag.values))
    lines = [
        f"lps: {report.summary()}",
        f"spectral_divergence_max = {div_defect:.6e}",
    ]
    for p in (1.0, 1.5, 2.0):
        lines.append(f"lp_norm_p{p:g} = {lp_norm(vmag, p):.12g}")
    if cfg.gamma is not None:
        moll = mollify(kern, cfg.gamma)
        mmag = moll.component_fields().magnitude_squared()
        mmag = RealField(grid, np.sqrt(mmag.values))
        for p in (1.0, 1.5, 2.0):
            lines.append(f"mollified_lp_norm_p{p:g} = {lp_norm(mmag, p):.12g}")
    (out / "kernel_audit.txt").write_text("\n".join(lines) + "\n")
    save_kernel_table(kern, out / "kernel_table.txt")
    if cfg.write_figures:
        figures.kernel_spectrum_figure(kern, out / "kernel_spectrum.png")
    return {
        "a1": "pass" if report.a1_pass else "fail",
        "a2": "pass" if report.a2_pass else "fail",
        "divergence_defect": div_defect,
    }


def entropy_audit(cfg: ExperimentConfig, out: Path, seed: int, replicas: int, threads: int) -> dict:
    base = cfg.build_solver_config(seed=seed)
    rec = run(base)
    report = entropy_report(rec)
    _write_manifest(out, cfg, rec)
    report.write_csv(out / "entropy.csv")
    if cfg.write_figures:
        figures.entropy_figure(report, out / "entropy.png")
    deterministic = base.noise is None or base.noise_amplitude == 0.0
    return {
        "monotone": report.is_nonincreasing(1e-14),
        "deterministic": deterministic,
        "budget": report.budget(),
        "dissipation_integral": report.dissipation_integral,
    }


RUNNERS = {
    "simulate": simulate,
    "uniqueness": uniqueness,
    "ladder": ladder,
    "particles": particles,
    "compare": compare,
    "kernel-audit": kernel_audit,
    "entropy-audit": entropy_audit,
}


def run_experiment(
    kind: str,
    cfg: ExperimentConfig,
    out: Path,
    seed: int | None = None,
    replicas: int | None = None,
    threads: int | None = None,
) -> dict:
    if kind not in RUNNERS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    if cfg.kind != kind and cfg.kind != "simulate":
        raise ConfigError(f"config declares kind {cfg.kind!r} but {kind!r} was requested")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[kind](
        cfg,
        out,
        cfg.seed if seed is None else seed,
        cfg.replicas if replicas is None else replicas,
        cfg.threads if threads is None else threads,
    )
