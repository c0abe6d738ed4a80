"""Config-driven experiment runner: single runs, axis sweeps, verification suites.

Determinism contract: identical config + seeds produce byte-identical CSV
output.  All randomness flows through Philox streams derived from the run
seeds by the documented hash in :mod:`polarmuon.matcore`; float columns are
written with ``repr`` (shortest exact decimal).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import matcore, noise as noise_mod, optimizer as opt, polar as polar_mod
from .config import RunConfig
from .errors import ConfigError
from .matcore import RngStream, derive_stream_id
from .sketch import randomized_polar
from .verify import StepFlopsConfig, measured_step_flops

__all__ = ["SeedResult", "RunReport", "run_experiment", "sweep", "worker_count"]

# Stream-id tags: every consumer of randomness gets its own Philox stream.
_TAG_NOISE = 0x01
_TAG_SKETCH = 0x02
_TAG_INIT = 0x03
_CALIB_SEED = 0xCA11B

CSV_COLUMNS = ("k", "f", "grad_norm", "cum_flops", "gamma_hat", "nu_hat")
SUMMARY_COLUMNS = ("seed", "steps", "min_grad_norm", "final_f", "cum_flops", "aborted")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("POLARMUON_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass
class SeedResult:
    seed: int
    steps: int
    min_grad_norm: float
    final_f: float
    cum_flops: int
    aborted: bool
    rows: list


@dataclass
class RunReport:
    config: RunConfig
    seed_results: list
    initial_grad_norm: float

    @property
    def aborted(self) -> bool:
        return any(r.aborted for r in self.seed_results)

    @property
    def mean_min_grad_norm(self) -> float:
        return float(np.mean([r.min_grad_norm for r in self.seed_results]))

    @property
    def std_min_grad_norm(self) -> float:
        return float(np.std([r.min_grad_norm for r in self.seed_results]))

    @property
    def cum_flops(self) -> int:
        return self.seed_results[0].cum_flops if self.seed_results else 0


def _resolve_schedule(o) -> tuple[float, float]:
    if o.schedule == "manual":
        return o.eta, o.beta
    if o.schedule == "corollary1":
        s = opt.corollary1_schedule(o.K)
    elif o.schedule == "theorem1":
        s = opt.theorem1_schedule(o.K, o.alpha)
    else:
        raise ConfigError(f"optimizer.schedule: unknown source {o.schedule!r}")
    return s.eta, s.beta


def _step_flops_config(cfg: RunConfig, shape: tuple[int, int]) -> StepFlopsConfig:
    o = cfg.optimizer
    m, n = shape
    if o.kind in ("sgd_nesterov", "adamw"):
        return StepFlopsConfig(optimizer=o.kind, m=m, n=n)
    if o.kind != "muon":
        raise ConfigError(f"optimizer.kind: unknown kind {o.kind!r}")
    if cfg.polar.solver == "exact":
        return StepFlopsConfig("muon", m, n, momentum=o.momentum, polar="exact")
    if cfg.sketch is not None:
        return StepFlopsConfig(
            "muon",
            m,
            n,
            momentum=o.momentum,
            polar="randomized",
            q=cfg.polar.q,
            ell=cfg.sketch.ell,
            h=cfg.sketch.h,
        )
    return StepFlopsConfig("muon", m, n, momentum=o.momentum, polar="polynomial", q=cfg.polar.q)


def _make_polar(cfg: RunConfig, sketch_rng: RngStream | None):
    """Return polar(matrix) -> (direction, alignment_ratio, op_norm)."""
    pcfg = cfg.polar.build()

    def call(m):
        if pcfg.solver == "exact":
            out = polar_mod.exact_polar(m)
        elif cfg.sketch is not None:
            out = randomized_polar(m, cfg.sketch, pcfg, sketch_rng)
        else:
            out = polar_mod.inexact_polar(m, pcfg)
        return out

    if not cfg.verify:
        return lambda m: (call(m), None, None)

    def call_verified(m):
        out = call(m)
        ratio = matcore.inner_product(m, out) / matcore.nuclear_norm(m)
        return out, 1.0 - ratio, matcore.operator_norm(out) - 1.0

    return call_verified


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _run_seed(cfg: RunConfig, seed: int, model, out_path: Path | None) -> SeedResult:
    problem = cfg.problem.build()
    shape = cfg.problem.param_shape
    eta, beta = _resolve_schedule(cfg.optimizer)
    o = cfg.optimizer

    noise_rng = RngStream(seed, derive_stream_id(_TAG_NOISE))
    sketch_rng = RngStream(seed, derive_stream_id(_TAG_SKETCH))
    init_rng = RngStream(seed, derive_stream_id(_TAG_INIT))

    if cfg.problem.kind == "factorization":
        x = init_rng.normal(shape)
    else:
        x = np.zeros(shape)

    if o.kind == "muon":
        state = opt.MuonState.initial(x, kind=o.momentum, beta=beta, eta=eta)
    elif o.kind == "sgd_nesterov":
        state = opt.SgdState.initial(x, lr=eta, momentum=beta)
    elif o.kind == "adamw":
        state = opt.AdamWState.initial(x, lr=eta)
    else:
        raise ConfigError(f"optimizer.kind: unknown kind {o.kind!r}")

    polar = _make_polar(cfg, sketch_rng)
    step_flops = measured_step_flops(_step_flops_config(cfg, shape))

    rows = []
    min_grad = float("inf")
    cum_flops = 0
    final_f = float("nan")
    aborted = False

    fh = None
    if out_path is not None:
        fh = open(out_path, "w", encoding="utf-8", newline="\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
    try:
        for k in range(o.K):
            if not np.all(np.isfinite(state.x)):
                aborted = True
                break
            f_val = problem.value(state.x)
            if not np.isfinite(f_val):
                aborted = True
                break
            grad = problem.gradient(state.x)
            gnorm = float(np.linalg.norm(grad))
            min_grad = min(min_grad, gnorm)
            final_f = f_val

            gamma_k = nu_k = None
            g = noise_mod.gradient_oracle(problem, state.x, o.B, model, noise_rng)
            if o.kind == "muon":
                captured = {}

                def polar_capture(m, _c=captured, _p=polar):
                    out, gam, nu = _p(m)
                    _c["gamma"], _c["nu"] = gam, nu
                    return out

                state = opt.muon_step(state, g, polar_capture)
                gamma_k = captured.get("gamma")
                nu_k = captured.get("nu")
            else:
                state = opt.baseline_step(o.kind, state, g)
            if cfg.problem.kind == "factorization":
                xproj, _clipped = problem.project(state.x)
                state = replace(state, x=xproj)
            cum_flops += step_flops

            row = (k, f_val, gnorm, cum_flops, gamma_k, nu_k)
            rows.append(row)
            if fh is not None:
                fh.write(",".join(_csv_cell(v) for v in row) + "\n")
    finally:
        if fh is not None:
            fh.close()

    return SeedResult(
        seed=seed,
        steps=len(rows),
        min_grad_norm=min_grad,
        final_f=final_f,
        cum_flops=cum_flops,
        aborted=aborted,
        rows=rows,
    )


def _calibrated_model(cfg: RunConfig):
    model = cfg.noise.build()
    if (model.sigma0 > 0 or model.sigma1 > 0) and not model.calibrated:
        model = noise_mod.calibrate(
            model, cfg.problem.param_shape, RngStream(_CALIB_SEED)
        )
    return model


def run_experiment(cfg: RunConfig, write_files: bool = True) -> RunReport:
    """Execute K optimizer steps per seed; write per-seed CSV traces, a
    summary CSV, and plot-ready data.  Returns the aggregated report."""
    out_dir = Path(cfg.output_dir)
    if write_files:
        out_dir.mkdir(parents=True, exist_ok=True)
    model = _calibrated_model(cfg)

    problem = cfg.problem.build()
    if cfg.problem.kind == "factorization":
        x0 = RngStream(cfg.seeds[0], derive_stream_id(_TAG_INIT)).normal(
            cfg.problem.param_shape
        )
    else:
        x0 = np.zeros(cfg.problem.param_shape)
    initial_grad = float(np.linalg.norm(problem.gradient(x0)))

    def job(seed):
        path = out_dir / f"run_seed{seed}.csv" if write_files else None
        return _run_seed(cfg, seed, model, path)

    workers = worker_count()
    if workers > 1 and len(cfg.seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, cfg.seeds))
    else:
        results = [job(s) for s in cfg.seeds]

    report = RunReport(config=cfg, seed_results=results, initial_grad_norm=initial_grad)
    if write_files:
        _write_summary(report, out_dir)
        _write_plot_data(report, out_dir)
    return report


def _write_summary(report: RunReport, out_dir: Path) -> None:
    with open(out_dir / "run.summary.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in report.seed_results:
            f.write(
                ",".join(
                    _csv_cell(v)
                    for v in (
                        r.seed,
                        r.steps,
                        r.min_grad_norm,
                        r.final_f,
                        r.cum_flops,
                        int(r.aborted),
                    )
                )
                + "\n"
            )
        f.write(
            f"aggregate,,{_csv_cell(report.mean_min_grad_norm)},"
            f"{_csv_cell(report.std_min_grad_norm)},,\n"
        )


def _write_plot_data(report: RunReport, out_dir: Path) -> None:
    """Two-column (step, mean grad norm) data file plus a gnuplot stub."""
    counts = [r.steps for r in report.seed_results]
    if not counts or min(counts) == 0:
        return
    n = min(counts)
    with open(out_dir / "grad_norm_vs_step.dat", "w", encoding="utf-8", newline="\n") as f:
        for k in range(n):
            mean_g = float(
                np.mean([r.rows[k][2] for r in report.seed_results])
            )
            f.write(f"{k} {repr(mean_g)}\n")
    with open(out_dir / "plot.gp", "w", encoding="utf-8", newline="\n") as f:
        f.write(
            "set logscale y\n"
            "set xlabel 'step'\n"
            "set ylabel 'gradient Frobenius norm'\n"
            "plot 'grad_norm_vs_step.dat' using 1:2 with lines title 'mean over seeds'\n"
        )


SWEEP_AXES = ("s", "q", "K", "alpha", "B")


def _apply_axis(cfg: RunConfig, axis: str, value) -> RunConfig:
    if axis == "s":
        if cfg.sketch is None:
            raise ConfigError("sweep axis 's' requires a [sketch] section")
        return replace(cfg, sketch=replace(cfg.sketch, s=int(value)))
    if axis == "q":
        return replace(cfg, polar=replace(cfg.polar, q=int(value)))
    if axis == "K":
        return replace(cfg, optimizer=replace(cfg.optimizer, K=int(value)))
    if axis == "alpha":
        # Tail sweep: retunes both the noise model (forcing recalibration)
        # and the theorem-1 schedule exponents.
        new_noise = replace(
            cfg.noise,
            alpha=float(value),
            tail_exponent=None,
            scale0=None,
            scale1=None,
            calib_shape=None,
            calib_rel_tol=None,
        )
        return replace(
            cfg,
            noise=new_noise,
            optimizer=replace(cfg.optimizer, alpha=float(value)),
        )
    if axis == "B":
        return replace(cfg, optimizer=replace(cfg.optimizer, B=int(value)))
    raise ConfigError(f"sweep axis: unknown axis {axis!r} (choose from {SWEEP_AXES})")


@dataclass
class SweepCell:
    value: object
    report: RunReport | None
    error: str | None = None


def sweep(template: RunConfig, axis: str, values, write_files: bool = True) -> list:
    """One run per axis value; failed cells are marked and the sweep continues.

    Emits a long-form CSV keyed by axis value; the K axis additionally emits
    (log K, log mean-min-grad-norm) pairs for slope inspection.
    """
    out_dir = Path(template.output_dir)
    if write_files:
        out_dir.mkdir(parents=True, exist_ok=True)

    def job(value):
        try:
            cell_cfg = _apply_axis(template, axis, value)
            cell_cfg = replace(
                cell_cfg, output_dir=str(out_dir / f"{axis}_{value}")
            )
            return SweepCell(value=value, report=run_experiment(cell_cfg, write_files))
        except Exception as e:  # cell failures must not kill the sweep
            return SweepCell(value=value, report=None, error=str(e))

    workers = worker_count()
    if workers > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(job, values))
    else:
        cells = [job(v) for v in values]

    if write_files:
        with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="\n") as f:
            f.write("axis,value,seed,min_grad_norm,final_f,cum_flops,failed\n")
            for cell in cells:
                if cell.report is None:
                    f.write(f"{axis},{cell.value},,,,,1\n")
                    continue
                for r in cell.report.seed_results:
                    f.write(
                        f"{axis},{cell.value},{r.seed},{_csv_cell(r.min_grad_norm)},"
                        f"{_csv_cell(r.final_f)},{r.cum_flops},{int(r.aborted)}\n"
                    )
        if axis == "K":
            with open(out_dir / "sweep_loglog.dat", "w", encoding="utf-8", newline="\n") as f:
                for cell in cells:
                    if cell.report is None:
                        continue
                    f.write(
                        f"{repr(float(np.log(float(cell.value))))} "
                        f"{repr(float(np.log(cell.report.mean_min_grad_norm)))}\n"
                    )
    return cells
