"""Experiment drivers producing uniform CSV sweep reports.

Every experiment emits the same schema, one row per (sweep value,
pipeline).  Simulation sweeps fill the uncertainty and accuracy columns
from Monte Carlo trials; distribution checks fill the SNR columns and
report their goodness-of-fit through ``SweepReport.notes``.  Columns that
an experiment does not produce stay empty, and orthogonal-access rows at
N < K are emitted with the INFEASIBLE flag instead of aborting the sweep.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel import (
    aircomp_effective_snr,
    orthogonal_effective_snr,
    sample_channel,
    scaled_min_alignment,
    zf_beamformers,
)
from ..errors import ConfigError
from ..inference import PIPELINES, run_trials
from ..scenario import ScenarioConfig, build_scenario
from ..streams import EXPERIMENT_STREAMS, substream
from ..theory import (
    KAPPA_LOWER,
    asymptotic_separation,
    channel_loss_factor,
    crossing_probability,
    expected_loss_factor_bounds,
    expected_loss_r,
    ks_statistic,
    pairwise_separation_matrix,
    scaled_alignment_cdf,
    uncertainty_bounds,
    zf_norm_cdf,
)

EXPERIMENTS = tuple(sorted(EXPERIMENT_STREAMS))

CSV_COLUMNS = (
    "sweep_value",
    "pipeline",
    "mean_uncertainty",
    "uncertainty_stderr",
    "accuracy",
    "accuracy_stderr",
    "mean_effective_snr",
    "surrogate_lower",
    "surrogate_upper",
    "asymptotic_prediction",
    "feasible",
)

FEASIBLE = "ok"
INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment request."""

    scenario: ScenarioConfig
    experiment: str
    sweep_values: tuple
    pipelines: tuple = ("noiseless",)
    output_path: str = ""
    bound_c: float = 1.0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        values = tuple(self.sweep_values)
        if not values:
            raise ConfigError("sweep_values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep_values must be strictly increasing")
        object.__setattr__(self, "sweep_values", values)
        pipelines = tuple(self.pipelines)
        if not pipelines or any(p not in PIPELINES for p in pipelines):
            raise ConfigError(f"pipelines must be a nonempty subset of {PIPELINES}")
        object.__setattr__(self, "pipelines", pipelines)
        if self.bound_c <= 0:
            raise ConfigError("bound_c must be positive")


@dataclass(frozen=True)
class SweepRow:
    """One CSV row; None marks a column the experiment left empty."""

    sweep_value: float
    pipeline: str
    mean_uncertainty: float | None = None
    uncertainty_stderr: float | None = None
    accuracy: float | None = None
    accuracy_stderr: float | None = None
    mean_effective_snr: float | None = None
    surrogate_lower: float | None = None
    surrogate_upper: float | None = None
    asymptotic_prediction: float | None = None
    feasible: str = FEASIBLE


@dataclass(frozen=True)
class SweepReport:
    """All rows of one experiment plus free-form result notes."""

    experiment: str
    rows: tuple
    notes: tuple = ()

    def to_csv_text(self):
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(
                ",".join(
                    (
                        _fmt(row.sweep_value),
                        row.pipeline,
                        _fmt(row.mean_uncertainty),
                        _fmt(row.uncertainty_stderr),
                        _fmt(row.accuracy),
                        _fmt(row.accuracy_stderr),
                        _fmt(row.mean_effective_snr),
                        _fmt(row.surrogate_lower),
                        _fmt(row.surrogate_upper),
                        _fmt(row.asymptotic_prediction),
                        row.feasible,
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        path = Path(path)
        path.write_text(self.to_csv_text(), encoding="utf-8", newline="\n")
        return path


def _fmt(value):
    if value is None:
        return ""
    value = float(value)
    if not np.isfinite(value):
        return ""
    return f"{value:.9g}"


_DEFAULT_SWEEPS = {
    "sweep-k": tuple(range(1, 13)),
    "sweep-n": tuple(range(2, 21)),
    "bounds": tuple(range(1, 13)),
    "crossing": (0.25, 0.5, 0.75, 1.0, 1.21, 1.44, 1.96, 4.0),
    "aloss": (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0),
}

_DEFAULT_PIPELINES = {
    "sweep-k": ("noiseless", "aircomp"),
    "sweep-n": ("aircomp", "orthogonal", "adaptive"),
    "bounds": ("noiseless",),
    "snr-dist": ("aircomp",),
    "bnorm-dist": ("orthogonal",),
    "crossing": ("aircomp", "orthogonal", "adaptive"),
    "aloss": ("aircomp",),
}


def default_spec(experiment, config, output_path="", sweep_values=None, pipelines=None):
    """Build an :class:`ExperimentSpec` with per-experiment default grids."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    if sweep_values is None:
        if experiment == "snr-dist":
            sweep_values = (config.num_sensors,)
        elif experiment == "bnorm-dist":
            sweep_values = (config.num_antennas,)
        else:
            sweep_values = _DEFAULT_SWEEPS[experiment]
    if pipelines is None:
        pipelines = _DEFAULT_PIPELINES[experiment]
    return ExperimentSpec(
        scenario=config,
        experiment=experiment,
        sweep_values=tuple(sweep_values),
        pipelines=tuple(pipelines),
        output_path=str(output_path) if output_path else f"{experiment}.csv",
    )


def run_experiment(spec, workers=1, paper_scale=False):
    """Execute an experiment spec, write its CSV, and return the report.

    ``workers`` parallelizes Monte Carlo trials; results are bit-identical
    for every worker count.  ``paper_scale`` enlarges grids or trial
    counts toward publication scale instead of desk scale.
    """
    runner = {
        "sweep-k": _run_simulation_sweep,
        "sweep-n": _run_simulation_sweep,
        "bounds": _run_simulation_sweep,
        "snr-dist": _run_snr_dist,
        "bnorm-dist": _run_bnorm_dist,
        "crossing": _run_crossing,
        "aloss": _run_aloss,
    }[spec.experiment]
    rows, notes = runner(spec, workers=workers, paper_scale=paper_scale)
    report = SweepReport(experiment=spec.experiment, rows=tuple(rows), notes=tuple(notes))
    if spec.output_path:
        report.write_csv(spec.output_path)
    return report


def _trials_for(spec, paper_scale):
    trials = spec.scenario.mc_trials
    return trials * 10 if paper_scale else trials


def _point_scenario(spec, value):
    cfg = spec.scenario
    if spec.experiment in ("sweep-k", "bounds"):
        cfg = dataclasses.replace(cfg, num_sensors=int(value))
    elif spec.experiment == "sweep-n":
        cfg = dataclasses.replace(cfg, num_antennas=int(value))
    return build_scenario(cfg)


def _run_simulation_sweep(spec, workers, paper_scale):
    trials = _trials_for(spec, paper_scale)
    stream_id = EXPERIMENT_STREAMS[spec.experiment]
    rows = []
    for point, value in enumerate(spec.sweep_values):
        scen = _point_scenario(spec, value)
        L = scen.num_classes
        K = scen.num_sensors
        xi = asymptotic_separation(scen)
        for pipeline in spec.pipelines:
            if pipeline == "orthogonal" and scen.num_antennas < scen.num_sensors:
                rows.append(
                    SweepRow(sweep_value=value, pipeline=pipeline, feasible=INFEASIBLE)
                )
                continue
            batch = run_trials(
                scen,
                pipeline,
                trials,
                stream_id=stream_id,
                point_index=point,
                workers=workers,
            )
            mean_snr = batch.mean_effective_snr
            if pipeline == "noiseless" or not np.isfinite(mean_snr):
                snr_arg, mean_snr_col, loss = None, None, 1.0
            else:
                snr_arg, mean_snr_col = mean_snr, mean_snr
                loss = channel_loss_factor(scen, mean_snr)
            pw = pairwise_separation_matrix(scen, snr=snr_arg)
            lower, upper = uncertainty_bounds(pw, spec.bound_c, K, scen.feature_dim)
            rows.append(
                SweepRow(
                    sweep_value=value,
                    pipeline=pipeline,
                    mean_uncertainty=batch.mean_entropy,
                    uncertainty_stderr=batch.entropy_stderr,
                    accuracy=batch.accuracy,
                    accuracy_stderr=batch.accuracy_stderr,
                    mean_effective_snr=mean_snr_col,
                    surrogate_lower=lower,
                    surrogate_upper=upper,
                    asymptotic_prediction=(L - 1) * np.exp(-KAPPA_LOWER * xi * loss * K),
                )
            )
    return rows, ()


def run_snr_distribution_check(num_sensors, omega, draws, rng, threshold=0.03):
    """Sample the K-scaled weakest alignment and test it against its
    limiting exponential law.  Returns ``(ks, passed)``."""
    if draws < 10:
        raise ValueError("need at least 10 draws")
    num_antennas = max(1, round(omega * num_sensors))
    samples = np.empty(draws)
    for i in range(draws):
        ch = sample_channel(num_antennas, num_sensors, rng)
        samples[i] = scaled_min_alignment(ch)
    ks = ks_statistic(samples, scaled_alignment_cdf(omega))
    return ks, ks < threshold


def run_zf_norm_distribution_check(num_antennas, num_sensors, draws, rng, threshold=0.02):
    """Sample one zero-forcing beam norm per draw and test it against the
    scaled inverse chi-square law.  Returns ``(ks, mean_norm, passed)``."""
    if draws < 10:
        raise ValueError("need at least 10 draws")
    samples = np.empty(draws)
    for i in range(draws):
        ch = sample_channel(num_antennas, num_sensors, rng)
        B = zf_beamformers(ch)
        samples[i] = np.sum(np.abs(B[:, 0]) ** 2)
    ks = ks_statistic(samples, zf_norm_cdf(num_antennas, num_sensors))
    return ks, float(samples.mean()), ks < threshold


def _run_snr_dist(spec, workers, paper_scale):
    del workers  # channel-only loops run single-process; results match any count
    cfg = spec.scenario
    omega = cfg.num_antennas / cfg.num_sensors
    stream_id = EXPERIMENT_STREAMS["snr-dist"]
    values = spec.sweep_values
    if paper_scale:
        values = tuple(values) + tuple(2 * v for v in values)
    rows, notes = [], []
    for point, K in enumerate(values):
        K = int(K)
        N = max(1, round(omega * K))
        scen = build_scenario(
            dataclasses.replace(cfg, num_sensors=K, num_antennas=N)
        )
        gamma = np.inf if scen.sigma_sq == 0 else 1.0 / scen.sigma_sq
        draws = cfg.mc_trials
        zeta = np.empty(draws)
        for t in range(draws):
            rng = substream(cfg.master_seed, stream_id, point, t)
            ch = sample_channel(N, K, rng)
            zeta[t] = scaled_min_alignment(ch)
        ks = ks_statistic(zeta, scaled_alignment_cdf(omega))
        scale = 2.0 * K * gamma / scen.nu_sq
        rows.append(
            SweepRow(
                sweep_value=K,
                pipeline="aircomp",
                mean_effective_snr=scale * zeta.mean(),
                asymptotic_prediction=scale * (1.0 + np.sqrt(omega)) ** 2,
            )
        )
        notes.append(f"K={K} omega={omega:g}: KS={ks:.4f} (threshold 0.03)")
    return rows, notes


def _run_bnorm_dist(spec, workers, paper_scale):
    del workers
    cfg = spec.scenario
    K = cfg.num_sensors
    stream_id = EXPERIMENT_STREAMS["bnorm-dist"]
    values = spec.sweep_values
    if paper_scale:
        values = tuple(values) + tuple(2 * v for v in values)
    rows, notes = [], []
    for point, N in enumerate(values):
        N = int(N)
        if N < K:
            rows.append(SweepRow(sweep_value=N, pipeline="orthogonal", feasible=INFEASIBLE))
            notes.append(f"N={N}: infeasible (K={K})")
            continue
        scen = build_scenario(dataclasses.replace(cfg, num_antennas=N))
        gamma = np.inf if scen.sigma_sq == 0 else 1.0 / scen.sigma_sq
        draws = cfg.mc_trials
        norms = np.empty(draws)
        snrs = np.empty(draws)
        for t in range(draws):
            rng = substream(cfg.master_seed, stream_id, point, t)
            ch = sample_channel(N, K, rng)
            B = zf_beamformers(ch)
            norms[t] = np.sum(np.abs(B[:, 0]) ** 2)
            snrs[t] = gamma * K**2 / (scen.nu_sq * np.sum(np.abs(B) ** 2))
        ks = ks_statistic(norms, zf_norm_cdf(N, K))
        prediction = None
        if N > K:
            prediction = gamma * K * (N - K) / scen.nu_sq
        rows.append(
            SweepRow(
                sweep_value=N,
                pipeline="orthogonal",
                mean_effective_snr=float(snrs.mean()),
                asymptotic_prediction=prediction,
            )
        )
        notes.append(f"N={N}: KS={ks:.4f} (threshold 0.02), mean norm {norms.mean():.6g}")
    return rows, notes


def _run_crossing(spec, workers, paper_scale):
    del workers
    cfg = spec.scenario
    K = cfg.num_sensors
    stream_id = EXPERIMENT_STREAMS["crossing"]
    draws = _trials_for(spec, paper_scale)
    rows, notes = [], []
    for point, omega in enumerate(spec.sweep_values):
        N = max(1, round(omega * K))
        scen = build_scenario(dataclasses.replace(cfg, num_antennas=N))
        air = np.empty(draws)
        aoa = np.full(draws, np.nan)
        feasible = N >= K
        for t in range(draws):
            rng = substream(cfg.master_seed, stream_id, point, t)
            ch = sample_channel(N, K, rng)
            air[t] = aircomp_effective_snr(ch, scen).gamma_air
            if feasible:
                aoa[t], _ = orthogonal_effective_snr(ch, scen)
        if feasible:
            wins = (air >= aoa).astype(float)
            prob = float(wins.mean())
            prob_se = float(wins.std(ddof=1) / np.sqrt(draws)) if draws > 1 else 0.0
            adaptive_snr = float(np.maximum(air, aoa).mean())
        else:
            prob, prob_se = 1.0, 0.0
            adaptive_snr = float(air.mean())
        predicted = crossing_probability(K, omega)
        rows.append(
            SweepRow(
                sweep_value=omega,
                pipeline="aircomp",
                accuracy=prob,
                accuracy_stderr=prob_se,
                mean_effective_snr=float(air.mean()),
                asymptotic_prediction=predicted,
            )
        )
        if feasible:
            rows.append(
                SweepRow(
                    sweep_value=omega,
                    pipeline="orthogonal",
                    accuracy=prob,
                    accuracy_stderr=prob_se,
                    mean_effective_snr=float(aoa.mean()),
                    asymptotic_prediction=predicted,
                )
            )
        else:
            rows.append(
                SweepRow(sweep_value=omega, pipeline="orthogonal", feasible=INFEASIBLE)
            )
        rows.append(
            SweepRow(
                sweep_value=omega,
                pipeline="adaptive",
                accuracy=prob,
                accuracy_stderr=prob_se,
                mean_effective_snr=adaptive_snr,
                asymptotic_prediction=predicted,
            )
        )
        notes.append(
            f"omega={omega:g}: P(air wins)={prob:.4f}, asymptotic {predicted:.4f}"
        )
    return rows, notes


def _loss_profile(scenario):
    """Precompute the per-draw loss factor as a function of effective SNR.

    Same algebra as :func:`isea_sim.theory.channel_loss_factor`, with the
    scenario-dependent pieces hoisted out of the per-draw loop.
    """
    from ..theory import separation_summary

    summary = separation_summary(scenario)
    d_bar = summary.mean_separation
    V = scenario.C_evecs
    core = V.T @ scenario.C_inv @ scenario.P_bar @ summary.separation_matrix
    core = core @ scenario.P_bar @ scenario.C_inv @ V
    weights = np.diag(core).copy()
    inv_evals = 1.0 / scenario.C_evals
    K = scenario.num_sensors

    def loss(snr):
        if snr == np.inf:
            return 1.0
        if snr <= 0:
            return 0.0
        correction = float(np.sum(weights / (inv_evals + snr / K)))
        return (d_bar - correction) / d_bar

    return loss


def _run_aloss(spec, workers, paper_scale):
    del workers
    cfg = spec.scenario
    omega = cfg.num_antennas / cfg.num_sensors
    stream_id = EXPERIMENT_STREAMS["aloss"]
    draws = _trials_for(spec, paper_scale)
    rows, notes = [], []
    for point, gamma_lin in enumerate(spec.sweep_values):
        if gamma_lin <= 0:
            raise ConfigError("aloss sweep values are linear SNRs and must be positive")
        scen = build_scenario(
            dataclasses.replace(cfg, transmit_snr_db=10.0 * np.log10(gamma_lin))
        )
        loss = _loss_profile(scen)
        samples = np.empty(draws)
        snrs = np.empty(draws)
        for t in range(draws):
            rng = substream(cfg.master_seed, stream_id, point, t)
            ch = sample_channel(scen.num_antennas, scen.num_sensors, rng)
            snr = aircomp_effective_snr(ch, scen).gamma_air
            snrs[t] = snr
            samples[t] = loss(snr)
        e1_form, log_form = expected_loss_factor_bounds(expected_loss_r(scen, omega))
        rows.append(
            SweepRow(
                sweep_value=gamma_lin,
                pipeline="aircomp",
                accuracy=float(samples.mean()),
                accuracy_stderr=float(samples.std(ddof=1) / np.sqrt(draws))
                if draws > 1
                else 0.0,
                mean_effective_snr=float(snrs.mean()),
                surrogate_lower=log_form,
                surrogate_upper=e1_form,
                asymptotic_prediction=e1_form,
            )
        )
        notes.append(
            f"gamma={gamma_lin:g}: mean loss {samples.mean():.4f}, "
            f"E1-form bound {e1_form:.4f}"
        )
    return rows, notes
