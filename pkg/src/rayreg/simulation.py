"""Monte Carlo evaluation of the plain and robust estimators.

Three experiments, all paired (both estimators see the identical signal
in every replication):

* `run_table`      bias / mean-square-error tables over (N, epsilon) cells
* `breakdown_curve` total relative bias as the outlier count grows
* `sensitivity_curve` mean absolute sensitivity (MASC) vs outlier value

Covariates are drawn once per scenario and held fixed across
replications; each replication derives its own generator from the master
seed through a splitmix64 mixing function, so replications can run in any
order (or in parallel processes) and still reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import distribution
from .estimation import RobustConfig, fit_both
from .regression import DesignMatrix, ModelSpec, get_link

__all__ = [
    "mix_seed",
    "rng_for",
    "ScenarioConfig",
    "MonteCarloReport",
    "ScenarioReport",
    "BreakdownCurve",
    "SensitivityCurve",
    "scenario_design",
    "simulate_signal",
    "run_table",
    "breakdown_curve",
    "sensitivity_curve",
    "format_table",
]

_MASK64 = (1 << 64) - 1

# Stream tags keep covariate draws, replication draws, and scene synthesis
# on disjoint substreams of one master seed.
_COVARIATE_STREAM = 0x636F76  # "cov"
_REPLICATION_STREAM = 0x726570  # "rep"


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(master_seed: int, *indices: int) -> int:
    """Deterministically mix a master seed with stream indices.

    Chained splitmix64 finalizers: collision-free in the last index for a
    fixed prefix, well spread even for consecutive indices.
    """
    h = _splitmix64(int(master_seed) & _MASK64)
    for idx in indices:
        h = _splitmix64(h ^ (int(idx) & _MASK64))
    return h


def rng_for(master_seed: int, *indices: int) -> np.random.Generator:
    """Independent generator for one (master seed, stream) combination."""
    return np.random.default_rng(mix_seed(master_seed, *indices))


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: true model, contamination, and run bookkeeping."""

    beta_true: tuple
    n_obs: int
    epsilon: float = 0.0
    outlier_value: float = 10.0
    replications: int = 1000
    delta: float = 0.001
    master_seed: int = 0
    link: str = "log"
    reweight_iterations: int = 1
    max_iter: int = 500
    grad_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "beta_true", tuple(float(b) for b in self.beta_true))
        if len(self.beta_true) < 1:
            raise ValueError("beta_true must contain at least the intercept")
        if self.n_obs <= len(self.beta_true):
            raise ValueError("n_obs must exceed the number of parameters")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.outlier_value <= 0.0:
            raise ValueError("outlier_value must be positive")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        get_link(self.link)

    @property
    def n_params(self) -> int:
        return len(self.beta_true)

    @property
    def n_outliers(self) -> int:
        return int(math.floor(self.epsilon * self.n_obs))

    def robust_config(self) -> RobustConfig:
        return RobustConfig(
            delta=self.delta,
            reweight_iterations=self.reweight_iterations,
            max_iter=self.max_iter,
            grad_tol=self.grad_tol,
        )


def scenario_design(cfg: ScenarioConfig) -> DesignMatrix:
    """Intercept plus uniform(0,1) covariates, drawn once per scenario."""
    rng = rng_for(cfg.master_seed, _COVARIATE_STREAM, cfg.n_obs)
    k = cfg.n_params
    X = np.ones((cfg.n_obs, k))
    if k > 1:
        X[:, 1:] = rng.random((cfg.n_obs, k - 1))
    return DesignMatrix(X, ("intercept",) + tuple(f"x{i}" for i in range(2, k + 1)))


def _true_mean(cfg: ScenarioConfig, design: DesignMatrix) -> np.ndarray:
    return get_link(cfg.link).inverse(design.X @ np.asarray(cfg.beta_true))


def _clean_signal_and_perm(cfg, rep_index, mu):
    """Clean inversion sample plus the outlier-position permutation."""
    rng = rng_for(cfg.master_seed, _REPLICATION_STREAM, rep_index)
    y = distribution.quantile(rng.random(cfg.n_obs), mu)
    perm = rng.permutation(cfg.n_obs)
    return y, perm


def simulate_signal(cfg: ScenarioConfig, rep_index: int, design: DesignMatrix | None = None):
    """One replication's signal: inversion draws with outliers written in.

    Returns ``(y, outlier_positions)``; ``floor(epsilon * N)`` positions
    are sampled without replacement and overwritten with
    ``cfg.outlier_value``.  Deterministic in ``(master_seed, rep_index)``.
    """
    design = design or scenario_design(cfg)
    mu = _true_mean(cfg, design)
    y, perm = _clean_signal_and_perm(cfg, rep_index, mu)
    positions = perm[: cfg.n_outliers]
    y[positions] = cfg.outlier_value
    return y, positions


@dataclass(frozen=True)
class MonteCarloReport:
    """Moments of one estimator over the converged replications of a cell."""

    estimator: str
    beta_true: tuple
    mean: tuple
    rb_percent: tuple
    mse: tuple
    absolute_total_rb: float
    absolute_total_mse: float
    convergence_failures: int
    n_used: int

    def as_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "beta_true": list(self.beta_true),
            "mean": list(self.mean),
            "rb_percent": list(self.rb_percent),
            "mse": list(self.mse),
            "absolute_total_rb": self.absolute_total_rb,
            "absolute_total_mse": self.absolute_total_mse,
            "convergence_failures": self.convergence_failures,
            "n_used": self.n_used,
        }


@dataclass(frozen=True)
class ScenarioReport:
    config: ScenarioConfig
    mle: MonteCarloReport
    wmle: MonteCarloReport

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "beta_true": list(cfg.beta_true),
                "n_obs": cfg.n_obs,
                "epsilon": cfg.epsilon,
                "outlier_value": cfg.outlier_value,
                "replications": cfg.replications,
                "delta": cfg.delta,
                "master_seed": cfg.master_seed,
                "link": cfg.link,
                "reweight_iterations": cfg.reweight_iterations,
            },
            "mle": self.mle.as_dict(),
            "wmle": self.wmle.as_dict(),
        }


def _summarize(estimator, beta_true, estimates) -> MonteCarloReport:
    """Aggregate replication estimates; NaN rows mark diverged fits."""
    beta = np.asarray(beta_true)
    ok = ~np.isnan(estimates[:, 0])
    used = estimates[ok]
    mean = used.mean(axis=0)
    rb = 100.0 * (mean - beta) / beta
    mse = np.mean((used - beta) ** 2, axis=0)
    return MonteCarloReport(
        estimator=estimator,
        beta_true=tuple(beta),
        mean=tuple(float(v) for v in mean),
        rb_percent=tuple(float(v) for v in rb),
        mse=tuple(float(v) for v in mse),
        absolute_total_rb=float(np.sum(np.abs(rb))),
        absolute_total_mse=float(np.sum(mse)),
        convergence_failures=int(np.sum(~ok)),
        n_used=int(np.sum(ok)),
    )


def _table_chunk(cfg: ScenarioConfig, rep_range: tuple) -> tuple:
    design = scenario_design(cfg)
    mu = _true_mean(cfg, design)
    rcfg = cfg.robust_config()
    n = rep_range[1] - rep_range[0]
    k = cfg.n_params
    out = {"mle": np.full((n, k), np.nan), "wmle": np.full((n, k), np.nan)}
    for i, rep in enumerate(range(*rep_range)):
        y, perm = _clean_signal_and_perm(cfg, rep, mu)
        y[perm[: cfg.n_outliers]] = cfg.outlier_value
        spec = ModelSpec(design=design, link=cfg.link, response=y)
        mle, wmle = fit_both(spec, rcfg)
        if mle.converged:
            out["mle"][i] = mle.beta_hat
        if wmle.converged:
            out["wmle"][i] = wmle.beta_hat
    return out["mle"], out["wmle"]


def _chunks(total: int, workers: int):
    per = max(1, math.ceil(total / max(1, workers)))
    return [(lo, min(lo + per, total)) for lo in range(0, total, per)]


def _map_chunks(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _run_cell(cfg: ScenarioConfig, workers: int) -> ScenarioReport:
    jobs = [(cfg, rng) for rng in _chunks(cfg.replications, workers)]
    parts = _map_chunks(_table_chunk, jobs, workers)
    mle_est = np.vstack([p[0] for p in parts])
    wmle_est = np.vstack([p[1] for p in parts])
    return ScenarioReport(
        config=cfg,
        mle=_summarize("MLE", cfg.beta_true, mle_est),
        wmle=_summarize("WMLE", cfg.beta_true, wmle_est),
    )


def run_table(cfgs, workers: int = 1) -> list[ScenarioReport]:
    """Fit both estimators over every cell of a scenario grid.

    Diverged replications are excluded from the moments and surface in
    ``convergence_failures``; a failing replication never aborts the grid.
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise ValueError("scenario grid is empty")
    return [_run_cell(cfg, workers) for cfg in cfgs]


@dataclass(frozen=True)
class BreakdownCurve:
    """Total |RB%| of each estimator as a function of the outlier count."""

    counts: tuple
    mle_total_rb: tuple
    wmle_total_rb: tuple
    convergence_failures: int
    config: ScenarioConfig = field(repr=False, default=None)

    def to_csv(self) -> str:
        lines = ["outliers,mle_total_rb,wmle_total_rb"]
        for c, m, w in zip(self.counts, self.mle_total_rb, self.wmle_total_rb):
            lines.append(f"{c},{m!r},{w!r}")
        return "\n".join(lines) + "\n"


def _breakdown_chunk(cfg: ScenarioConfig, counts: tuple, rep_range: tuple):
    design = scenario_design(cfg)
    mu = _true_mean(cfg, design)
    rcfg = cfg.robust_config()
    n = rep_range[1] - rep_range[0]
    k = cfg.n_params
    mle_est = np.full((len(counts), n, k), np.nan)
    wmle_est = np.full((len(counts), n, k), np.nan)
    for i, rep in enumerate(range(*rep_range)):
        y_clean, perm = _clean_signal_and_perm(cfg, rep, mu)
        for ci, count in enumerate(counts):
            y = y_clean.copy()
            y[perm[:count]] = cfg.outlier_value
            spec = ModelSpec(design=design, link=cfg.link, response=y)
            mle, wmle = fit_both(spec, rcfg)
            if mle.converged:
                mle_est[ci, i] = mle.beta_hat
            if wmle.converged:
                wmle_est[ci, i] = wmle.beta_hat
    return mle_est, wmle_est


def breakdown_curve(cfg: ScenarioConfig, outlier_counts, workers: int = 1) -> BreakdownCurve:
    """Sweep the number of injected outliers at fixed outlier value.

    Outlier positions are nested across counts within a replication (the
    first ``count`` entries of one permutation), so the curve varies only
    through the contamination level, not through position re-draws.
    """
    counts = tuple(int(c) for c in outlier_counts)
    if any(c < 0 for c in counts):
        raise ValueError("outlier counts must be nonnegative")
    if max(counts) >= cfg.n_obs:
        raise ValueError("outlier count must stay below the signal length")
    jobs = [(cfg, counts, rng) for rng in _chunks(cfg.replications, workers)]
    parts = _map_chunks(_breakdown_chunk, jobs, workers)
    mle_est = np.concatenate([p[0] for p in parts], axis=1)
    wmle_est = np.concatenate([p[1] for p in parts], axis=1)
    beta = np.asarray(cfg.beta_true)
    totals = {"mle": [], "wmle": []}
    failures = 0
    for key, est in (("mle", mle_est), ("wmle", wmle_est)):
        for ci in range(len(counts)):
            ok = ~np.isnan(est[ci, :, 0])
            failures += int(np.sum(~ok))
            rb = 100.0 * (est[ci][ok].mean(axis=0) - beta) / beta
            totals[key].append(float(np.sum(np.abs(rb))))
    return BreakdownCurve(
        counts=counts,
        mle_total_rb=tuple(totals["mle"]),
        wmle_total_rb=tuple(totals["wmle"]),
        convergence_failures=failures,
        config=cfg,
    )


@dataclass(frozen=True)
class SensitivityCurve:
    """Mean absolute sensitivity (MASC) per outlier value and estimator."""

    values: tuple
    mle_masc: tuple
    wmle_masc: tuple
    convergence_failures: int
    config: ScenarioConfig = field(repr=False, default=None)

    def to_csv(self) -> str:
        lines = ["outlier_value,mle_masc,wmle_masc"]
        for v, m, w in zip(self.values, self.mle_masc, self.wmle_masc):
            lines.append(f"{v!r},{m!r},{w!r}")
        return "\n".join(lines) + "\n"


def _sensitivity_chunk(cfg: ScenarioConfig, values: tuple, rep_range: tuple):
    design = scenario_design(cfg)
    mu = _true_mean(cfg, design)
    rcfg = cfg.robust_config()
    X = design.X
    names = design.column_names
    n_vals = len(values)
    n = rep_range[1] - rep_range[0]
    # Per-replication mean |SC|, NaN when a fit diverged; aggregated once by
    # the caller in replication order so worker count cannot move a bit.
    out = {"mle": np.full((n_vals, n), np.nan), "wmle": np.full((n_vals, n), np.nan)}
    for i, rep in enumerate(range(*rep_range)):
        rng = rng_for(cfg.master_seed, _REPLICATION_STREAM, rep)
        y = distribution.quantile(rng.random(cfg.n_obs), mu)
        j = int(rng.integers(cfg.n_obs))
        keep = np.ones(cfg.n_obs, dtype=bool)
        keep[j] = False
        base_design = DesignMatrix(X[keep], names)
        base_spec = ModelSpec(design=base_design, link=cfg.link, response=y[keep])
        base_mle, base_wmle = fit_both(base_spec, rcfg)
        if not (base_mle.converged and base_wmle.converged):
            continue
        for vi, value in enumerate(values):
            y_cont = y.copy()
            y_cont[j] = value
            spec = ModelSpec(design=design, link=cfg.link, response=y_cont)
            mle, wmle = fit_both(spec, rcfg)
            for key, fit, base in (("mle", mle, base_mle), ("wmle", wmle, base_wmle)):
                if fit.converged:
                    sc = cfg.n_obs * (fit.beta_hat - base.beta_hat)
                    out[key][vi, i] = float(np.mean(np.abs(sc)))
    return out["mle"], out["wmle"]


def sensitivity_curve(cfg: ScenarioConfig, outlier_values, workers: int = 1) -> SensitivityCurve:
    """Estimate shift caused by a single outlier, swept over its value.

    Per replication, a clean signal is drawn, one position ``j`` is
    chosen, the baseline is fitted on the other N-1 observations, and the
    contaminated fit sees all N observations with ``y[j]`` forced to the
    outlier value.  The sensitivity is ``N * (beta_contaminated -
    beta_baseline)``; MASC averages the absolute components over the
    parameters and the replications.  ``cfg.epsilon`` plays no role here.
    """
    values = tuple(float(v) for v in outlier_values)
    if any(v <= 0 for v in values):
        raise ValueError("outlier values must be positive")
    jobs = [(cfg, values, rng) for rng in _chunks(cfg.replications, workers)]
    parts = _map_chunks(_sensitivity_chunk, jobs, workers)
    mle_sc = np.concatenate([p[0] for p in parts], axis=1)
    wmle_sc = np.concatenate([p[1] for p in parts], axis=1)
    failures = int(np.sum(np.isnan(mle_sc)) + np.sum(np.isnan(wmle_sc)))
    with np.errstate(invalid="ignore"):
        mle_masc = np.nanmean(mle_sc, axis=1)
        wmle_masc = np.nanmean(wmle_sc, axis=1)
    return SensitivityCurve(
        values=values,
        mle_masc=tuple(float(v) for v in mle_masc),
        wmle_masc=tuple(float(v) for v in wmle_masc),
        convergence_failures=failures,
        config=cfg,
    )


def format_table(reports: list[ScenarioReport]) -> str:
    """Aligned text table of the Monte Carlo results, grouped by N."""
    if not reports:
        return ""
    k = reports[0].config.n_params
    params = [f"b{i + 1}" for i in range(k)]
    width = 11
    header_cells = params + ["abs.total"]
    block = "".join(f"{h:>{width}s}" for h in header_cells)
    lines = []
    lines.append(f"{'':22s}{'WMLE':^{width * (k + 1)}s} {'MLE':^{width * (k + 1)}s}")
    lines.append(f"{'eps':>6s} {'measure':>15s}{block} {block}")
    by_n: dict = {}
    for rep in reports:
        by_n.setdefault(rep.config.n_obs, []).append(rep)
    for n_obs in sorted(by_n):
        lines.append(f"-- N = {n_obs} " + "-" * (8 + 2 * width * (k + 1)))
        for rep in sorted(by_n[n_obs], key=lambda r: r.config.epsilon):
            eps = f"{100 * rep.config.epsilon:g}%"
            rows = [
                ("Mean", "mean", None),
                ("RB(%)", "rb_percent", "absolute_total_rb"),
                ("MSE", "mse", "absolute_total_mse"),
            ]
            for ri, (label, attr, total_attr) in enumerate(rows):
                cells = []
                for est in (rep.wmle, rep.mle):
                    vals = [f"{v:>{width}.4f}" for v in getattr(est, attr)]
                    total = (
                        f"{getattr(est, total_attr):>{width}.4f}"
                        if total_attr
                        else f"{'---':>{width}s}"
                    )
                    cells.append("".join(vals) + total)
                eps_cell = eps if ri == 0 else ""
                lines.append(f"{eps_cell:>6s} {label:>15s}{cells[0]} {cells[1]}")
    return "\n".join(lines) + "\n"
