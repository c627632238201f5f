"""End-to-end analysis of a price series.

Stages, each recorded in the result: variance segmentation of the
log-returns, per-segment polynomial detrending, PACF order selection, EM
fit, residual KS tests against a fitted normal and against a sample from the
fitted NIG law, a KDE table and a simulated quantile fan.  A failing stage
stops the remaining stages of its segment; the failure is recorded, not raised.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .ar import ArNigModel, TimeSeries
from .diagnostics import (
    detrend_polynomial,
    kde,
    ks_one_sample,
    ks_two_sample,
    qq_pairs,
    quantile_fan,
    segment_by_variance,
    select_order,
)
from .distributions import nig_pdf, sample_nig
from .estimators import EmConfig, EstimationError, em_fit
from .io import dump_json, to_log_returns, write_series_csv
from .special import DomainError

log = logging.getLogger(__name__)

FAN_LEVELS = tuple(round(0.1 * k, 10) for k in range(1, 10))


@dataclass
class PipelineConfig:
    degree: int = 6
    max_lag: int = 20
    em: EmConfig = field(default_factory=EmConfig)
    n_paths: int = 1000
    seed: int = 0
    kde_points: int = 201
    segment_threshold: float = 0.05
    breakpoints: list[int] | None = None  # bypasses segmentation when given


@dataclass
class PipelineResult:
    stages: dict = field(default_factory=dict)
    segments: list[dict] = field(default_factory=list)
    tables: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    aborted: str | None = None

    def to_dict(self) -> dict:
        return {"stages": self.stages, "segments": self.segments, "aborted": self.aborted}

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, cols in self.tables.items():
            write_series_csv(out / f"{name}.csv", cols)
        dump_json(self.to_dict(), out / "pipeline.json")
        return out


def _price_breaks(return_breaks: list[int]) -> list[int]:
    # returns r_i = log(P_{i+1}/P_i); a regime starting at return b starts at price b + 1
    return [b + 1 for b in return_breaks]


def run_pipeline(prices: TimeSeries, config: PipelineConfig = PipelineConfig()) -> PipelineResult:
    result = PipelineResult()
    if config.breakpoints is not None:
        breaks = sorted(config.breakpoints)
        result.stages["segmentation"] = {"status": "given", "breakpoints": breaks}
    else:
        try:
            seg = segment_by_variance(to_log_returns(prices), threshold=config.segment_threshold)
        except (DomainError, ValueError) as exc:
            result.stages["segmentation"] = {"status": "failed", "error": str(exc)}
            result.aborted = "segmentation"
            return result
        breaks = _price_breaks(seg.breakpoints)
        result.stages["segmentation"] = {
            "status": "ok",
            "breakpoints": breaks,
            "return_breakpoints": seg.breakpoints,
            "gain": seg.gain,
        }
        result.tables["segmentation_statistic"] = {"cumulative_sum_of_squares": seg.statistic_path}
    edges = [0, *breaks, len(prices)]
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:]), start=1):
        info = {"segment": k, "start": a, "stop": b}
        result.segments.append(info)
        _run_segment(TimeSeries(prices.values[a:b], f"segment_{k}"), k, info, result, config)
    return result


def _run_segment(series: TimeSeries, k: int, info: dict, result: PipelineResult, config: PipelineConfig) -> None:
    stage = "detrend"
    try:
        det = detrend_polynomial(series, config.degree)
        info["detrend"] = {"degree": det.degree, "coefficients": det.coefficients}
        stationary = det.residual

        stage = "order"
        max_lag = min(config.max_lag, max(1, math.ceil(len(stationary) / 4) - 1))
        sel = select_order(stationary, max_lag)
        info["order"] = {"selected": sel.order, "significant": sel.significant, "band": sel.band, "pacf": sel.pacf}
        result.tables[f"segment_{k}_pacf"] = {"lag": np.arange(sel.pacf.size), "pacf": sel.pacf}

        stage = "fit"
        rep = em_fit(stationary, sel.order, config.em)
        info["fit"] = rep.to_dict()
        eps = rep.residuals.values
        inn = rep.fitted.innovation

        stage = "ks"
        m, sd = float(eps.mean()), float(eps.std(ddof=1))
        normal = ks_one_sample(eps, stats.norm(m, sd).cdf)
        reference = sample_nig(inn, eps.size, np.random.default_rng([config.seed, k]))
        two = ks_two_sample(eps, reference)
        info["ks"] = {
            "normal": {"statistic": normal.statistic, "p_value": normal.p_value, "mean": m, "sd": sd},
            "nig_two_sample": {"statistic": two.statistic, "p_value": two.p_value},
        }
        qq_norm = qq_pairs(eps, stats.norm(m, sd).ppf((np.arange(eps.size) + 0.5) / eps.size))
        qq_nig = qq_pairs(eps, reference)
        result.tables[f"segment_{k}_qq"] = {
            "residual_q": qq_norm[:, 0],
            "normal_q": qq_norm[:, 1],
            "nig_sample_q": qq_nig[:, 1],
        }

        stage = "kde"
        lo, hi = np.percentile(eps, [0, 100])
        pad = 0.25 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, config.kde_points)
        result.tables[f"segment_{k}_kde"] = {
            "x": grid,
            "kde": kde(eps, grid),
            "nig_pdf": nig_pdf(grid, inn),
            "normal_pdf": stats.norm(m, sd).pdf(grid),
        }

        stage = "quantiles"
        model = ArNigModel(rep.fitted.rho, inn)
        fan = quantile_fan(model, det, len(series), config.n_paths, FAN_LEVELS, seed=config.seed + k)
        cols = {"t": np.arange(len(series)), "observed": series.values, "trend": det.trend.values}
        cols.update({f"q{round(100 * lv):02d}": path for lv, path in zip(fan.levels, fan.paths)})
        result.tables[f"segment_{k}_quantiles"] = cols
        inside = (series.values >= fan.paths[0]) & (series.values <= fan.paths[-1])
        info["quantiles"] = {"n_paths": fan.n_trajectories, "levels": fan.levels, "coverage_10_90": float(inside.mean())}
    except (DomainError, EstimationError, ValueError) as exc:
        log.warning("segment %d failed at %s: %s", k, stage, exc)
        info["failed_stage"] = stage
        info["error"] = str(exc)
