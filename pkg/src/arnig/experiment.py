"""Monte Carlo replication of estimator performance on simulated AR(p)-NIG data."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ar import ArNigModel, simulate
from .distributions import NigParams
from .estimators import EmConfig, EstimationError, cls_fit, em_fit, yw_fit
from .io import InputError, dump_json, write_series_csv
from .special import DomainError

log = logging.getLogger(__name__)

ESTIMATORS = {"EM": em_fit, "YW": yw_fit, "CLS": cls_fit}

PRESETS = {
    "ar2_case1": dict(rho=(0.5, 0.3), innovation=NigParams(1.0, 0.0, 0.0, 2.0), series_length=1000),
    "ar1_case2": dict(rho=(0.9610,), innovation=NigParams(0.0087, 0.0, 0.0, 70.3882), series_length=579),
}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    case: str
    model: ArNigModel
    n_trajectories: int = 1000
    series_length: int = 1000
    estimators: tuple[str, ...] = ("EM", "YW", "CLS")
    seed: int = 0
    output_path: str | None = None
    burn_in: int = 500
    em: EmConfig = field(default_factory=EmConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_trajectories < 1:
            raise InputError("n_trajectories must be >= 1")
        if self.series_length <= self.model.p:
            raise InputError("series_length must exceed the model order")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise InputError(f"unknown estimators {sorted(unknown)}; choose from {sorted(ESTIMATORS)}")

    @classmethod
    def preset(cls, case: str, **overrides) -> ExperimentConfig:
        if case not in PRESETS:
            raise InputError(f"unknown case {case!r}; presets are {sorted(PRESETS)}")
        spec = PRESETS[case]
        model = ArNigModel(spec["rho"], spec["innovation"])
        kwargs = {"series_length": spec["series_length"], **overrides}
        return cls(case=case, model=model, **kwargs)

    @classmethod
    def from_text(cls, text: str) -> ExperimentConfig:
        """Parse the flat ``key = value`` config format (``#`` starts a comment)."""
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"config line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
        try:
            return cls._from_mapping(raw)
        except (ValueError, DomainError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"invalid config: {exc}") from exc

    @classmethod
    def _from_mapping(cls, raw: dict[str, str]) -> ExperimentConfig:
        case = raw.pop("case", "custom")
        em_kwargs = {}
        if "tolerance" in raw:
            em_kwargs["tolerance"] = float(raw.pop("tolerance"))
        if "max_iterations" in raw:
            em_kwargs["max_iterations"] = int(raw.pop("max_iterations"))
        if "symmetric" in raw:
            em_kwargs["symmetric"] = raw.pop("symmetric").lower() in {"1", "true", "yes", "on"}
        model_keys = {"rho", "alpha", "beta", "mu", "delta"}
        model_raw = {k: raw.pop(k) for k in list(raw) if k in model_keys}
        kwargs: dict = {"em": EmConfig(**em_kwargs)}
        for key, conv in (
            ("n_trajectories", int),
            ("series_length", int),
            ("seed", int),
            ("burn_in", int),
            ("workers", int),
            ("output_path", str),
        ):
            if key in raw:
                kwargs[key] = conv(raw.pop(key))
        if "estimators" in raw:
            kwargs["estimators"] = tuple(e.strip().upper() for e in raw.pop("estimators").split(",") if e.strip())
        if raw:
            raise InputError(f"unknown config keys: {sorted(raw)}")
        if case == "custom":
            missing = {"rho", "alpha", "delta"} - set(model_raw)
            if missing:
                raise InputError(f"custom case needs {sorted(missing)}")
        if case in PRESETS and not model_raw:
            return cls.preset(case, **kwargs)
        base = PRESETS.get(case)
        rho = [float(v) for v in model_raw["rho"].split(",")] if "rho" in model_raw else list(base["rho"])
        inn = base["innovation"] if base else None
        innovation = NigParams(
            float(model_raw.get("alpha", inn.alpha if inn else "nan")),
            float(model_raw.get("beta", inn.beta if inn else 0.0)),
            float(model_raw.get("mu", inn.mu if inn else 0.0)),
            float(model_raw.get("delta", inn.delta if inn else "nan")),
        )
        if base and "series_length" not in kwargs:
            kwargs["series_length"] = base["series_length"]
        return cls(case=case, model=ArNigModel(rho, innovation), **kwargs)


def replication_seed(master: int, r: int) -> np.random.SeedSequence:
    """Independent, individually reproducible stream for replication ``r``."""
    return np.random.SeedSequence(entropy=master, spawn_key=(r,))


def param_names(p: int, symmetric: bool) -> list[str]:
    names = [f"rho_{i}" for i in range(1, p + 1)] + ["delta", "alpha"]
    return names if symmetric else names + ["mu", "beta"]


def run_replication(config: ExperimentConfig, r: int) -> dict:
    """Simulate one trajectory and fit it with every requested estimator."""
    rng = np.random.default_rng(replication_seed(config.seed, r))
    series = simulate(config.model, config.series_length, config.burn_in, rng)
    out: dict = {"replication": r, "fits": {}, "errors": {}}
    for name in config.estimators:
        try:
            rep = ESTIMATORS[name](series, config.model.p, config.em)
        except (EstimationError, DomainError) as exc:
            out["errors"][name] = str(exc)
            continue
        inn = rep.fitted.innovation
        values = dict(zip(param_names(rep.fitted.p, True), [*rep.fitted.rho, inn.delta, inn.alpha]))
        values.update(mu=inn.mu, beta=inn.beta)
        steps = np.diff(rep.loglik_path)
        out["fits"][name] = {
            "params": values,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "min_loglik_increment": float(steps.min()) if steps.size else 0.0,
        }
    return out


def _summarize(values: np.ndarray) -> dict:
    n = values.size
    if n == 0:
        return dict(n=0, mean=np.nan, std=np.nan, median=np.nan, q25=np.nan, q75=np.nan, outliers_low=0, outliers_high=0)
    q25, med, q75 = np.percentile(values, [25, 50, 75])
    iqr = q75 - q25
    return dict(
        n=n,
        mean=float(values.mean()),
        std=float(values.std(ddof=1)) if n > 1 else np.nan,
        median=float(med),
        q25=float(q25),
        q75=float(q75),
        outliers_low=int(np.sum(values < q25 - 1.5 * iqr)),
        outliers_high=int(np.sum(values > q75 + 1.5 * iqr)),
    )


@dataclass(eq=False)
class ExperimentSummary:
    config: ExperimentConfig
    records: list[dict]
    table: list[dict]
    wall_time: float

    @property
    def n_replications(self) -> int:
        return len(self.records)

    def estimates(self, estimator: str, param: str) -> np.ndarray:
        return np.array([r["fits"][estimator]["params"][param] for r in self.records if estimator in r["fits"]])

    def row(self, estimator: str, param: str) -> dict:
        for row in self.table:
            if row["estimator"] == estimator and row["parameter"] == param:
                return row
        raise KeyError((estimator, param))

    def failures(self) -> dict[str, int]:
        return {e: sum(e in r["errors"] for r in self.records) for e in self.config.estimators}

    def monotonicity_violations(self, estimator: str = "EM", slack: float = 1e-8) -> int:
        return sum(
            r["fits"][estimator]["min_loglik_increment"] < -slack for r in self.records if estimator in r["fits"]
        )

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "case": cfg.case,
            "model": cfg.model.as_dict(),
            "n_trajectories": cfg.n_trajectories,
            "series_length": cfg.series_length,
            "estimators": list(cfg.estimators),
            "seed": cfg.seed,
            "tolerance": cfg.em.tolerance,
            "max_iterations": cfg.em.max_iterations,
            "symmetric": cfg.em.symmetric,
            "replications": self.n_replications,
            "failures": self.failures(),
            "em_monotonicity_violations": self.monotonicity_violations() if "EM" in cfg.estimators else None,
            "wall_time_seconds": self.wall_time,
            "table": self.table,
        }

    def write(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        json_path = stem.with_suffix(".json")
        csv_path = stem.with_suffix(".csv")
        dump_json(self.to_dict(), json_path)
        cols = ["n", "mean", "std", "median", "q25", "q75", "outliers_low", "outliers_high"]
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            fh.write(",".join(["estimator", "parameter", *cols]) + "\n")
            for row in self.table:
                cells = [row["estimator"], row["parameter"]] + ["" if _nan(row[c]) else repr(row[c]) for c in cols]
                fh.write(",".join(cells) + "\n")
        return json_path, csv_path


def _nan(v) -> bool:
    return isinstance(v, float) and np.isnan(v)


def run_experiment(config: ExperimentConfig, progress: bool = False) -> ExperimentSummary:
    """Run every replication and aggregate per estimator and parameter.

    Replications are independent; with ``workers > 1`` they are spread over a
    process pool and gathered back in replication order.
    """
    start = time.perf_counter()
    reps = range(config.n_trajectories)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run_replication, [config] * len(reps), reps, chunksize=8))
    else:
        records = []
        for r in reps:
            records.append(run_replication(config, r))
            if progress and (r + 1) % 50 == 0:
                log.info("%d/%d replications", r + 1, config.n_trajectories)
    table = []
    for est in config.estimators:
        for name in param_names(config.model.p, config.em.symmetric):
            vals = np.array([rec["fits"][est]["params"][name] for rec in records if est in rec["fits"]])
            table.append({"estimator": est, "parameter": name, **_summarize(vals)})
    return ExperimentSummary(config, records, table, time.perf_counter() - start)


def write_records(summary: ExperimentSummary, path: str | Path, estimators: Sequence[str] | None = None) -> None:
    """Per-replication estimates, one column per estimator/parameter pair."""
    cfg = summary.config
    cols = {}
    for est in estimators or cfg.estimators:
        for name in param_names(cfg.model.p, cfg.em.symmetric):
            cols[f"{est}_{name}"] = [
                rec["fits"][est]["params"][name] if est in rec["fits"] else np.nan for rec in summary.records
            ]
    write_series_csv(path, cols)
