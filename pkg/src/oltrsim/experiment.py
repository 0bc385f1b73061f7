"""Experiment configuration, orchestration, aggregation, and output files.

An experiment runs one or more named conditions (algorithm plus overrides)
over the same dataset with paired seeds: run r of every condition uses
seed ``base_seed + r`` and trains on fold ``folds[r % n_folds]``. Results
aggregate into a canonical summary (deterministic bytes for a given
config), per-condition learning-curve CSVs, and a significance table
against an optional baseline condition.
"""

from __future__ import annotations

import json
import multiprocessing
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import metrics
from .clicks import CLICK_MODELS, ClickModelParams
from .data import (
    Dataset,
    generate_synthetic,
    load_fold_dirs,
    normalize_per_query,
    parse_letor,
    split_single_fold,
)
from .engine import (
    COMPARISON_METHODS,
    SELECTION_METHODS,
    EngineConfig,
    RunTrace,
    run_cmgd,
    run_mgd,
    run_sim_mgd,
)
from .models import ReferenceSet, model_to_json

ALGORITHMS = ("mgd", "sim_mgd", "cmgd")
WORKERS_ENV = "OLTRSIM_WORKERS"

# table.txt significance markers: improvement / loss over the baseline
MARKER_UP_05 = "▵"
MARKER_UP_01 = "▴"
MARKER_DOWN_05 = "▿"
MARKER_DOWN_01 = "▾"


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    num_queries: int
    docs_per_query: int
    dim: int
    relevant_fraction: float = 0.2
    noise_level: float = 0.0
    seed: int = 0
    train_fraction: float = 0.6
    validation_fraction: float = 0.2

    def build(self) -> Dataset:
        return generate_synthetic(
            self.num_queries,
            self.docs_per_query,
            self.dim,
            self.relevant_fraction,
            self.noise_level,
            self.seed,
            (self.train_fraction, self.validation_fraction),
        )


@dataclass(frozen=True)
class DatasetConfig:
    synthetic: SyntheticSpec | None = None
    path: str | None = None
    fold_root: str | None = None
    train_fraction: float = 0.6
    validation_fraction: float = 0.2
    normalize: bool = True

    def load(self) -> Dataset:
        if self.synthetic is not None:
            ds = self.synthetic.build()
        elif self.path is not None:
            ds = split_single_fold(
                parse_letor(Path(self.path)),
                self.train_fraction,
                self.validation_fraction,
            )
        elif self.fold_root is not None:
            ds = load_fold_dirs(self.fold_root)
        else:
            raise ConfigError("dataset: one of synthetic/path/fold_root required")
        if self.normalize:
            ds = normalize_per_query(ds)
        return ds


@dataclass(frozen=True)
class CustomClickModel:
    name: str
    p_click: tuple[float, ...]
    p_stop: tuple[float, ...]

    def to_params(self) -> ClickModelParams:
        return ClickModelParams(
            self.name, np.array(self.p_click), np.array(self.p_stop)
        )


@dataclass(frozen=True)
class ConditionConfig:
    name: str
    algorithm: str
    engine: EngineConfig
    click_model: str | CustomClickModel = "informational"
    m_references: int = 50
    selection: str = "uniform"
    reference_vectors: tuple[tuple[float, ...], ...] | None = None

    def resolve_click_model(self) -> ClickModelParams:
        if isinstance(self.click_model, CustomClickModel):
            return self.click_model.to_params()
        return CLICK_MODELS[self.click_model]

    def resolve_references(self) -> ReferenceSet | None:
        if self.reference_vectors is None:
            return None
        return ReferenceSet.from_vectors(
            np.asarray(self.reference_vectors, dtype=np.float64), "manual"
        )


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig
    conditions: tuple[ConditionConfig, ...]
    baseline: str | None = None
    impressions: int = 10_000
    repeats: int = 125
    base_seed: int = 0
    record_every: int = 10
    gamma: float = 0.9995
    workers: int | None = None
    output_dir: str | None = None


# ---------------------------------------------------------------------------
# config (de)serialization with key-level validation
# ---------------------------------------------------------------------------

_ENGINE_KEYS = {
    "n": "n_candidates",
    "delta": "delta",
    "eta": "eta",
    "kappa": "kappa",
    "h": "history_window",
    "epsilon": "epsilon",
    "inference_samples": "inference_samples",
    "comparison": "comparison",
}
_CONDITION_KEYS = ("click_model", "M", "selection", "reference_vectors")


def _require(check: bool, message: str) -> None:
    if not check:
        raise ConfigError(message)


def _parse_click_model(value) -> str | CustomClickModel:
    if isinstance(value, str):
        _require(
            value in CLICK_MODELS,
            f'click_model: unknown model {value!r}, expected one of '
            f"{sorted(CLICK_MODELS)} or a map",
        )
        return value
    _require(
        isinstance(value, dict) and "p_click" in value and "p_stop" in value,
        "click_model: expected a name or {p_click, p_stop} maps",
    )
    params = ClickModelParams.from_maps(
        value.get("name", "custom"), value["p_click"], value["p_stop"]
    )
    return CustomClickModel(
        params.name, tuple(params.p_click.tolist()), tuple(params.p_stop.tolist())
    )


def _engine_from_keys(merged: dict, explicit: set[str], algorithm: str) -> EngineConfig:
    if algorithm == "cmgd":
        for key in ("h", "epsilon"):
            _require(
                key in explicit,
                f'missing required key "{key}" (mandatory when algorithm is cmgd)',
            )
    kwargs = {}
    for key, field_name in _ENGINE_KEYS.items():
        if key in merged:
            kwargs[field_name] = merged[key]
    try:
        return EngineConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        inverse = {v: k for k, v in _ENGINE_KEYS.items()}
        message = str(exc)
        for field_name, key in inverse.items():
            message = message.replace(field_name, key)
        raise ConfigError(message) from exc


def _condition_from_dict(
    name: str, algorithm: str, merged: dict, explicit: set[str]
) -> ConditionConfig:
    _require(
        algorithm in ALGORITHMS,
        f"algorithm: expected one of {ALGORITHMS}, got {algorithm!r}",
    )
    engine = _engine_from_keys(merged, explicit, algorithm)
    selection = merged.get("selection", "uniform")
    _require(
        selection in SELECTION_METHODS,
        f"selection: expected one of {SELECTION_METHODS}, got {selection!r}",
    )
    refs = merged.get("reference_vectors")
    if refs is not None:
        _require(
            isinstance(refs, (list, tuple)) and len(refs) > 0,
            "reference_vectors: expected a non-empty list of vectors",
        )
        widths = {len(v) for v in refs}
        _require(len(widths) == 1, "reference_vectors: vectors must share length")
        refs = tuple(tuple(float(x) for x in vec) for vec in refs)
    m_refs = merged.get("M", len(refs) if refs is not None else 50)
    _require(
        isinstance(m_refs, int) and m_refs >= 1, "M: expected a positive integer"
    )
    if refs is not None:
        _require(
            m_refs == len(refs),
            f"M: {m_refs} disagrees with {len(refs)} reference_vectors",
        )
    return ConditionConfig(
        name=name,
        algorithm=algorithm,
        engine=engine,
        click_model=_parse_click_model(merged.get("click_model", "informational")),
        m_references=m_refs,
        selection=selection,
        reference_vectors=refs,
    )


def _dataset_from_dict(data: dict) -> DatasetConfig:
    _require(isinstance(data, dict), "dataset: expected an object")
    kind_keys = [k for k in ("synthetic", "path", "fold_root") if k in data]
    _require(
        len(kind_keys) == 1,
        "dataset: exactly one of synthetic/path/fold_root required",
    )
    normalize = bool(data.get("normalize", True))
    if "synthetic" in data:
        spec = data["synthetic"]
        _require(isinstance(spec, dict), "dataset.synthetic: expected an object")
        for key in ("num_queries", "docs_per_query", "dim"):
            _require(key in spec, f'dataset.synthetic: missing required key "{key}"')
        try:
            synthetic = SyntheticSpec(**spec)
        except TypeError as exc:
            raise ConfigError(f"dataset.synthetic: {exc}") from exc
        _require(synthetic.dim >= 2, "dataset.synthetic.dim: must be >= 2")
        _require(
            synthetic.docs_per_query >= 2,
            "dataset.synthetic.docs_per_query: must be >= 2",
        )
        _require(
            synthetic.num_queries >= 1,
            "dataset.synthetic.num_queries: must be >= 1",
        )
        _require(
            0.0 <= synthetic.relevant_fraction <= 1.0,
            "dataset.synthetic.relevant_fraction: must be in [0, 1]",
        )
        _require(
            synthetic.noise_level >= 0.0,
            "dataset.synthetic.noise_level: must be >= 0",
        )
        return DatasetConfig(synthetic=synthetic, normalize=normalize)
    if "path" in data:
        _require(os.path.exists(data["path"]), f"dataset.path: {data['path']} not found")
        return DatasetConfig(
            path=data["path"],
            train_fraction=float(data.get("train_fraction", 0.6)),
            validation_fraction=float(data.get("validation_fraction", 0.2)),
            normalize=normalize,
        )
    _require(
        os.path.isdir(data["fold_root"]),
        f"dataset.fold_root: {data['fold_root']} is not a directory",
    )
    return DatasetConfig(fold_root=data["fold_root"], normalize=normalize)


def config_from_dict(data: dict) -> ExperimentConfig:
    _require(isinstance(data, dict), "config: expected a JSON object")
    _require("dataset" in data, 'missing required key "dataset"')
    dataset = _dataset_from_dict(data["dataset"])

    shared_keys = set(_ENGINE_KEYS) | set(_CONDITION_KEYS)
    shared = {k: data[k] for k in shared_keys if k in data}
    shared_explicit = set(shared)

    raw_conditions = data.get("conditions")
    if raw_conditions is None:
        _require(
            "algorithm" in data,
            'missing required key "algorithm" (or a "conditions" list)',
        )
        raw_conditions = [{"name": data["algorithm"], "algorithm": data["algorithm"]}]
    _require(
        isinstance(raw_conditions, list) and raw_conditions,
        "conditions: expected a non-empty list",
    )
    conditions = []
    for entry in raw_conditions:
        _require(isinstance(entry, dict), "conditions: entries must be objects")
        _require("algorithm" in entry, 'conditions: missing required key "algorithm"')
        name = entry.get("name", entry["algorithm"])
        merged = dict(shared)
        overrides = {
            k: v for k, v in entry.items() if k not in ("name", "algorithm")
        }
        unknown = set(overrides) - shared_keys
        _require(not unknown, f"conditions[{name}]: unknown keys {sorted(unknown)}")
        merged.update(overrides)
        explicit = shared_explicit | set(overrides)
        conditions.append(
            _condition_from_dict(name, entry["algorithm"], merged, explicit)
        )
    names = [c.name for c in conditions]
    _require(len(set(names)) == len(names), "conditions: names must be unique")

    baseline = data.get("baseline")
    if baseline is not None:
        _require(
            baseline in names,
            f"baseline: {baseline!r} is not a condition name",
        )

    impressions = data.get("impressions", 10_000)
    repeats = data.get("repeats", 125)
    record_every = data.get("record_every", 10)
    base_seed = data.get("base_seed", 0)
    gamma = data.get("gamma", 0.9995)
    workers = data.get("workers")
    _require(isinstance(impressions, int) and impressions >= 1, "impressions: must be >= 1")
    _require(isinstance(repeats, int) and repeats >= 1, "repeats: must be >= 1")
    _require(isinstance(record_every, int) and record_every >= 1, "record_every: must be >= 1")
    _require(isinstance(base_seed, int), "base_seed: must be an integer")
    _require(0.0 < gamma <= 1.0, "gamma: must be in (0, 1]")
    gamma = float(gamma)
    if workers is not None:
        _require(isinstance(workers, int) and workers >= 1, "workers: must be >= 1")

    return ExperimentConfig(
        dataset=dataset,
        conditions=tuple(conditions),
        baseline=baseline,
        impressions=impressions,
        repeats=repeats,
        base_seed=base_seed,
        record_every=record_every,
        gamma=gamma,
        workers=workers,
        output_dir=data.get("output_dir"),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    dataset: dict = {"normalize": cfg.dataset.normalize}
    if cfg.dataset.synthetic is not None:
        dataset["synthetic"] = asdict(cfg.dataset.synthetic)
    elif cfg.dataset.path is not None:
        dataset["path"] = cfg.dataset.path
        dataset["train_fraction"] = cfg.dataset.train_fraction
        dataset["validation_fraction"] = cfg.dataset.validation_fraction
    else:
        dataset["fold_root"] = cfg.dataset.fold_root

    conditions = []
    for cond in cfg.conditions:
        entry: dict = {"name": cond.name, "algorithm": cond.algorithm}
        for key, field_name in _ENGINE_KEYS.items():
            entry[key] = getattr(cond.engine, field_name)
        if isinstance(cond.click_model, CustomClickModel):
            entry["click_model"] = {
                "name": cond.click_model.name,
                "p_click": {str(g): p for g, p in enumerate(cond.click_model.p_click)},
                "p_stop": {str(g): p for g, p in enumerate(cond.click_model.p_stop)},
            }
        else:
            entry["click_model"] = cond.click_model
        entry["M"] = cond.m_references
        entry["selection"] = cond.selection
        if cond.reference_vectors is not None:
            entry["reference_vectors"] = [list(v) for v in cond.reference_vectors]
        conditions.append(entry)

    out = {
        "dataset": dataset,
        "conditions": conditions,
        "impressions": cfg.impressions,
        "repeats": cfg.repeats,
        "base_seed": cfg.base_seed,
        "record_every": cfg.record_every,
        "gamma": cfg.gamma,
    }
    if cfg.baseline is not None:
        out["baseline"] = cfg.baseline
    if cfg.workers is not None:
        out["workers"] = cfg.workers
    if cfg.output_dir is not None:
        out["output_dir"] = cfg.output_dir
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    condition: str
    run_id: int
    fold: int
    seed: int
    trace: RunTrace

    @property
    def online_performance(self) -> float:
        return self.trace.online_performance

    @property
    def final_offline_ndcg(self) -> float:
        return self.trace.final_offline_ndcg


def execute_run(
    ds: Dataset,
    cond: ConditionConfig,
    cfg: ExperimentConfig,
    run_id: int,
    fold: int,
    seed: int,
) -> RunResult:
    rng = np.random.default_rng(seed)
    common = dict(
        ds=ds,
        cfg=cond.engine,
        click_model=cond.resolve_click_model(),
        impressions=cfg.impressions,
        rng=rng,
        fold=fold,
        gamma=cfg.gamma,
        record_every=cfg.record_every,
    )
    if cond.algorithm == "mgd":
        trace = run_mgd(**common)
    elif cond.algorithm == "sim_mgd":
        trace = run_sim_mgd(
            m=cond.m_references,
            selection=cond.selection,
            refs=cond.resolve_references(),
            **common,
        )
    else:
        trace = run_cmgd(
            m=cond.m_references,
            selection=cond.selection,
            refs=cond.resolve_references(),
            **common,
        )
    return RunResult(cond.name, run_id, fold, seed, trace)


_WORKER_STATE: tuple[Dataset, ExperimentConfig] | None = None


def _pool_run(job: tuple[int, int, int, int]) -> RunResult:
    ds, cfg = _WORKER_STATE
    cond_idx, run_id, fold, seed = job
    return execute_run(ds, cfg.conditions[cond_idx], cfg, run_id, fold, seed)


def resolve_workers(cfg_workers: int | None, override: int | None = None) -> int:
    if override is not None:
        return max(1, override)
    if cfg_workers is not None:
        return max(1, cfg_workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    results: dict[str, list[RunResult]]
    baseline: str | None

    def condition_stats(self, name: str) -> dict:
        runs = self.results[name]
        online = np.array([r.online_performance for r in runs])
        offline = np.array([r.final_offline_ndcg for r in runs])

        def agg(values: np.ndarray) -> dict:
            return {
                "mean": float(np.mean(values)),
                "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
                "n": int(values.size),
            }

        return {
            "online_performance": agg(online),
            "final_offline_ndcg": agg(offline),
            "runs": [
                {
                    "run_id": r.run_id,
                    "fold": r.fold,
                    "seed": r.seed,
                    "online_performance": r.online_performance,
                    "final_offline_ndcg": r.final_offline_ndcg,
                    "switch_impression": r.trace.switch_impression,
                }
                for r in runs
            ],
        }

    def comparisons(self) -> dict:
        if self.baseline is None:
            return {}
        base = self.results[self.baseline]
        if len(base) < 2:
            return {}
        base_online = [r.online_performance for r in base]
        base_offline = [r.final_offline_ndcg for r in base]
        out = {}
        for name, runs in self.results.items():
            if name == self.baseline:
                continue
            online_rep = metrics.t_test_two_tailed(
                [r.online_performance for r in runs], base_online
            )
            offline_rep = metrics.t_test_two_tailed(
                [r.final_offline_ndcg for r in runs], base_offline
            )
            out[name] = {
                "online_performance": _report_dict(online_rep),
                "final_offline_ndcg": _report_dict(offline_rep),
            }
        return out

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "conditions": {
                name: self.condition_stats(name) for name in self.results
            },
            "comparisons": self.comparisons(),
            "config": config_to_dict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(
            self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False
        ) + "\n"


def significance_marker(mean_delta: float, p_value: float) -> str:
    """Table marker for a condition-vs-baseline comparison."""
    if mean_delta == 0.0 or p_value >= 0.05:
        return ""
    if mean_delta > 0:
        return MARKER_UP_01 if p_value < 0.01 else MARKER_UP_05
    return MARKER_DOWN_01 if p_value < 0.01 else MARKER_DOWN_05


def _report_dict(report: metrics.ComparisonReport) -> dict:
    return {
        "mean_a": report.mean_a,
        "mean_b": report.mean_b,
        "std_a": report.std_a,
        "std_b": report.std_b,
        "t_statistic": report.t_statistic,
        "p_value": report.p_value,
        "n_a": report.n_a,
        "n_b": report.n_b,
        "degenerate_variance": report.degenerate_variance,
        "marker": significance_marker(
            report.mean_a - report.mean_b, report.p_value
        ),
    }


def format_table(summary: ExperimentSummary) -> str:
    comparisons = summary.comparisons()
    header = f"{'condition':<20} {'online performance':<28} {'offline ndcg':<28}"
    lines = [header, "-" * len(header)]
    for name in summary.results:
        stats = summary.condition_stats(name)
        cells = []
        for key in ("online_performance", "final_offline_ndcg"):
            agg = stats[key]
            cell = f"{agg['mean']:.4f} ({agg['std']:.4f})"
            marker = ""
            if name in comparisons:
                marker = comparisons[name][key]["marker"]
            cells.append(f"{cell} {marker}".rstrip().ljust(28))
        lines.append(f"{name:<20} {cells[0]} {cells[1]}".rstrip())
    if summary.baseline is not None:
        lines.append("")
        lines.append(
            f"markers vs baseline {summary.baseline!r}: "
            f"{MARKER_UP_05} p<0.05 / {MARKER_UP_01} p<0.01 improvement, "
            f"{MARKER_DOWN_05} p<0.05 / {MARKER_DOWN_01} p<0.01 loss"
        )
    return "\n".join(lines) + "\n"


def _curves_rows(result: RunResult) -> Iterable[str]:
    trace = result.trace
    offline_at = dict(
        zip(trace.offline_impressions.tolist(), trace.offline_ndcg.tolist())
    )
    displayed = trace.displayed_ndcg.tolist()
    phases = trace.phase_names()
    for t in range(1, trace.impressions + 1):
        offline = offline_at.get(t)
        offline_cell = "" if offline is None else repr(offline)
        yield (
            f"{result.run_id},{t},{displayed[t - 1]!r},"
            f"{offline_cell},{phases[t - 1]}\n"
        )


def run_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    output_dir: str | Path | None = None,
    dump_models: bool = False,
) -> ExperimentSummary:
    """Run every (condition, repeat) pair, aggregate, and emit outputs.

    Results depend only on the config and base seed, never on worker
    scheduling: jobs are independent and are reduced in submission order.
    On a failed run the completed results are preserved on disk alongside
    a manifest marking the failure.
    """
    ds = cfg.dataset.load()
    folds = sorted(ds.splits)
    if not folds:
        raise ExperimentError("dataset has no fold splits")

    out_path = Path(output_dir) if output_dir is not None else (
        Path(cfg.output_dir) if cfg.output_dir else None
    )
    jobs: list[tuple[int, int, int, int]] = []
    for cond_idx in range(len(cfg.conditions)):
        for r in range(cfg.repeats):
            fold = folds[r % len(folds)]
            jobs.append((cond_idx, r, fold, cfg.base_seed + r))

    n_workers = resolve_workers(cfg.workers, workers)
    results: dict[str, list[RunResult]] = {c.name: [] for c in cfg.conditions}
    writers: dict[str, object] = {}
    completed: list[dict] = []

    def consume(result: RunResult) -> None:
        results[result.condition].append(result)
        completed.append(
            {"condition": result.condition, "run_id": result.run_id}
        )
        if out_path is not None:
            cond_dir = out_path / result.condition
            cond_dir.mkdir(parents=True, exist_ok=True)
            writer = writers.get(result.condition)
            if writer is None:
                writer = (cond_dir / "curves.csv").open("w", encoding="utf-8")
                writer.write("run_id,impression,displayed_ndcg,offline_ndcg,phase\n")
                writers[result.condition] = writer
            writer.writelines(_curves_rows(result))
            writer.flush()
            if dump_models:
                models_dir = cond_dir / "models"
                models_dir.mkdir(exist_ok=True)
                (models_dir / f"run{result.run_id}.json").write_text(
                    json.dumps(model_to_json(result.trace.final_model), indent=2)
                    + "\n",
                    encoding="utf-8",
                )

    try:
        if n_workers <= 1 or len(jobs) <= 1:
            for job in jobs:
                cond_idx, run_id, fold, seed = job
                consume(
                    execute_run(ds, cfg.conditions[cond_idx], cfg, run_id, fold, seed)
                )
        else:
            global _WORKER_STATE
            _WORKER_STATE = (ds, cfg)
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(processes=min(n_workers, len(jobs))) as pool:
                for result in pool.imap(_pool_run, jobs, chunksize=1):
                    consume(result)
            _WORKER_STATE = None
    except Exception as exc:
        if out_path is not None:
            out_path.mkdir(parents=True, exist_ok=True)
            manifest = {
                "status": "incomplete",
                "completed": completed,
                "error": f"{type(exc).__name__}: {exc}",
            }
            (out_path / "manifest.json").write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        raise ExperimentError(f"experiment run failed: {exc}") from exc
    finally:
        for writer in writers.values():
            writer.close()

    summary = ExperimentSummary(cfg, results, cfg.baseline)
    if out_path is not None:
        emit_outputs(summary, out_path)
    return summary


def emit_outputs(summary: ExperimentSummary, out_path: str | Path) -> None:
    """Write summary.json (canonical, timestamp-free) and table.txt."""
    out_path = Path(out_path)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "summary.json").write_text(summary.to_json(), encoding="utf-8")
    (out_path / "table.txt").write_text(format_table(summary), encoding="utf-8")
