"""Generalization grid: train each family on one PMU set, test on all of them."""
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from config.settings import settings
from datagen.dataset import DatasetSplit
from grid.topology import Topology
from models.spec import ALL_FAMILIES, ModelSpec, build_spec
from pipeline.state import initial_state
from pipeline.workflow import cell_workflow
from schema.records import AggregateRow, BenchmarkReport, CellResult, Provenance
from training.config import TrainConfig
from training.metrics import confidence_interval_90
from utils.errors import ConfigError, IncompleteGridError, UsageError
from utils.helpers import read_json, write_json
from utils.logger import run_context, setup_logger

logger = setup_logger(__name__)

DEFAULT_FAMILIES: Tuple[str, ...] = tuple(f.value for f in ALL_FAMILIES)
RESULT_COLUMNS = ["family", "n_pmus", "seed", "f1", "precision", "recall"]
PLOT_COLUMNS = ["family", "n_pmus", "mean_f1", "ci_low", "ci_high"]

# Per-process inputs shared by every cell a worker runs.
_SHARED: Dict[str, Any] = {}


def model_spec_for(label: str, config: TrainConfig, overrides: Optional[Dict[str, Any]] = None) -> ModelSpec:
    """`rgsage-mean` style labels select the SAGE aggregator."""
    name, _, aggregator = label.partition("-")
    payload: Dict[str, Any] = {
        "hidden": config.hidden,
        "gnn_out": config.hidden,
        "dropout": config.dropout,
        "attn_dropout": config.attn_dropout,
        **(overrides or {}),
    }
    if aggregator:
        payload["sage_aggregator"] = aggregator
    return build_spec(name, **payload)


def _init_worker(dataset: DatasetSplit, topology: Topology, pmu_configs: Dict[int, List[int]]) -> None:
    _SHARED.update(dataset=dataset, topology=topology, pmu_configs=pmu_configs)


def _run_cell(task: Tuple[str, int, Dict[str, Any], Dict[str, Any], Optional[str]]) -> Dict[str, Any]:
    label, seed, spec, train_config, out_dir = task
    state = initial_state(
        family=label,
        seed=seed,
        model_spec=spec,
        train_config=train_config,
        dataset=_SHARED["dataset"],
        topology=_SHARED["topology"],
        pmu_configs=_SHARED["pmu_configs"],
        out_dir=out_dir,
    )
    with run_context(f"{label} seed {seed}"):
        final = cell_workflow.invoke(state)
    return {
        "label": label,
        "seed": seed,
        "results": [r.model_dump(mode="json") for r in final.get("results", [])],
        "error": final.get("error"),
        "diverged": bool(final.get("diverged")),
        "step": final.get("step"),
    }


def aggregate(cells: Sequence[CellResult], families: Sequence[str], test_pmus: Sequence[int], seeds: Sequence[int]) -> List[AggregateRow]:
    """One row per (family, N) whose every seed finished."""
    rows = []
    for family in families:
        for n in test_pmus:
            f1s = [
                c.metrics.f1
                for c in cells
                if c.family == family and c.n_pmus == n and c.status == "ok" and c.metrics is not None
            ]
            if len(f1s) != len(seeds):
                continue
            mean = sum(f1s) / len(f1s)
            low, high = confidence_interval_90(f1s) if len(f1s) >= 2 else (mean, mean)
            rows.append(
                AggregateRow(
                    family=family,
                    n_pmus=n,
                    mean_f1=mean,
                    ci_low=min(low, mean),
                    ci_high=max(high, mean),
                    seeds=len(f1s),
                )
            )
    return rows


def run_benchmark(
    dataset: DatasetSplit,
    families: Sequence[str],
    seeds: Sequence[int],
    out_dir: Optional[Path],
    config: TrainConfig,
    topology: Topology,
    pmu_configs: Dict[int, List[int]],
    jobs: int = 1,
    model_overrides: Optional[Dict[str, Any]] = None,
    dataset_sha256: Optional[Dict[str, str]] = None,
    generator_config_hash: str = "",
) -> BenchmarkReport:
    """Train every (family, seed) once and evaluate it on every test configuration.

    Results are assembled in (family, seed, N) order whatever the job count.
    Failed cells are kept in the report; an incomplete grid raises
    IncompleteGridError after everything finished has been written.
    """
    if not families or not seeds:
        raise ConfigError("the benchmark needs at least one family and one seed")
    missing = [n for n in [config.train_pmus, *config.test_pmus] if n not in pmu_configs]
    if missing:
        raise ConfigError(f"no PMU configuration for sizes {missing}")
    specs = {label: model_spec_for(label, config, model_overrides) for label in families}
    labels = [specs[label].label for label in families]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate families in {list(families)}")
    train_set = set(pmu_configs[config.train_pmus])
    for n in config.test_pmus:
        if n < config.train_pmus and not set(pmu_configs[n]) <= train_set:
            raise ConfigError(f"PMU configuration {n} is not nested in the training configuration")

    cell_config = config.model_copy(update={"seeds": list(seeds)})
    tasks = [
        (
            specs[family].label,
            seed,
            specs[family].model_dump(mode="json"),
            cell_config.model_dump(mode="json"),
            str(out_dir) if out_dir is not None else None,
        )
        for family in families
        for seed in seeds
    ]
    logger.info(f"Benchmark: {len(families)} families x {len(seeds)} seeds x {len(config.test_pmus)} test configs (jobs={jobs})")
    if jobs > 1 and len(tasks) > 1:
        with Pool(processes=min(jobs, len(tasks)), initializer=_init_worker, initargs=(dataset, topology, pmu_configs)) as pool:
            outcomes = pool.map(_run_cell, tasks)
    else:
        _init_worker(dataset, topology, pmu_configs)
        outcomes = [_run_cell(t) for t in tasks]

    cells: List[CellResult] = []
    for outcome in outcomes:
        finished = {r["n_pmus"]: CellResult.model_validate(r) for r in outcome["results"]}
        for n in config.test_pmus:
            if n in finished and not outcome["error"]:
                cells.append(finished[n])
                continue
            status = "diverged" if outcome["diverged"] else "failed"
            logger.warning(f"[{outcome['label']} seed {outcome['seed']}] N={n}: {status}: {outcome['error']}")
            cells.append(
                CellResult(family=outcome["label"], n_pmus=n, seed=outcome["seed"], status=status, error=outcome["error"])
            )

    provenance = Provenance(
        dataset_seed=dataset.seed,
        dataset_sha256=dataset_sha256 or {},
        generator_config_hash=generator_config_hash,
        train_config_hash=cell_config.digest(),
        seeds=list(seeds),
        families=labels,
        train_pmus=config.train_pmus,
        test_pmus=list(config.test_pmus),
        code_version=settings.APP_VERSION,
    )
    report = BenchmarkReport(
        cells=cells,
        aggregates=aggregate(cells, labels, config.test_pmus, seeds),
        provenance=provenance,
    )
    report.complete = len(report.ok_cells()) == report.expected_cells()

    if out_dir is not None:
        write_benchmark_outputs(report, Path(out_dir))
    if not report.complete:
        failed = report.expected_cells() - len(report.ok_cells())
        raise IncompleteGridError(f"{failed} of {report.expected_cells()} benchmark cells failed", report)
    return report


def results_frame(report: BenchmarkReport) -> pd.DataFrame:
    rows = [
        {
            "family": c.family,
            "n_pmus": c.n_pmus,
            "seed": c.seed,
            "f1": c.metrics.f1,
            "precision": c.metrics.precision,
            "recall": c.metrics.recall,
        }
        for c in report.ok_cells()
    ]
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def emit_plot_data(report: BenchmarkReport) -> pd.DataFrame:
    """Mean F1 with 90% interval per (family, N), in grid order."""
    expected = len(report.provenance.families) * len(report.provenance.test_pmus)
    if not report.complete or len(report.aggregates) != expected:
        raise UsageError(
            f"plot data needs a complete report ({len(report.aggregates)} of {expected} aggregate rows)"
        )
    return pd.DataFrame([row.model_dump() for row in report.aggregates])[PLOT_COLUMNS]


def write_benchmark_outputs(report: BenchmarkReport, out_dir: Path) -> Dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": write_json(out_dir / "report.json", report.model_dump(mode="json")),
        "provenance": write_json(out_dir / "provenance.json", report.provenance.model_dump(mode="json")),
    }
    paths["results"] = out_dir / "results.csv"
    results_frame(report).to_csv(paths["results"], index=False)
    if report.complete:
        paths["fig3"] = out_dir / "fig3.csv"
        emit_plot_data(report).to_csv(paths["fig3"], index=False)
    else:
        logger.warning("Grid incomplete: fig3.csv not written")
    logger.info(f"Benchmark outputs written to {out_dir}")
    return paths


def load_report(path: Path) -> BenchmarkReport:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"report not found: {path}")
    return BenchmarkReport.model_validate(read_json(path))
