"""
Command-line entry point: gen | train | eval | benchmark | gradcheck | report.

Exit codes: 0 ok, 1 unexpected error, 2 configuration/input error,
3 training divergence, 4 incomplete benchmark grid, 5 gradient check failure.
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from config.presets import PRESET_FILES, presets
from config.settings import settings
from datagen.dataset import build_dataset, count_summary, project_to_pmu_subset, split_balance
from experiment.benchmark import DEFAULT_FAMILIES, emit_plot_data, load_report, model_spec_for, run_benchmark
from experiment.gradcheck import COMPONENTS, run_gradcheck
from grid.pmu_graph import induce_pmu_graph
from models.model import ModelInstance
from schema.records import RunManifest, utc_now
from storage.checkpoint import load_checkpoint, save_checkpoint
from storage.dataset_store import dataset_hashes, load_dataset, save_dataset
from training.metrics import evaluate
from training.trainer import train
from utils.errors import DivergenceError, FaultDetectionError, IncompleteGridError
from utils.helpers import config_hash, hash_artifacts, write_json
from utils.logger import run_context, setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_PARTIAL = 4
EXIT_GRADCHECK = 5

RUN_MANIFEST = "run_manifest.json"


class CommandFailed(Exception):
    """Command finished with a non-zero exit code after writing its outputs."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _write_manifest(args: argparse.Namespace, out_dir: Path, artifacts: Sequence[Path], exit_code: int = EXIT_OK,
                    config_path: Optional[Path] = None, seeds: Sequence[int] = ()) -> Path:
    arguments = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "handler"}
    manifest = RunManifest(
        command=args.command,
        config_path=str(config_path) if config_path else None,
        config_hash=config_hash(arguments),
        seeds=list(seeds),
        output_dir=str(out_dir),
        arguments=arguments,
        exit_code=exit_code,
        artifacts=hash_artifacts(artifacts),
    )
    manifest.finished_at = utc_now()
    return write_json(out_dir / RUN_MANIFEST, manifest.model_dump(mode="json"))


def _data_dir(args: argparse.Namespace) -> Path:
    return Path(args.data) if args.data else settings.DATA_DIR / args.preset


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else settings.DEFAULT_SEED


# ---------------------------------------------------------------- commands

def cmd_gen(args: argparse.Namespace) -> int:
    cfg = presets.generator_config(args.preset, args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    topo = presets.topology(cfg)
    pmus = presets.pmu_config(int(cfg.pmu_config))
    split = build_dataset(topo, pmus, seed, cfg, jobs=args.jobs)
    out_dir = _data_dir(args)
    paths = save_dataset(split, out_dir)
    print(count_summary(split).to_string(index=False))
    print()
    print(split_balance(split).to_string(index=False))
    config_path = Path(args.config) if args.config else presets.generator_path(args.preset)
    _write_manifest(args, out_dir, paths.values(), config_path=config_path, seeds=[seed])
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = presets.train_config(args.train_config)
    if args.epochs is not None:
        config = config.model_copy(update={"epochs": args.epochs})
    seed = _seed(args)
    dataset = load_dataset(_data_dir(args))
    n_pmus = args.pmus or config.train_pmus
    buses = presets.pmu_config(n_pmus)
    projected = project_to_pmu_subset(dataset, buses)
    spec = model_spec_for(args.family, config, {"seed": seed})
    model = ModelInstance(spec, induce_pmu_graph(presets.topology(dataset.config), buses))
    out_dir = Path(args.out) if args.out else settings.CHECKPOINT_DIR
    stem = out_dir / f"{spec.label}_seed{seed}"
    try:
        with run_context(f"{spec.label} seed {seed}"):
            history = train(model, projected.train, config, seed, validation=projected.validation)
    except DivergenceError:
        _write_manifest(args, out_dir, [], exit_code=EXIT_DIVERGED, seeds=[seed])
        raise
    paths = save_checkpoint(model, stem, stats=dataset.stats, seed=seed)
    history_path = write_json(stem.with_name(stem.name + ".history.json"), history.model_dump(mode="json"))
    print(f"{spec.label} seed {seed}: final loss {history.train_loss[-1]:.4f}", end="")
    print(f", validation F1 {history.val_f1[-1]:.4f}" if history.val_f1 else "")
    _write_manifest(args, out_dir, [paths.data, paths.manifest, history_path], seeds=[seed])
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = load_dataset(_data_dir(args))
    buses = presets.pmu_config(args.pmus)
    model, manifest = load_checkpoint(Path(args.checkpoint), graph=induce_pmu_graph(presets.topology(dataset.config), buses))
    windows = getattr(project_to_pmu_subset(dataset, buses), args.split)
    metrics = evaluate(model, windows)
    out_dir = Path(args.out) if args.out else Path(args.checkpoint).parent
    result = {
        "checkpoint": str(args.checkpoint),
        "family": manifest["spec"]["family"],
        "n_pmus": args.pmus,
        "split": args.split,
        "metrics": metrics.model_dump(),
    }
    stem = Path(args.checkpoint).with_suffix("").name
    path = write_json(out_dir / f"{stem}.eval_{args.split}_{args.pmus}.json", result)
    print(f"N={args.pmus} {args.split}: F1 {metrics.f1:.4f} precision {metrics.precision:.4f} "
          f"recall {metrics.recall:.4f} accuracy {metrics.accuracy:.4f}")
    _write_manifest(args, out_dir, [path])
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    config = presets.train_config(args.train_config)
    if args.epochs is not None:
        config = config.model_copy(update={"epochs": args.epochs})
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else config.seeds
    families = [f.strip() for f in args.families.split(",")] if args.families else list(DEFAULT_FAMILIES)
    data_dir = _data_dir(args)
    dataset = load_dataset(data_dir)
    out_dir = Path(args.out) if args.out else settings.RUNS_DIR / "benchmark"
    outputs = [out_dir / name for name in ("report.json", "results.csv", "fig3.csv", "provenance.json")]
    try:
        report = run_benchmark(
            dataset,
            families,
            seeds,
            out_dir,
            config,
            presets.topology(dataset.config),
            presets.pmu_configs(),
            jobs=args.jobs,
            dataset_sha256=dataset_hashes(data_dir),
            generator_config_hash=dataset.config.digest() if dataset.config else "",
        )
    except IncompleteGridError:
        _write_manifest(args, out_dir, outputs, exit_code=EXIT_PARTIAL, seeds=seeds)
        raise
    print(emit_plot_data(report).to_string(index=False))
    _write_manifest(args, out_dir, outputs, seeds=seeds)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    components = [c.strip() for c in args.components.split(",")] if args.components else None
    table = run_gradcheck(components, seed=_seed(args))
    print(table.to_string(index=False, formatters={"max_rel_error": "{:.3e}".format}))
    out_dir = Path(args.out) if args.out else settings.RUNS_DIR / "gradcheck"
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "gradcheck.csv"
    table.to_csv(path, index=False)
    failed = table.loc[~table["passed"], "component"].tolist()
    code = EXIT_GRADCHECK if failed else EXIT_OK
    _write_manifest(args, out_dir, [path], exit_code=code, seeds=[_seed(args)])
    if failed:
        raise CommandFailed(EXIT_GRADCHECK, f"gradient check failed for: {', '.join(failed)}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report_path = Path(args.report)
    report = load_report(report_path)
    out_dir = Path(args.out) if args.out else report_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "fig3.csv"
    frame = emit_plot_data(report)
    frame.to_csv(path, index=False)
    print(frame.to_string(index=False))
    _write_manifest(args, out_dir, [path], seeds=report.provenance.seeds)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(PRESET_FILES), default="full", help="scenario grid preset")
    common.add_argument("--seed", type=int, default=None, help="root seed for every random stream")
    common.add_argument("--jobs", type=int, default=settings.JOBS, help="worker processes")

    parser = argparse.ArgumentParser(prog="pmu-fault", description="RNN and RNN+GNN fault detection on PMU data.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="simulate and store the dataset")
    gen.add_argument("--config", help="generator config JSON (overrides --preset)")
    gen.add_argument("--data", help="output dataset directory")
    gen.set_defaults(handler=cmd_gen)

    tr = sub.add_parser("train", parents=[common], help="train one model family")
    tr.add_argument("--family", required=True, help="gru_local, gru_agg, rgcn, rgsage[-mean|-max], rgat, rgatv2")
    tr.add_argument("--data", help="dataset directory")
    tr.add_argument("--train-config", help="training config JSON")
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--pmus", type=int, default=None, help="training PMU configuration size")
    tr.add_argument("--out", help="checkpoint directory")
    tr.set_defaults(handler=cmd_train)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on one PMU configuration")
    ev.add_argument("--checkpoint", required=True, help="checkpoint stem or .bin/.json path")
    ev.add_argument("--data", help="dataset directory")
    ev.add_argument("--pmus", type=int, default=11)
    ev.add_argument("--split", choices=["train", "validation", "test"], default="test")
    ev.add_argument("--out", help="output directory")
    ev.set_defaults(handler=cmd_eval)

    bm = sub.add_parser("benchmark", parents=[common], help="train on one configuration, test on all")
    bm.add_argument("--data", help="dataset directory")
    bm.add_argument("--families", help="comma-separated family list")
    bm.add_argument("--seeds", help="comma-separated training seeds")
    bm.add_argument("--train-config", help="training config JSON")
    bm.add_argument("--epochs", type=int, default=None)
    bm.add_argument("--out", help="output directory")
    bm.set_defaults(handler=cmd_benchmark)

    gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient checks")
    gc.add_argument("--components", help=f"subset of: {', '.join(COMPONENTS)}")
    gc.add_argument("--out", help="output directory")
    gc.set_defaults(handler=cmd_gradcheck)

    rp = sub.add_parser("report", parents=[common], help="regenerate fig3.csv from report.json")
    rp.add_argument("--report", required=True)
    rp.add_argument("--out", help="output directory")
    rp.set_defaults(handler=cmd_report)

    return parser


EXIT_CODES: Dict[type, int] = {
    DivergenceError: EXIT_DIVERGED,
    IncompleteGridError: EXIT_PARTIAL,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        with run_context(args.command):
            return handler(args)
    except CommandFailed as e:
        logger.error(str(e))
        return e.code
    except (DivergenceError, IncompleteGridError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_CODES[type(e)]
    except (FaultDetectionError, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {str(e)}", exc_info=True)
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"{args.command} crashed: {str(e)}", exc_info=True)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
