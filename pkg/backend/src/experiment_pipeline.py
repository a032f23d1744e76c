"""
Experiment pipeline behind the command line.

    generate   synthetic emotion, AU and compound datasets plus ground truth
    train      one run per requested strategy, equal budgets
    eval       held-out accuracy, AU-score matrix and coherence per run, then the report
    report     rebuilds the report from the stored per-run metrics
    gradcheck  the finite-difference suite
    benchmark  multi-seed strategy comparisons

Output layout under the output directory:

    data/               <dataset>.csv + <dataset>.json, ground_truth.csv
    runs/<run>/         checkpoint.json, train_log.csv, validation.csv, summary.json, metrics.json
    report/             report.csv, report.txt, matrix.csv, matrix_<run>.csv
    benchmark/          benchmark.csv, benchmark.txt
"""
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError

from . import config as env
from .data.dataset import Dataset, GroundTruth, balanced_split, train_test_split
from .data.dataset_io import load_dataset, save_all, save_ground_truth
from .data.facs import AU_SPACE_NAME, COMPOUND_SPACE_NAME, EMOTION_SPACE_NAME
from .data.synthetic import generate_compound, generate_synthetic
from .evaluation.au_scores import au_mean_score_matrix, coherence_score
from .evaluation.metrics import dataset_accuracy, validation_metrics
from .evaluation.report import ExperimentReport, RunMetrics, build_report, write_report
from .exceptions import ArtifactMismatchError, ConfigError, VerificationError
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.network import Network, network_spec_for
from .schemas import ExperimentConfig, Strategy, TrainConfig, TrainSummary
from .training.train_log import TrainLog
from .training.trainer import train
from .verification import SuiteResult, SuiteSize, run_gradcheck_suite

logger = logging.getLogger(__name__)

ALL_STRATEGIES = "all"
JOINT_DATASETS = [EMOTION_SPACE_NAME, AU_SPACE_NAME]
GROUND_TRUTH_FILE = "ground_truth.csv"
CHECKPOINT_FILE = "checkpoint.json"
METRICS_FILE = "metrics.json"


# --- Configuration --- #

def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"])


def parse_experiment_config(raw: dict) -> ExperimentConfig:
    """
    Validates a config mapping.

    Raises:
        ConfigError: Naming the dotted path of the first invalid field.
    """
    try:
        return ExperimentConfig.model_validate(raw or {})
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(f"{_field_path(first)}: {first['msg']} ({len(e.errors())} error(s) in config)") from e


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    """
    Reads, validates and resolves the YAML experiment config.

    Args:
        path: Config file. When None the default path is used, or built-in defaults
            if that file does not exist.
        seed: Overrides the global seed (and every section seed derived from it).

    Raises:
        ConfigError: Missing or unreadable file, or invalid contents.
    """
    if path is None:
        path = env.get_default_config_path()
        if not Path(path).exists():
            logger.warning(f"No config file at {path}; using built-in defaults")
            raw: dict = {}
        else:
            raw = _read_yaml(Path(path))
    else:
        raw = _read_yaml(Path(path))
    if seed is not None:
        raw = {**raw, "seed": seed}
    return parse_experiment_config(raw).resolved()


def _read_yaml(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from e
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping at the top level")
    return raw or {}


def reseeded(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Copy of `config` with a new global seed and every section seed derived from it."""
    data = config.model_dump()
    data["seed"] = seed
    for section in ("synthetic", "network", "train"):
        data[section]["seed"] = None
    return ExperimentConfig.model_validate(data).resolved()


@dataclass
class OutputPaths:
    root: Path

    @classmethod
    def resolve(cls, config: ExperimentConfig, out: Optional[Union[str, Path]] = None) -> "OutputPaths":
        """--out beats SANGAM_OUTPUT_DIR, which beats the config file."""
        root = out or env.OUTPUT_DIR_OVERRIDE or config.output_dir
        return cls(root=Path(root))

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def runs(self) -> Path:
        return self.root / "runs"

    @property
    def report(self) -> Path:
        return self.root / "report"

    def run_dir(self, run: str) -> Path:
        return self.runs / run


# --- Generation --- #

def generate_datasets(config: ExperimentConfig) -> Tuple[List[Dataset], GroundTruth]:
    emotion, au, ground_truth = generate_synthetic(config.synthetic)
    datasets = [emotion, au]
    if config.synthetic.include_compound:
        datasets.append(generate_compound(config.synthetic))
    return datasets, ground_truth


def run_generate(config: ExperimentConfig, paths: OutputPaths) -> List[Path]:
    """Writes every dataset and the ground-truth sidecar. Returns the written files."""
    datasets, ground_truth = generate_datasets(config)
    written: List[Path] = []
    for manifest in save_all(datasets, paths.data):
        written.extend([manifest.with_suffix(".csv"), manifest])
    written.append(save_ground_truth(ground_truth, paths.data / GROUND_TRUTH_FILE))
    logger.info(f"Generated {len(datasets)} datasets into {paths.data}")
    return written


def load_generated(paths: OutputPaths) -> Dict[str, Dataset]:
    """
    Loads every dataset manifest found in the data directory.

    Raises:
        ArtifactMismatchError: If the directory holds no datasets.
    """
    manifests = sorted(paths.data.glob("*.json")) if paths.data.exists() else []
    if not manifests:
        raise ArtifactMismatchError(f"no datasets in {paths.data}; run `generate` first")
    datasets = {}
    for manifest in manifests:
        dataset = load_dataset(manifest)
        datasets[dataset.name] = dataset
    return datasets


def split_datasets(datasets: Dict[str, Dataset], config: ExperimentConfig) -> Tuple[Dict[str, Dataset], Dict[str, Dataset]]:
    """Held-out splits: random test_fraction for emotion/AU data, per-class quota for compounds."""
    train_sets, test_sets = {}, {}
    for name, dataset in datasets.items():
        if name == COMPOUND_SPACE_NAME:
            train_sets[name], test_sets[name] = balanced_split(dataset, config.synthetic.compound_train_per_class, config.synthetic.seed)
        else:
            train_sets[name], test_sets[name] = train_test_split(dataset, config.synthetic.test_fraction, config.synthetic.seed)
    return train_sets, test_sets


# --- Training --- #

@dataclass(frozen=True)
class RunPlan:
    name: str
    strategy: Strategy
    datasets: Tuple[str, ...]
    full_bce: bool = False


def planned_runs(config: ExperimentConfig, strategy: Union[str, Strategy] = ALL_STRATEGIES) -> List[RunPlan]:
    """Runs for a --strategy choice: single_task per configured dataset, classical_mt and sjmt on emotion + AU."""
    chosen = list(Strategy) if strategy == ALL_STRATEGIES else [Strategy(strategy)]
    plans = []
    for s in chosen:
        if s == Strategy.SINGLE_TASK:
            plans.extend(RunPlan(f"single_task_{name}", s, (name,)) for name in config.train.single_task_datasets)
        else:
            plans.append(RunPlan(s.value, s, tuple(JOINT_DATASETS)))
    return plans


def run_config(plan: RunPlan, config: ExperimentConfig) -> TrainConfig:
    train_config = config.train.for_strategy(plan.strategy, config.seed)
    if plan.full_bce:
        train_config = train_config.model_copy(update={"full_bce": True})
    return train_config


def _select(datasets: Dict[str, Dataset], names: Sequence[str], plan: RunPlan) -> List[Dataset]:
    missing = [name for name in names if name not in datasets]
    if missing:
        raise ConfigError(f"run '{plan.name}' needs datasets {missing}, available: {sorted(datasets)}")
    return [datasets[name] for name in names]


def train_run(
    plan: RunPlan,
    config: ExperimentConfig,
    train_sets: Dict[str, Dataset],
    test_sets: Dict[str, Dataset],
    run_dir: Optional[Path] = None,
) -> Tuple[Network, TrainLog, TrainConfig]:
    datasets = _select(train_sets, plan.datasets, plan)
    spec = network_spec_for(
        plan.strategy,
        [d.label_space for d in datasets],
        datasets[0].feature_dim,
        config.network,
        seed=config.network.seed,
    )
    train_config = run_config(plan, config)
    validation = _select(test_sets, plan.datasets, plan)
    net, log = train(plan.strategy, datasets, spec, train_config, validation=validation, checkpoint_dir=run_dir)
    return net, log, train_config


def run_train(
    config: ExperimentConfig,
    paths: OutputPaths,
    strategy: Union[str, Strategy] = ALL_STRATEGIES,
) -> List[TrainSummary]:
    """Trains every planned run and writes its checkpoint, log and summary."""
    train_sets, test_sets = split_datasets(load_generated(paths), config)
    summaries = []
    for plan in planned_runs(config, strategy):
        run_dir = paths.run_dir(plan.name)
        run_dir.mkdir(parents=True, exist_ok=True)
        net, log, train_config = train_run(plan, config, train_sets, test_sets, run_dir)
        save_checkpoint(net, run_dir / CHECKPOINT_FILE, strategy=plan.strategy, train_seed=train_config.seed, step=train_config.total_steps)
        log.save(run_dir / "train_log.csv", validation_path=run_dir / "validation.csv")

        summary = TrainSummary(
            run=plan.name,
            strategy=plan.strategy,
            datasets=list(plan.datasets),
            seed=train_config.seed,
            total_steps=train_config.total_steps,
            final_lr=log.steps[-1].lr,
            final_smoothed_loss=log.smoothed_loss,
            validation=validation_metrics(net, _select(test_sets, plan.datasets, plan)),
            config=train_config.model_dump(mode="json"),
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        (run_dir / "summary.json").write_text(summary.model_dump_json(indent=2) + "\n")
        summaries.append(summary)
        logger.info(f"Run '{plan.name}' done: {summary.validation}")
    return summaries


# --- Evaluation --- #

def evaluate_network(
    run: str,
    strategy: Strategy,
    net: Network,
    test_sets: Dict[str, Dataset],
    config: ExperimentConfig,
) -> RunMetrics:
    """Held-out accuracy per carried space; AU-score matrix and coherence when the net carries emotion and AU."""
    carried = [space.name for space in net.label_spaces]
    accuracies = {name: dataset_accuracy(net, test_sets[name]) for name in carried if name in test_sets}
    matrix = coherence = None
    if EMOTION_SPACE_NAME in carried and AU_SPACE_NAME in carried and EMOTION_SPACE_NAME in test_sets:
        matrix = au_mean_score_matrix(net, test_sets[EMOTION_SPACE_NAME], group_by=config.eval.group_by)
        coherence = coherence_score(matrix, config.synthetic.emotion_to_aus, k=config.eval.coherence_k)
    return RunMetrics(run=run, strategy=Strategy(strategy), accuracies=accuracies, matrix=matrix, coherence=coherence)


def _existing_runs(config: ExperimentConfig, paths: OutputPaths, runs: Optional[Sequence[str]]) -> List[str]:
    if runs:
        names = list(runs)
    else:
        planned = [plan.name for plan in planned_runs(config)]
        found = sorted(p.name for p in paths.runs.iterdir() if (p / CHECKPOINT_FILE).exists()) if paths.runs.exists() else []
        names = [n for n in planned if n in found] + [n for n in found if n not in planned]
    missing = [n for n in names if not (paths.run_dir(n) / CHECKPOINT_FILE).exists()]
    if missing or not names:
        raise ArtifactMismatchError(f"no checkpoint for run(s) {missing or names} under {paths.runs}; run `train` first")
    return names


def run_eval(
    config: ExperimentConfig,
    paths: OutputPaths,
    runs: Optional[Sequence[str]] = None,
) -> ExperimentReport:
    """
    Evaluates stored checkpoints on the held-out splits and writes the report.

    Raises:
        ArtifactMismatchError: Missing checkpoints, or a checkpoint whose label spaces
            differ from the generated datasets.
    """
    datasets = load_generated(paths)
    _, test_sets = split_datasets(datasets, config)
    results = []
    for run in _existing_runs(config, paths, runs):
        raw = json.loads((paths.run_dir(run) / CHECKPOINT_FILE).read_text())
        names = [space["name"] for space in raw.get("network_spec", {}).get("label_spaces", [])]
        unknown = [name for name in names if name not in datasets]
        if unknown:
            raise ArtifactMismatchError(f"run '{run}' covers label spaces {unknown} missing from {paths.data}")
        net, document = load_checkpoint(paths.run_dir(run) / CHECKPOINT_FILE, expected_spaces=[datasets[n].label_space for n in names])
        metrics = evaluate_network(run, document.strategy or Strategy.SJMT, net, test_sets, config)
        (paths.run_dir(run) / METRICS_FILE).write_text(json.dumps(metrics.to_dict(), indent=2) + "\n")
        results.append(metrics)
    report = build_report(results)
    write_report(report, paths.report)
    return report


def run_report(config: ExperimentConfig, paths: OutputPaths, runs: Optional[Sequence[str]] = None) -> ExperimentReport:
    """Rebuilds the report from the metrics.json files written by `eval`."""
    names = _existing_runs(config, paths, runs)
    results = []
    for run in names:
        path = paths.run_dir(run) / METRICS_FILE
        if not path.exists():
            raise ArtifactMismatchError(f"run '{run}' has no {METRICS_FILE}; run `eval` first")
        results.append(RunMetrics.from_dict(json.loads(path.read_text())))
    report = build_report(results)
    write_report(report, paths.report)
    return report


# --- Verification --- #

def run_gradcheck(size: Union[str, SuiteSize] = SuiteSize.SMALL) -> SuiteResult:
    """Runs the gradient check suite; require_passed turns failures into an error."""
    return run_gradcheck_suite(SuiteSize(size))


def require_passed(result: SuiteResult) -> SuiteResult:
    """
    Raises:
        VerificationError: Listing every failing check.
    """
    if not result.passed:
        raise VerificationError(f"{len(result.failing)} gradient check(s) failed: {', '.join(result.failing)}", failed_checks=result.failing)
    return result
