"""
Multi-seed strategy comparisons on synthetic data.

Emotion/AU comparison, per seed and under equal budgets:
    single_task_emotion, classical_mt, sjmt and the sjmt full-BCE ablation,
    scored by held-out emotion accuracy and AU coherence.

Compound comparison, per seed:
    single-task compound training against sjmt on compound + AU data,
    scored by the mean of per-class recalls on the held-out compound samples.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .data.facs import AU_SPACE_NAME, COMPOUND_SPACE_NAME, EMOTION_SPACE_NAME
from .data.synthetic import generate_compound, generate_synthetic
from .exceptions import ConfigError
from .experiment_pipeline import RunPlan, evaluate_network, reseeded, split_datasets, train_run
from .schemas import ExperimentConfig, Strategy

logger = logging.getLogger(__name__)

SINGLE_TASK_EMOTION = RunPlan("single_task_emotion", Strategy.SINGLE_TASK, (EMOTION_SPACE_NAME,))
CLASSICAL_MT = RunPlan("classical_mt", Strategy.CLASSICAL_MT, (EMOTION_SPACE_NAME, AU_SPACE_NAME))
SJMT = RunPlan("sjmt", Strategy.SJMT, (EMOTION_SPACE_NAME, AU_SPACE_NAME))
SJMT_FULL_BCE = RunPlan("sjmt_full_bce", Strategy.SJMT, (EMOTION_SPACE_NAME, AU_SPACE_NAME), full_bce=True)
EMOTION_PLANS = (SINGLE_TASK_EMOTION, CLASSICAL_MT, SJMT, SJMT_FULL_BCE)

SINGLE_TASK_COMPOUND = RunPlan("single_task_compound", Strategy.SINGLE_TASK, (COMPOUND_SPACE_NAME,))
SJMT_COMPOUND = RunPlan("sjmt_compound", Strategy.SJMT, (COMPOUND_SPACE_NAME, AU_SPACE_NAME))
COMPOUND_PLANS = (SINGLE_TASK_COMPOUND, SJMT_COMPOUND)

BENCHMARK_COLUMNS = ["experiment", "seed", "run", "metric", "value"]


@dataclass
class BenchmarkResult:
    """Long-format scores of every seed and run, with the comparison summaries derived from them."""
    scores: pd.DataFrame

    def values(self, experiment: str, run: str, metric: str) -> pd.Series:
        rows = self.scores[(self.scores.experiment == experiment) & (self.scores.run == run) & (self.scores.metric == metric)]
        return rows.set_index("seed")["value"].sort_index()

    def mean(self, experiment: str, run: str, metric: str) -> float:
        return float(self.values(experiment, run, metric).mean())

    def summary(self) -> pd.DataFrame:
        return (
            self.scores.groupby(["experiment", "run", "metric"], sort=False)["value"]
            .agg(["mean", "std", "count"])
            .reset_index()
        )

    def compound_wins(self) -> int:
        """Seeds where sjmt's mean compound recall beats single-task training."""
        joint = self.values("compound", SJMT_COMPOUND.name, "mean_recall")
        single = self.values("compound", SINGLE_TASK_COMPOUND.name, "mean_recall")
        return int((joint > single).sum())


def _row(experiment: str, seed: int, run: str, metric: str, value: float) -> Dict:
    return {"experiment": experiment, "seed": seed, "run": run, "metric": metric, "value": float(value)}


def compare_emotion_strategies(config: ExperimentConfig, seeds: Sequence[int], plans: Sequence[RunPlan] = EMOTION_PLANS) -> List[Dict]:
    rows = []
    for seed in seeds:
        seeded = reseeded(config, seed)
        emotion, au, _ = generate_synthetic(seeded.synthetic)
        train_sets, test_sets = split_datasets({emotion.name: emotion, au.name: au}, seeded)
        for plan in plans:
            net, _, _ = train_run(plan, seeded, train_sets, test_sets)
            metrics = evaluate_network(plan.name, plan.strategy, net, test_sets, seeded)
            rows.append(_row("emotion", seed, plan.name, "emotion_accuracy", metrics.accuracies[EMOTION_SPACE_NAME].overall_accuracy))
            if AU_SPACE_NAME in metrics.accuracies:
                rows.append(_row("emotion", seed, plan.name, "au_mean_accuracy", metrics.accuracies[AU_SPACE_NAME].mean_class_accuracy))
            if metrics.coherence is not None:
                rows.append(_row("emotion", seed, plan.name, "coherence", metrics.coherence.macro))
            logger.info(f"seed {seed} {plan.name}: emotion accuracy {metrics.accuracies[EMOTION_SPACE_NAME].overall_accuracy:.4f}")
    return rows


def compare_compound_strategies(config: ExperimentConfig, seeds: Sequence[int], plans: Sequence[RunPlan] = COMPOUND_PLANS) -> List[Dict]:
    rows = []
    for seed in seeds:
        seeded = reseeded(config, seed)
        if not seeded.synthetic.compound_classes:
            raise ConfigError("the compound comparison needs synthetic.compound_classes")
        _, au, _ = generate_synthetic(seeded.synthetic)
        compound = generate_compound(seeded.synthetic)
        train_sets, test_sets = split_datasets({compound.name: compound, au.name: au}, seeded)
        for plan in plans:
            net, _, _ = train_run(plan, seeded, train_sets, test_sets)
            report = evaluate_network(plan.name, plan.strategy, net, test_sets, seeded).accuracies[COMPOUND_SPACE_NAME]
            rows.append(_row("compound", seed, plan.name, "mean_recall", report.mean_recall if report.mean_recall is not None else np.nan))
            rows.append(_row("compound", seed, plan.name, "accuracy", report.overall_accuracy))
            logger.info(f"seed {seed} {plan.name}: mean compound recall {report.mean_recall}")
    return rows


def render_summary(result: BenchmarkResult) -> str:
    lines = [result.summary().to_string(index=False, float_format=lambda v: f"{v:.4f}"), ""]
    experiments = set(result.scores.experiment)
    if "emotion" in experiments:
        sjmt = result.mean("emotion", SJMT.name, "emotion_accuracy")
        lines.append(f"sjmt - single_task emotion accuracy: {100 * (sjmt - result.mean('emotion', SINGLE_TASK_EMOTION.name, 'emotion_accuracy')):+.2f} points")
        lines.append(f"sjmt - classical_mt emotion accuracy: {100 * (sjmt - result.mean('emotion', CLASSICAL_MT.name, 'emotion_accuracy')):+.2f} points")
        lines.append(
            f"coherence: sjmt {result.mean('emotion', SJMT.name, 'coherence'):.4f}, "
            f"full BCE ablation {result.mean('emotion', SJMT_FULL_BCE.name, 'coherence'):.4f}"
        )
    if "compound" in experiments:
        seeds = result.values("compound", SJMT_COMPOUND.name, "mean_recall").size
        lines.append(f"compound: sjmt beats single-task on {result.compound_wins()} of {seeds} seeds")
    return "\n".join(lines) + "\n"


def run_benchmark(
    config: ExperimentConfig,
    directory: Optional[Path] = None,
    seeds: Optional[Sequence[int]] = None,
    compound_seeds: Optional[Sequence[int]] = None,
) -> BenchmarkResult:
    """Runs both comparisons and, when `directory` is given, writes benchmark.csv and benchmark.txt."""
    seeds = list(seeds) if seeds is not None else config.benchmark.seeds
    compound_seeds = list(compound_seeds) if compound_seeds is not None else config.benchmark.compound_seeds
    rows = compare_emotion_strategies(config, seeds) if seeds else []
    if compound_seeds:
        rows.extend(compare_compound_strategies(config, compound_seeds))
    result = BenchmarkResult(scores=pd.DataFrame(rows, columns=BENCHMARK_COLUMNS))
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        result.scores.to_csv(directory / "benchmark.csv", index=False, lineterminator="\n")
        (directory / "benchmark.txt").write_text(render_summary(result))
        logger.info(f"Wrote benchmark results to {directory}")
    return result
