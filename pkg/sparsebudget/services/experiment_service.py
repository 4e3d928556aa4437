"""
Experiment service: builds the instance, budget and smoothness profile of a
config, runs the seeded trials in a worker pool and writes trace, aggregate
and summary files.
"""
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

from sparsebudget.core.config import settings
from sparsebudget.core.errors import ConfigurationError
from sparsebudget.schemas.budget import Budget, SmoothnessProfile
from sparsebudget.schemas.experiment import Algorithm, DataSource, ExperimentConfig
from sparsebudget.schemas.metrics import (
    AGGREGATE_COLUMNS,
    TRACE_COLUMNS,
    ExperimentSummary,
    TraceRecord,
    TrialSummary,
    ValidationSummary,
)
from sparsebudget.schemas.schedules import HybridConfig
from sparsebudget.services.data_env import (
    ProblemInstance,
    SamplingEnvironment,
    load_csv_dataset,
    make_desk_instance,
    make_rng,
    make_synthetic_instance,
    make_synthetic_section6,
)
from sparsebudget.services.metrics import exact_excess_risk, r_min, value_at_examples
from sparsebudget.services.optimizers import (
    RunTrace,
    TraceRecorder,
    initial_gap,
    run_exploitation,
    run_exploration,
    run_hybrid,
    run_naive_exploration,
)
from sparsebudget.services.plot_service import emit_plot
from sparsebudget.services.theory import (
    contraction_diagnostics,
    estimate_smoothness_profile,
    proof_batch_size,
    schedule_sizes,
    support_identification_round,
    synthetic_profile,
    validate_parameters,
)
from sparsebudget.utils.config_io import write_resolved_config
from sparsebudget.utils.fingerprint import fingerprint

logger = logging.getLogger(__name__)

X_AXIS_NOTE = "per-update snapshots plotted against cumulative examples"


@dataclass
class TrialContext:
    """Everything a trial needs; shipped once to each worker process"""

    config: ExperimentConfig
    instance: ProblemInstance
    budget: Budget
    profile: SmoothnessProfile
    eta: float
    config_hash: str


def execute_trial(context: TrialContext, trial: int) -> RunTrace:
    """One seeded run from theta0 = 0; seed = base_seed + trial"""
    config, budget = context.config, context.budget
    seed = config.experiment.base_seed + trial
    env = SamplingEnvironment(context.instance, budget.s_prime, seed=seed)
    recorder = TraceRecorder(cadence=config.experiment.cadence, trial=trial)
    theta0 = np.zeros(budget.d)
    algorithm = config.experiment.algorithm
    T = config.optimizer.T

    if algorithm in (Algorithm.EXPLORATION, Algorithm.FULL_INFO):
        _, trace = run_exploration(
            theta0, context.eta, budget, config.schedule, T, env,
            recorder=recorder, profile=context.profile,
        )
    elif algorithm is Algorithm.EXPLOITATION:
        support0 = [j - 1 for j in config.optimizer.init_support]
        _, trace = run_exploitation(
            theta0, context.eta, config.schedule, T, env, support0=support0,
            recorder=recorder, profile=context.profile, budget=budget,
        )
    elif algorithm is Algorithm.HYBRID:
        hybrid = HybridConfig(
            K=config.hybrid.K,
            T_minus=config.hybrid.T_minus,
            T_k=config.hybrid.T_k,
            explore_schedule=config.schedule,
            exploit_schedule=config.exploit_schedule,
            eta=context.eta,
            budget=budget,
            profile=context.profile,
            c_T=config.hybrid.c_T,
        )
        _, trace = run_hybrid(theta0, hybrid, env, recorder=recorder)
    else:
        _, trace = run_naive_exploration(theta0, context.eta, budget, T, env, recorder=recorder)

    trace.metadata.update(trial=trial, seed=seed, config_hash=context.config_hash)
    return trace


_worker_context: Dict[str, TrialContext] = {}


def _init_worker(context: TrialContext) -> None:
    _worker_context["context"] = context


def _run_in_worker(trial: int) -> RunTrace:
    return execute_trial(_worker_context["context"], trial)


def write_trace_csv(path: Path, records: Sequence[TraceRecord]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(record.csv_row() for record in records)
    return path


def _mean_two_std(values: List[float]) -> Tuple[float, float]:
    mean = float(np.mean(values))
    spread = 2.0 * float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, spread


def aggregate_traces(traces: Sequence[Sequence[TraceRecord]]) -> List[List[str]]:
    """Mean and 2*std over trials on the union grid of cum_examples (LOCF alignment)"""
    grid = sorted({record.cum_examples for records in traces for record in records})
    rows = []
    for n in grid:
        mse = [value_at_examples(records, n, "test_mse") for records in traces]
        mse = [value for value in mse if value is not None]
        risk = [value_at_examples(records, n, "excess_risk") for records in traces]
        risk = [value for value in risk if value is not None]
        mean_mse, spread_mse = _mean_two_std(mse)
        row = [str(n), str(len(mse)), repr(mean_mse), repr(spread_mse)]
        if risk:
            mean_risk, spread_risk = _mean_two_std(risk)
            row += [repr(mean_risk), repr(spread_risk)]
        else:
            row += ["", ""]
        rows.append(row)
    return rows


def write_aggregate_csv(path: Path, traces: Sequence[Sequence[TraceRecord]]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        writer.writerows(aggregate_traces(traces))
    return path


class ExperimentService:
    """Service for running configured experiments"""

    def build_instance(self, config: ExperimentConfig) -> ProblemInstance:
        data = config.data
        if data.source is DataSource.CSV:
            return load_csv_dataset(
                data.csv_path,
                data.target,
                standardize=data.standardize,
                split_ratio=data.split_ratio,
                split_seed=data.split_seed,
            )
        if data.source is DataSource.SECTION6:
            return make_synthetic_section6(n=data.n_rows, seed=data.data_seed)
        if data.source is DataSource.DESK:
            return make_desk_instance(
                sigma=data.sigma, n_rows=data.n_rows, seed=data.data_seed,
                test_size=data.test_size,
            )
        return make_synthetic_instance(
            d=data.d,
            s_star=data.s_star,
            sigma=data.sigma,
            law=data.law.value,
            r_inf=data.r_inf,
            amplitude=data.amplitude,
            n_rows=data.n_rows,
            test_size=data.test_size,
            seed=data.data_seed,
        )

    def build_budget(self, config: ExperimentConfig, instance: ProblemInstance) -> Budget:
        s_star = config.budget.s_star or instance.s_star
        s_prime = config.budget.s_prime
        if config.experiment.algorithm is Algorithm.FULL_INFO:
            s_prime = instance.d
            logger.info(f"🔍 Full-information mode: s' raised to d={instance.d}")
        try:
            return Budget(d=instance.d, s_star=s_star, s=config.budget.s, s_prime=s_prime)
        except ValidationError as e:
            raise ConfigurationError(f"invalid budget: {e.errors()[0]['msg']}") from e

    def build_profile(
        self, config: ExperimentConfig, instance: ProblemInstance, budget: Budget
    ) -> SmoothnessProfile:
        optimizer = config.optimizer
        try:
            if optimizer.L_s is not None and optimizer.mu_s is not None:
                return SmoothnessProfile(
                    L_s=optimizer.L_s, mu_s=optimizer.mu_s, r_inf=instance.r_inf,
                    alpha_check=optimizer.alpha_check, r_effective=optimizer.r_effective,
                )
            if instance.covariance_scale is not None:
                return synthetic_profile(instance, optimizer.alpha_check, optimizer.r_effective)
        except ValidationError as e:
            raise ConfigurationError(f"invalid smoothness profile: {e.errors()[0]['msg']}") from e
        return estimate_smoothness_profile(
            instance.train_X,
            budget.s,
            make_rng(config.data.split_seed),
            n_supports=optimizer.profile_supports,
            r_inf=instance.r_inf,
            alpha_check=optimizer.alpha_check,
            r_effective=optimizer.r_effective,
        )

    def prepare(self, config: ExperimentConfig) -> TrialContext:
        instance = self.build_instance(config)
        budget = self.build_budget(config, instance)
        profile = self.build_profile(config, instance, budget)
        eta = config.optimizer.eta or 1.0 / (4.0 * profile.L_s)
        return TrialContext(
            config=config, instance=instance, budget=budget, profile=profile, eta=eta,
            config_hash=fingerprint.digest(config),
        )

    def output_directory(self, config: ExperimentConfig, config_hash: str) -> Path:
        if config.output.directory is not None:
            return Path(config.output.directory)
        return Path(settings.OUTPUT_ROOT) / config_hash

    def _run_trials(self, context: TrialContext) -> List[RunTrace]:
        trials = context.config.experiment.trials
        workers = context.config.experiment.workers
        if workers is None or workers == 0:
            workers = settings.worker_count()
        workers = min(workers, trials)
        progress = tqdm(total=trials, desc="trials", disable=not settings.PROGRESS)

        traces: Dict[int, RunTrace] = {}
        if workers == 1:
            for trial in range(trials):
                traces[trial] = execute_trial(context, trial)
                progress.update(1)
        else:
            with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(context,)
            ) as pool:
                futures = {pool.submit(_run_in_worker, trial): trial for trial in range(trials)}
                for future in as_completed(futures):
                    traces[futures[future]] = future.result()
                    progress.update(1)
        progress.close()
        return [traces[trial] for trial in range(trials)]

    def _run_metadata(self, context: TrialContext) -> Dict[str, Any]:
        instance, budget, profile = context.instance, context.budget, context.profile
        metadata: Dict[str, Any] = {
            "x_axis": X_AXIS_NOTE,
            "eta": context.eta,
            "budget": budget.model_dump(),
            "profile": profile.model_dump(mode="json"),
            "instance": instance.metadata,
        }
        if "split_seed" in instance.metadata:
            metadata["split_seed"] = instance.metadata["split_seed"]
        metadata["standardize"] = bool(instance.metadata.get("standardize", False))
        if context.config.experiment.algorithm is Algorithm.HYBRID and instance.theta_star is not None:
            gap = exact_excess_risk(np.zeros(budget.d), instance)
            if gap:
                metadata["predicted_support_round"] = support_identification_round(
                    profile, gap, r_min(instance.theta_star)
                )
        return metadata

    def run_experiment(
        self, config: ExperimentConfig, output_dir: Optional[Path] = None
    ) -> ExperimentSummary:
        """Run every trial and write trace, aggregate, curve, summary and resolved-config files"""
        config_hash = fingerprint.digest(config)
        logger.info(
            f"🚀 Running {config.experiment.algorithm.value} x{config.experiment.trials} "
            f"(config {config_hash})"
        )
        context = self.prepare(config)
        out = Path(output_dir) if output_dir is not None else self.output_directory(config, config_hash)
        out.mkdir(parents=True, exist_ok=True)

        traces = self._run_trials(context)
        trial_summaries = []
        for trace in traces:
            trial = trace.metadata["trial"]
            trace_file = write_trace_csv(out / f"trace_trial{trial}.csv", trace.records)
            last = trace.records[-1]
            trial_summaries.append(
                TrialSummary(
                    trial=trial,
                    seed=trace.metadata["seed"],
                    final_metrics=last.metrics,
                    total_examples=last.cum_examples,
                    total_attribute_reads=last.cum_attribute_reads,
                    n_updates=last.update_index,
                    trace_file=trace_file.name,
                )
            )

        aggregate_file = write_aggregate_csv(out / "aggregate.csv", [t.records for t in traces])
        emit_plot([aggregate_file], out / "curve.svg", log_y=config.output.log_y)
        write_resolved_config(config, out / "resolved_config.ini")
        metadata = self._run_metadata(context)
        metadata["runs"] = [trace.metadata for trace in traces]
        summary = ExperimentSummary(
            config_hash=config_hash,
            algorithm=config.experiment.algorithm.value,
            trials=trial_summaries,
            aggregate_file=aggregate_file.name,
            metadata=metadata,
        )
        (out / "summary.json").write_text(summary.model_dump_json(indent=2), encoding="utf-8")

        final_mse = np.mean([s.final_metrics.test_mse for s in trial_summaries])
        logger.info(f"📊 Mean final test MSE {final_mse:.6g} over {len(traces)} trials")
        logger.info(f"💾 Wrote results to {out}")
        return summary

    def validate(self, config: ExperimentConfig) -> ValidationSummary:
        """Parameter-choice report for the first update of the configured run"""
        context = self.prepare(config)
        budget, profile, eta = context.budget, context.profile, context.eta
        T = config.optimizer.T
        sigma = context.instance.sigma if context.instance.sigma is not None else 1.0
        delta_t = config.schedule.confidence / (2 * T)

        Delta = config.schedule.target
        if Delta is None and sigma > 0:
            probe = SamplingEnvironment(context.instance, budget.s_prime, seed=config.experiment.base_seed)
            Delta = initial_gap(np.zeros(budget.d), probe)
        B_t = schedule_sizes(config.schedule, T, profile, budget, sigma=sigma, Delta=Delta)[0]

        report = validate_parameters(eta, budget.s, budget, profile, B_t, delta_t)
        contraction = contraction_diagnostics(eta, budget.s, budget, profile, B_t, sigma, delta_t)
        proof_B = None
        if math.isfinite(profile.r_bound):
            proof_B = proof_batch_size(eta, budget.s, budget, profile, sigma, Delta or 1.0, T, delta_t)
        else:
            logger.warning("⚠️ R_inf is infinite: set r_effective for the proof batch size")
        return ValidationSummary(
            eta=eta,
            batch_size=B_t,
            delta_t=delta_t,
            report=report,
            contraction=contraction,
            proof_batch_size=proof_B,
        )


# Global service instance
experiment_service = ExperimentService()
