"""Replicated sampling experiments with a hard determinism contract.

The engine draws SRSWOR or nested two-phase samples from a fixed
population, evaluates every requested estimator on the same draw
(paired comparison), and reports empirical mean, bias, MSE and
efficiency next to their first-order theoretical counterparts.

Determinism contract
--------------------
A report is a pure function of the population and the configuration.
Each replication gets its own counter-based substream,
``Philox(key=seed)`` jumped by the replication index, so replication
``i`` sees identical randomness no matter which process evaluates it,
in what order, or alongside which other replications.  Work is split
into fixed-size chunks (independent of worker count) and results are
assembled in replication order, so the means are computed over
identical arrays every time.  Running with one worker or eight gives
byte-identical reports.

Failed replications (a sample with zero auxiliary variance, or a
plug-in weight with no unique optimum) are counted, and their draws are
dropped for every estimator alike to preserve pairing.  More than 0.1
percent failures aborts the run: at that point the population is
unsuited to the estimators and aggregate numbers would mislead.
"""

from __future__ import annotations

import enum
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePopulationError,
    DegenerateSampleError,
    InvalidDesignError,
    InvalidInputError,
    NoUniqueOptimumError,
    SimulationError,
)
from .estimators import (
    UNBIASED,
    AuxKnowledge,
    EstimatorKind,
    Family,
    TwoPhaseDraw,
    alpha_opt,
    single_phase_value,
    two_phase_value,
)
from .moments import DeltaTable, Population, delta_table
from .theory import DesignSizes, pre, theory_for_kind

#: Replications per work unit.  Fixed (never derived from the worker
#: count) so that the chunk boundaries, and with them the assembled
#: result arrays, are identical for every parallel schedule.
CHUNK_SIZE = 2048


class WeightPolicy(enum.Enum):
    """How combined-kind weights are chosen during a run.

    ``FIXED`` requires every combined kind to carry an explicit weight.
    ``POPULATION_OPTIMAL`` (default) fills missing weights with the
    optimum computed from the population moment table, the right mode
    for checking theory, which assumes known moments.  ``PLUG_IN``
    re-estimates missing weights from each drawn sample, quantifying
    the practical estimator; explicitly carried weights are honored
    under every policy.
    """

    FIXED = "fixed"
    POPULATION_OPTIMAL = "population-optimal"
    PLUG_IN = "plug-in"


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs of a simulation run, population excluded.

    ``estimators`` may not be empty; an unbiased baseline is prepended
    automatically when missing (empirical PRE needs it and it costs
    nothing).  ``nprime`` must be present iff a two-phase kind is
    requested, and strictly exceeds ``n``: these are sizes for actual
    draws, not for degenerate theory evaluations.
    """

    n: int
    reps: int
    seed: int
    estimators: tuple[EstimatorKind, ...]
    nprime: int | None = None
    weight_policy: WeightPolicy = WeightPolicy.POPULATION_OPTIMAL

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 2:
            raise InvalidInputError(f"sample size n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.reps, int) or isinstance(self.reps, bool) or self.reps < 1:
            raise InvalidInputError(f"reps must be a positive integer, got {self.reps!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        kinds = tuple(self.estimators)
        if not kinds:
            raise InvalidInputError("at least one estimator kind is required")
        for kind in kinds:
            if not isinstance(kind, EstimatorKind):
                raise InvalidInputError(f"estimators must be EstimatorKind instances, got {kind!r}")
        object.__setattr__(self, "estimators", kinds)
        if self.nprime is not None:
            if not isinstance(self.nprime, int) or isinstance(self.nprime, bool):
                raise InvalidInputError(f"nprime must be an integer, got {self.nprime!r}")
            if self.nprime <= self.n:
                raise InvalidDesignError(
                    f"first-phase size nprime={self.nprime} must exceed n={self.n}"
                )
        else:
            for kind in kinds:
                if kind.is_two_phase:
                    raise InvalidDesignError(
                        f"estimator {kind.label!r} needs a first-phase size; pass nprime"
                    )
        if not isinstance(self.weight_policy, WeightPolicy):
            raise InvalidInputError(
                f"weight_policy must be a WeightPolicy, got {self.weight_policy!r}"
            )


def draw_srswor(stream: np.random.Generator, n_pop: int, n_sample: int) -> np.ndarray:
    """Draw a uniform random ``n_sample``-subset of ``{0..n_pop-1}``.

    Partial Fisher-Yates with a sparse slot map: only the array
    positions actually touched are tracked, so a draw costs O(n_sample)
    regardless of the population size, and every subset is exactly
    equally probable.
    """
    if not isinstance(n_pop, int) or isinstance(n_pop, bool) or n_pop < 1:
        raise InvalidInputError(f"population size must be a positive integer, got {n_pop!r}")
    if not isinstance(n_sample, int) or isinstance(n_sample, bool) or n_sample < 1:
        raise InvalidInputError(f"sample size must be a positive integer, got {n_sample!r}")
    if n_sample > n_pop:
        raise InvalidInputError(f"cannot draw {n_sample} units from a population of {n_pop}")
    return _srswor(stream, n_pop, n_sample)


def _srswor(stream: np.random.Generator, n_pop: int, n_sample: int) -> np.ndarray:
    positions = stream.integers(np.arange(n_sample), n_pop)
    picked = np.empty(n_sample, dtype=np.int64)
    slots: dict[int, int] = {}
    for i in range(n_sample):
        j = int(positions[i])
        picked[i] = slots.pop(j, j)
        if j != i:
            slots[j] = slots.pop(i, i)
    return picked


def draw_two_phase(
    stream: np.random.Generator, n_pop: int, nprime: int, n: int
) -> TwoPhaseDraw:
    """Draw a nested two-phase sample: SRSWOR of ``nprime`` from the
    population, then SRSWOR of ``n`` from that first-phase sample.
    """
    if not isinstance(nprime, int) or isinstance(nprime, bool):
        raise InvalidDesignError(f"nprime must be an integer, got {nprime!r}")
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidDesignError(f"n must be an integer, got {n!r}")
    if not 2 <= n < nprime <= n_pop:
        raise InvalidDesignError(
            f"two-phase sizes must satisfy 2 <= n < nprime <= N, got n={n}, "
            f"nprime={nprime}, N={n_pop}"
        )
    first = _srswor(stream, n_pop, nprime)
    second = first[_srswor(stream, nprime, n)]
    return TwoPhaseDraw(first_phase=first, second_phase=second)


def _sample_delta_table(ys: np.ndarray, xs: np.ndarray, zs: np.ndarray) -> DeltaTable:
    """Divisor-n moment table of a drawn sample, for plug-in weights."""
    squared = []
    for name, values in (("y", ys), ("x", xs), ("z", zs)):
        deviations = values - values.mean()
        sq = deviations * deviations
        if float(sq.mean()) <= 0.0:
            raise DegenerateSampleError(
                f"sample variate {name!r} has zero variance; cannot estimate moments"
            )
        squared.append(sq)
    y2, x2, z2 = squared
    my, mx, mz = float(y2.mean()), float(x2.mean()), float(z2.mean())
    return DeltaTable(
        d400=float((y2 * y2).mean()) / (my * my),
        d040=float((x2 * x2).mean()) / (mx * mx),
        d004=float((z2 * z2).mean()) / (mz * mz),
        d220=float((y2 * x2).mean()) / (my * mx),
        d202=float((y2 * z2).mean()) / (my * mz),
        d022=float((x2 * z2).mean()) / (mx * mz),
    )


@dataclass(frozen=True)
class _Plan:
    """Everything a worker needs to evaluate a range of replications."""

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    n: int
    nprime: int | None
    seed: int
    kinds: tuple[EstimatorKind, ...]
    weights: tuple[float | None, ...]  # None = plug-in, re-estimated per draw
    aux_sx2: float | None
    aux_sz2: float | None
    need_x_second: bool
    need_z_second: bool
    need_x_first: bool
    need_z_first: bool


def _simulate_chunk(plan: _Plan, start: int, stop: int) -> tuple[np.ndarray, np.ndarray, str | None]:
    """Evaluate replications ``start..stop-1``; pure in (plan, range)."""
    n_pop = plan.y.size
    count = stop - start
    values = np.full((count, len(plan.kinds)), np.nan)
    failed = np.zeros(count, dtype=bool)
    first_failure: str | None = None
    aux = AuxKnowledge(sx2=plan.aux_sx2, sz2=plan.aux_sz2)
    plug_in_needed = any(
        kind.is_combined and weight is None
        for kind, weight in zip(plan.kinds, plan.weights)
    )
    key = plan.seed
    for offset in range(count):
        rep = start + offset
        stream = np.random.Generator(np.random.Philox(key=key).jumped(rep))
        if plan.nprime is not None:
            first = _srswor(stream, n_pop, plan.nprime)
            second = first[_srswor(stream, plan.nprime, plan.n)]
        else:
            first = None
            second = _srswor(stream, n_pop, plan.n)
        ys = plan.y[second]
        sy2 = float(np.var(ys, ddof=1))
        try:
            xs = zs = None
            sx2 = sz2 = sx2_first = sz2_first = None
            if plan.need_x_second:
                xs = plan.x[second]
                sx2 = float(np.var(xs, ddof=1))
            if plan.need_z_second:
                zs = plan.z[second]
                sz2 = float(np.var(zs, ddof=1))
            if plan.need_x_first:
                sx2_first = float(np.var(plan.x[first], ddof=1))
            if plan.need_z_first:
                sz2_first = float(np.var(plan.z[first], ddof=1))
            plug_weight: float | None = None
            if plug_in_needed:
                plug_weight = alpha_opt(_sample_delta_table(ys, xs, zs))
            for idx, (kind, weight) in enumerate(zip(plan.kinds, plan.weights)):
                if kind.family is Family.UNBIASED:
                    values[offset, idx] = sy2
                    continue
                resolved = weight if weight is not None else plug_weight
                if kind.is_two_phase:
                    values[offset, idx] = two_phase_value(
                        kind,
                        sy2=sy2,
                        sx2=sx2,
                        sz2=sz2,
                        sx2_first=sx2_first,
                        sz2_first=sz2_first,
                        weight=resolved,
                    )
                else:
                    values[offset, idx] = single_phase_value(
                        kind, sy2=sy2, sx2=sx2, sz2=sz2, aux=aux, weight=resolved
                    )
        except (DegenerateSampleError, NoUniqueOptimumError) as exc:
            failed[offset] = True
            values[offset, :] = np.nan
            if first_failure is None:
                first_failure = f"replication {rep}: {exc}"
    return values, failed, first_failure


def _simulate_chunk_star(args) -> tuple[np.ndarray, np.ndarray, str | None]:
    return _simulate_chunk(*args)


@dataclass(frozen=True)
class EstimatorSummary:
    """One estimator's empirical and theoretical numbers."""

    kind: str
    weight_mode: str
    weight: float | None
    emp_mean: float
    emp_bias: float
    emp_mse: float
    emp_pre: float
    theory_bias: float | None
    theory_mse: float
    theory_pre: float
    formula_id: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weight_mode": self.weight_mode,
            "weight": self.weight,
            "emp_mean": self.emp_mean,
            "emp_bias": self.emp_bias,
            "emp_mse": self.emp_mse,
            "emp_pre": self.emp_pre,
            "theory_bias": self.theory_bias,
            "theory_mse": self.theory_mse,
            "theory_pre": self.theory_pre,
            "formula_id": self.formula_id,
        }


_CSV_COLUMNS = (
    "kind", "weight_mode", "weight",
    "emp_mean", "emp_bias", "emp_mse", "emp_pre",
    "theory_bias", "theory_mse", "theory_pre", "formula_id",
)


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated outcome of a run; serializes to stable JSON and CSV."""

    pop_size: int
    sy2: float
    sx2: float
    sz2: float
    deltas: DeltaTable
    n: int
    nprime: int | None
    reps: int
    reps_used: int
    failed_reps: int
    seed: int
    weight_policy: str
    estimators: tuple[EstimatorSummary, ...]

    def to_dict(self) -> dict:
        return {
            "population": {
                "size": self.pop_size,
                "sy2": self.sy2,
                "sx2": self.sx2,
                "sz2": self.sz2,
                "deltas": self.deltas.to_dict(),
            },
            "design": {"n": self.n, "nprime": self.nprime},
            "run": {
                "reps": self.reps,
                "reps_used": self.reps_used,
                "failed_reps": self.failed_reps,
                "seed": self.seed,
                "weight_policy": self.weight_policy,
            },
            "estimators": [summary.to_dict() for summary in self.estimators],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = [",".join(_CSV_COLUMNS)]
        for summary in self.estimators:
            row = summary.to_dict()
            fields = []
            for column in _CSV_COLUMNS:
                value = row[column]
                if value is None:
                    fields.append("")
                elif isinstance(value, float):
                    fields.append(repr(value))
                else:
                    fields.append(str(value))
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"


def _dedupe(kinds: tuple[EstimatorKind, ...]) -> tuple[EstimatorKind, ...]:
    seen: list[EstimatorKind] = []
    for kind in kinds:
        if kind not in seen:
            seen.append(kind)
    return tuple(seen)


def run_simulation(pop: Population, config: SimulationConfig, workers: int = 1) -> SimulationReport:
    """Run the replicated experiment and aggregate a report.

    ``workers`` only schedules the work; it is deliberately not part of
    the configuration because the report is identical for every value
    of it.  Failures inside replications are counted and reported; more
    than 0.1 percent of them aborts with :class:`SimulationError`.

    Raises
    ------
    InvalidInputError, InvalidDesignError
        If the configuration does not fit the population.
    DegeneratePopulationError
        If a variate an estimator relies on is constant in the population.
    SimulationError
        If too many replications fail.
    """
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise InvalidInputError(f"workers must be a positive integer, got {workers!r}")
    n_pop = pop.size
    if config.n >= n_pop:
        raise InvalidDesignError(
            f"sample size n={config.n} must be smaller than the population "
            f"size {n_pop}; a census admits no sampling variation"
        )
    if config.nprime is not None and config.nprime > n_pop:
        raise InvalidDesignError(
            f"first-phase size nprime={config.nprime} exceeds the population size {n_pop}"
        )
    kinds = _dedupe((UNBIASED,) + config.estimators)
    sy2 = pop.sy2
    if sy2 <= 0.0:
        raise DegeneratePopulationError("variate 'y' has zero variance; nothing to estimate")
    uses_x = any(kind.uses_x for kind in kinds)
    uses_z = any(kind.uses_z for kind in kinds)
    if uses_x and pop.sx2 <= 0.0:
        raise DegeneratePopulationError("variate 'x' has zero variance but an estimator uses it")
    if uses_z and pop.sz2 <= 0.0:
        raise DegeneratePopulationError("variate 'z' has zero variance but an estimator uses it")
    if config.n / n_pop > 0.05:
        warnings.warn(
            f"sampling fraction n/N = {config.n / n_pop:.3f} exceeds 5%; the "
            "theory columns ignore the finite population correction and will "
            "overstate the MSE",
            stacklevel=2,
        )

    pop_deltas = delta_table(pop)
    sizes = DesignSizes(config.n, config.nprime)

    # Resolve weights once.  A None slot survives only under PLUG_IN,
    # where it means "re-estimate from every sample"; theory columns
    # for those rows are evaluated at the population optimum instead,
    # since per-sample weights have no single theoretical value.
    weights: list[float | None] = []
    modes: list[str] = []
    theory_weights: list[float | None] = []
    for kind in kinds:
        if not kind.is_combined:
            weights.append(None)
            modes.append("none")
            theory_weights.append(None)
        elif kind.weight is not None:
            weights.append(kind.weight)
            modes.append("fixed")
            theory_weights.append(kind.weight)
        elif config.weight_policy is WeightPolicy.FIXED:
            raise InvalidInputError(
                f"weight policy 'fixed' requires an explicit weight on {kind.label!r}"
            )
        else:
            optimum = alpha_opt(pop_deltas)
            if config.weight_policy is WeightPolicy.POPULATION_OPTIMAL:
                weights.append(optimum)
                modes.append("population-optimal")
            else:
                weights.append(None)
                modes.append("plug-in")
            theory_weights.append(optimum)

    plug_in_active = any(mode == "plug-in" for mode in modes)
    need_x_second = any(kind.uses_x for kind in kinds) or plug_in_active
    need_z_second = any(kind.uses_z for kind in kinds) or plug_in_active
    need_x_first = any(kind.is_two_phase and kind.uses_x for kind in kinds)
    need_z_first = any(kind.is_two_phase and kind.uses_z for kind in kinds)

    plan = _Plan(
        y=pop.y,
        x=pop.x,
        z=pop.z,
        n=config.n,
        nprime=config.nprime,
        seed=config.seed,
        kinds=kinds,
        weights=tuple(weights),
        aux_sx2=pop.sx2 if uses_x else None,
        aux_sz2=pop.sz2 if uses_z else None,
        need_x_second=need_x_second,
        need_z_second=need_z_second,
        need_x_first=need_x_first,
        need_z_first=need_z_first,
    )

    chunks = [
        (plan, start, min(start + CHUNK_SIZE, config.reps))
        for start in range(0, config.reps, CHUNK_SIZE)
    ]
    if workers == 1 or len(chunks) == 1:
        results = [_simulate_chunk(*chunk) for chunk in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_simulate_chunk_star, chunks))

    values = np.concatenate([r[0] for r in results], axis=0)
    failed = np.concatenate([r[1] for r in results])
    first_failure = next((r[2] for r in results if r[2] is not None), None)

    failed_reps = int(failed.sum())
    if failed_reps > 0.001 * config.reps:
        raise SimulationError(
            f"{failed_reps} of {config.reps} replications failed (above the 0.1% "
            f"threshold); first failure: {first_failure}"
        )
    kept = values[~failed]
    reps_used = int(kept.shape[0])
    if reps_used == 0:
        raise SimulationError("no replication survived; nothing to aggregate")

    emp_mean = kept.mean(axis=0)
    deviations = kept - sy2
    emp_mse = (deviations * deviations).mean(axis=0)
    if float(emp_mse.min()) <= 0.0:
        raise SimulationError(
            "an estimator's empirical MSE is zero; the design admits no "
            "sampling variation (is n = N?)"
        )
    baseline_idx = next(i for i, kind in enumerate(kinds) if kind.family is Family.UNBIASED)
    baseline_mse = float(emp_mse[baseline_idx])

    theory_results = [
        theory_for_kind(kind, pop_deltas, sy2, sizes, weight=theory_weights[i])
        for i, kind in enumerate(kinds)
    ]
    theory_baseline = theory_results[baseline_idx].mse
    if theory_baseline <= 0.0:
        raise DegeneratePopulationError(
            "the population's y kurtosis sits at its lower bound (d400 = 1), "
            "so first-order theory gives zero baseline variance and "
            "efficiencies are undefined"
        )

    summaries = []
    for i, kind in enumerate(kinds):
        theory = theory_results[i]
        summaries.append(
            EstimatorSummary(
                kind=kind.label,
                weight_mode=modes[i],
                weight=theory_weights[i],
                emp_mean=float(emp_mean[i]),
                emp_bias=float(emp_mean[i] - sy2),
                emp_mse=float(emp_mse[i]),
                emp_pre=pre(float(emp_mse[i]), baseline_mse),
                theory_bias=theory.bias,
                theory_mse=theory.mse,
                theory_pre=pre(theory.mse, theory_baseline),
                formula_id=theory.formula_id,
            )
        )

    return SimulationReport(
        pop_size=n_pop,
        sy2=sy2,
        sx2=pop.sx2,
        sz2=pop.sz2,
        deltas=pop_deltas,
        n=config.n,
        nprime=config.nprime,
        reps=config.reps,
        reps_used=reps_used,
        failed_reps=failed_reps,
        seed=config.seed,
        weight_policy=config.weight_policy.value,
        estimators=tuple(summaries),
    )
