"""Seeded batches of blur-then-recover experiments and their summary tables."""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .feasibility import SearchBudget
from .lattice import SolverConfig
from .oracle import MAX_CELLS, brute_force_recover
from .reconstruction import BandPolicy, NoiseModel, RecoveryReport, recover
from .spectral import BinaryMatrix, add_noise, dft_on


def trial_seeds(master: int, index: int) -> tuple[int, int]:
    """Model and noise seeds of trial ``index``, derived from the master seed."""
    state = np.random.SeedSequence([master, index]).generate_state(2, dtype=np.uint32)
    return int(state[0]), int(state[1])


def thread_count() -> int:
    """Worker threads for trial batches, from ``BINDEBLUR_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BINDEBLUR_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TrialSpec:
    """One row of an experiment grid.

    Model ``i`` is drawn with ``popcount`` ones from the seed
    ``trial_seeds(seed, i)[0]``; with ``noise_variance > 0`` the data get
    Gaussian noise from the second derived seed and the solver is told the
    noise level.  ``oracle`` cross-checks every recovery against
    exhaustive search (at most 25 cells).
    """

    dims: tuple[int, int]
    band: BandPolicy
    popcount: int
    trials: int
    seed: int = 0
    noise_variance: float = 0.0
    cfg: SolverConfig = SolverConfig()
    budget: SearchBudget = SearchBudget()
    retry: bool = False
    oracle: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.oracle and self.dims[0] * self.dims[1] > MAX_CELLS:
            raise ValueError("oracle cross-checks need at most 25 cells")


@dataclass
class TrialResult:
    index: int
    model_seed: int
    status: str
    exact: bool
    wrong_matrix: bool
    elapsed: float
    directions: int
    oracle_agrees: bool | None = None


@dataclass
class TrialSummary:
    spec: TrialSpec
    results: list[TrialResult] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return 100.0 * sum(r.exact for r in self.results) / len(self.results)

    @property
    def mean_time(self) -> float:
        return float(np.mean([r.elapsed for r in self.results]))

    @property
    def mean_directions(self) -> float:
        return float(np.mean([r.directions for r in self.results]))

    @property
    def wrong_matrices(self) -> int:
        return sum(r.wrong_matrix for r in self.results)

    @property
    def oracle_agreement(self) -> float | None:
        checks = [r.oracle_agrees for r in self.results if r.oracle_agrees is not None]
        return 100.0 * sum(checks) / len(checks) if checks else None

    def failures(self) -> list[TrialResult]:
        return [r for r in self.results if not r.exact]


def run_trial(spec: TrialSpec, index: int) -> TrialResult:
    model_seed, noise_seed = trial_seeds(spec.seed, index)
    n1, n2 = spec.dims
    x = BinaryMatrix.random(n1, n2, spec.popcount, model_seed)
    data = dft_on(x, spec.band.band())
    noise = None
    if spec.noise_variance > 0:
        data = add_noise(data, spec.noise_variance, noise_seed)
        noise = NoiseModel.from_variance(spec.noise_variance)
    t0 = time.perf_counter()
    report: RecoveryReport = recover(data, spec.cfg, spec.budget, retry=spec.retry, noise=noise)
    elapsed = time.perf_counter() - t0
    exact = report.recovered and report.matrix == x
    agrees = None
    if spec.oracle:
        truth = brute_force_recover(dft_on(x, spec.band.band()))
        agrees = report.recovered and truth == {report.matrix}
    return TrialResult(index, model_seed, report.status.value, exact,
                       report.matrix is not None and report.matrix != x, elapsed,
                       report.directions_recovered, agrees)


def run_trials(spec: TrialSpec, threads: int | None = None) -> TrialSummary:
    """Run every trial of ``spec``; results are ordered by trial index whatever the threading."""
    threads = thread_count() if threads is None else max(1, threads)
    if threads == 1:
        results = [run_trial(spec, i) for i in range(spec.trials)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda i: run_trial(spec, i), range(spec.trials)))
    return TrialSummary(spec, results)


TABLE_COLUMNS = ("n1", "n2", "band", "popcount", "trials", "noise_variance", "success_pct",
                 "mean_time_s", "mean_directions", "wrong_matrices", "oracle_agreement_pct")


def _band_label(policy: BandPolicy) -> str:
    return "rect4" if policy.L is None else f"L{policy.L}"


def table_row(summary: TrialSummary) -> dict:
    s = summary.spec
    oracle = summary.oracle_agreement
    return {"n1": s.dims[0], "n2": s.dims[1], "band": _band_label(s.band),
            "popcount": s.popcount, "trials": s.trials, "noise_variance": f"{s.noise_variance:g}",
            "success_pct": f"{summary.success_rate:.1f}", "mean_time_s": f"{summary.mean_time:.3f}",
            "mean_directions": f"{summary.mean_directions:.2f}",
            "wrong_matrices": summary.wrong_matrices,
            "oracle_agreement_pct": "-" if oracle is None else f"{oracle:.1f}"}


def format_table(summaries: list[TrialSummary]) -> str:
    """Tab-separated table with a header line, one row per summary."""
    lines = ["\t".join(TABLE_COLUMNS)]
    for s in summaries:
        row = table_row(s)
        lines.append("\t".join(str(row[c]) for c in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"
