"""Benchmark harness: permanent-evaluation counts and wall time over an (m, n, k, r) grid."""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List

from optics.errors import InputError
from optics.fock import phi_sector
from optics.interferometer import AdaptiveInterferometer, random_unitary
from optics.strong_sim import EvalCounter, inner_product_lemma1, prob_final_estimate
from optics.utils import derive_seed, parallel_map

logger = logging.getLogger(__name__)

GRIDS = {
    "small": {"m": (4, 6), "n": (1, 2, 3), "k": (0, 1, 2, 3)},
    "default": {"m": (4, 6, 8, 10), "n": (1, 2, 3, 4), "k": (0, 1, 2, 3)},
}


@dataclass
class BenchReport:
    """One row per (m, n, k, r, kind) plus run metadata and self-checks."""
    rows: List[dict] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)
    checks: Dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"rows": self.rows, "metadata": self.metadata, "checks": self.checks}


def grid_cells(grid):
    """Feasible (m, n, k, r): n <= m, k < m, and r = 0 when nothing is measured."""
    axes = GRIDS.get(grid) if isinstance(grid, str) else grid
    if axes is None:
        raise InputError(f"unknown grid {grid!r}; choose from {sorted(GRIDS)}")
    cells = []
    for m in axes["m"]:
        for n in axes["n"]:
            if n > m:
                continue
            for k in axes["k"]:
                if k >= m:
                    continue
                for r in range(n + 1):
                    if k == 0 and r > 0:
                        continue
                    cells.append((m, n, k, r))
    return cells


def bench_instance(m, n, k, seed) -> AdaptiveInterferometer:
    """Random adaptive instance: Haar U_0 and Haar stages seeded by their prefix."""
    def stage(prefix):
        name = "stage-%d-%d-%d-%s" % (m, n, k, ",".join(map(str, prefix)))
        return random_unitary(m - len(prefix), derive_seed(seed, name))

    u0 = random_unitary(m, derive_seed(seed, f"u0-{m}-{n}-{k}"))
    return AdaptiveInterferometer(m, k, n, u0, stage_generator=stage if k else None)


def expected_overlap_evals(n, r) -> int:
    return 3 * math.comb(n, r) ** 2


def expected_probability_evals(k, r) -> int:
    return len(phi_sector(k, r))


def _run_cell(cell, seed, epsilon, delta, timing):
    m, n, k, r = cell
    a = bench_instance(m, n, k, seed)
    outcomes = phi_sector(k, r)
    p, q = outcomes[0], outcomes[-1]

    # ---- overlap via the mask expansion ----
    counter = EvalCounter()
    start = time.perf_counter()
    inner_product_lemma1(a, p, a, q, counter=counter)
    overlap_time = time.perf_counter() - start
    overlap_row = {
        "m": m, "n": n, "k": k, "r": r, "kind": "overlap",
        "permanent_evals": counter.evals,
        "expected_evals": expected_overlap_evals(n, r),
        "estimator_samples": 0,
        "wall_time": round(overlap_time, 6) if timing else None,
    }

    # ---- final-outcome probability estimate ----
    s = phi_sector(m - k, n - r)[0]
    counter = EvalCounter()
    start = time.perf_counter()
    est = prob_final_estimate(a, s, epsilon, delta, derive_seed(seed, f"prob-{m}-{n}-{k}-{r}"),
                              counter=counter)
    prob_time = time.perf_counter() - start
    prob_row = {
        "m": m, "n": n, "k": k, "r": r, "kind": "probability",
        "permanent_evals": counter.evals,
        "expected_evals": expected_probability_evals(k, r),
        "estimator_samples": est.samples_used,
        "wall_time": round(prob_time, 6) if timing else None,
    }
    return [overlap_row, prob_row]


def _checks(rows):
    overlap = [row for row in rows if row["kind"] == "overlap"]
    probability = [row for row in rows if row["kind"] == "probability"]
    by_nr = {}
    for row in overlap:
        by_nr.setdefault((row["n"], row["r"]), set()).add(row["permanent_evals"])
    return {
        "overlap_evals_match_mask_count": all(
            row["permanent_evals"] == row["expected_evals"] for row in overlap),
        "probability_evals_match_term_count": all(
            row["permanent_evals"] == row["expected_evals"] for row in probability),
        "overlap_evals_independent_of_k": all(len(v) == 1 for v in by_nr.values()),
    }


def run_bench(grid="small", seed=0, epsilon=0.1, delta=0.05, workers=1, timing=True) -> BenchReport:
    """Run every feasible grid cell and assemble the report in grid order."""
    cells = grid_cells(grid)
    logger.info("Bench: %d cells on grid %r, workers=%d", len(cells), grid, workers)
    started = time.monotonic()

    def progress(done, total):
        if done % 10 == 0 or done == total:
            logger.info("Bench progress: %d/%d cells", done, total)

    results = parallel_map(
        lambda cell: _run_cell(cell, seed, epsilon, delta, timing),
        cells, workers=workers, progress_callback=progress,
    )
    rows = [row for pair in results for row in pair]
    report = BenchReport(
        rows=rows,
        metadata={
            "grid": grid if isinstance(grid, str) else "custom",
            "seed": seed,
            "epsilon": epsilon,
            "delta": delta,
            "timing": timing,
        },
        checks=_checks(rows),
    )
    logger.info("Bench finished: %d rows in %.1fs, checks=%s",
                len(rows), time.monotonic() - started, report.checks)
    return report
