# sampler.py

"""Weak simulation (shot sampling) and shot-based emulation of the estimation subroutines."""

import json
import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from config import ATTEMPT_BUDGET, SHOT_BATCH
from optics.errors import InputError, ParseError, StarvationError
from optics.fock import FockState
from optics.interferometer import AdaptiveInterferometer
from optics.strong_sim import REACHABILITY_TOL, inner_product_lemma1, joint_distribution
from optics.utils import derive_seed, make_rng, parallel_map

logger = logging.getLogger(__name__)

_MIN_BLOCK = 4096


@dataclass(frozen=True)
class ShotRecord:
    """One run of the device: adaptive outcome p and final outcome s."""
    adaptive_outcome: FockState
    final_outcome: FockState

    def to_json(self) -> dict:
        return {"p": self.adaptive_outcome.to_json(), "s": self.final_outcome.to_json()}

    @classmethod
    def from_json(cls, data) -> "ShotRecord":
        return cls(FockState.from_json(data["p"]), FockState.from_json(data["s"]))


@dataclass
class EstimateReport:
    """Shot-based estimate with its Hoeffding confidence radius."""
    value: float
    shots: int
    hoeffding_halfwidth: float
    delta: float = 0.05

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "shots": self.shots,
            "hoeffding_halfwidth": self.hoeffding_halfwidth,
            "delta": self.delta,
        }


def hoeffding_halfwidth(shots, delta) -> float:
    """sqrt(ln(2/delta) / (2·shots))."""
    if shots < 1:
        raise InputError(f"shots must be positive, got {shots}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * shots))


class ShotSampler:
    """Inverse-CDF sampler over the exact joint distribution of one adaptive interferometer.

    The table is built once; draws are split into batches seeded by
    (seed, batch index) so results do not depend on the worker count.
    """

    def __init__(self, a: AdaptiveInterferometer, workers=1, batch_size=SHOT_BATCH):
        self.interferometer = a
        self.workers = workers
        self.batch_size = batch_size
        dist = joint_distribution(a, workers=workers)
        self.states = list(dist.entries)
        probs = np.clip(np.fromiter(dist.entries.values(), dtype=float), 0.0, None)
        cdf = np.cumsum(probs)
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        self._cdf = cdf

        splits = [state.split(a.k) for state in self.states]
        self.adaptive_outcomes = []
        index = {}
        adaptive_ids = []
        for p, _ in splits:
            if p not in index:
                index[p] = len(self.adaptive_outcomes)
                self.adaptive_outcomes.append(p)
            adaptive_ids.append(index[p])
        self._adaptive_index = index
        self.adaptive_ids = np.asarray(adaptive_ids, dtype=np.int64)
        self.final_outcomes = [s for _, s in splits]
        logger.debug("Sampler table built: %d joint outcomes, %d adaptive outcomes",
                     len(self.states), len(self.adaptive_outcomes))

    def adaptive_id(self, p) -> int:
        """Index of adaptive outcome ``p`` in this table, -1 when it never occurs."""
        p = p if isinstance(p, FockState) else FockState(tuple(p))
        return self._adaptive_index.get(p, -1)

    def _draw_batch(self, job):
        seed, batch, size = job
        rng = make_rng(seed, f"batch-{batch}")
        idx = np.searchsorted(self._cdf, rng.random(size), side="right")
        return np.minimum(idx, len(self._cdf) - 1)

    def draw_indices(self, shots, seed) -> np.ndarray:
        """Indices into ``states`` of ``shots`` i.i.d. joint outcomes."""
        if shots < 1:
            raise InputError(f"shots must be positive, got {shots}")
        jobs = []
        start = 0
        batch = 0
        while start < shots:
            size = min(self.batch_size, shots - start)
            jobs.append((seed, batch, size))
            start += size
            batch += 1
        parts = parallel_map(self._draw_batch, jobs, workers=self.workers)
        return np.concatenate(parts)

    def records(self, indices) -> List[ShotRecord]:
        return [
            ShotRecord(*self.states[i].split(self.interferometer.k)) for i in indices
        ]


# ---------------------------------------------------------------------------
# Sampling and frequency estimation
# ---------------------------------------------------------------------------

def sample(a: AdaptiveInterferometer, shots, seed, workers=1) -> List[ShotRecord]:
    sampler = ShotSampler(a, workers=workers)
    return sampler.records(sampler.draw_indices(shots, seed))


def estimate_prob_by_frequency(a: AdaptiveInterferometer, target_s, shots, seed,
                               delta=0.05, workers=1, sampler=None) -> EstimateReport:
    """Fraction of shots whose final outcome equals ``target_s`` (adaptive outcomes marginalised)."""
    target = target_s if isinstance(target_s, FockState) else FockState(tuple(target_s))
    if target.modes != a.m - a.k:
        raise InputError(f"final outcome must have length {a.m - a.k}, got {target.modes}")
    sampler = sampler or ShotSampler(a, workers=workers)
    hits = np.asarray([s == target for s in sampler.final_outcomes], dtype=bool)
    indices = sampler.draw_indices(shots, seed)
    count = int(np.count_nonzero(hits[indices]))
    return EstimateReport(count / shots, shots, hoeffding_halfwidth(shots, delta), delta)


# ---------------------------------------------------------------------------
# Overlap estimation by post-selected projection
# ---------------------------------------------------------------------------

def _branch_probabilities(a, p, b, q, renormalize):
    """Success probabilities (x_p, x_q, Pr_a[p], Pr_b[q]) of the projection step.

    On arrival of p the device prepares psi_p / ||psi_p|| and the inverse circuit of
    the other branch projects onto psi_q; raw success is |<psi_p|psi_q>|^2 / Pr_a[p].
    With ``renormalize`` both branches use the normalised-state overlap instead.
    """
    cross = abs(inner_product_lemma1(a, p, b, q)) ** 2
    pr_p = inner_product_lemma1(a, p, a, p).real
    pr_q = inner_product_lemma1(b, q, b, q).real
    reach_p = pr_p > REACHABILITY_TOL
    reach_q = pr_q > REACHABILITY_TOL
    if renormalize:
        overlap = cross / (pr_p * pr_q) if reach_p and reach_q else 0.0
        x_p = x_q = min(1.0, max(0.0, overlap))
    else:
        x_p = min(1.0, max(0.0, cross / pr_p)) if reach_p else 0.0
        x_q = min(1.0, max(0.0, cross / pr_q)) if reach_q else 0.0
    return x_p, x_q, max(pr_p, 0.0), max(pr_q, 0.0)


def algorithm1_expectation(a, p, q, b=None, renormalize=True) -> float:
    """Exact expectation of the overlap estimator: arrival-weighted branch success."""
    p = p if isinstance(p, FockState) else FockState(tuple(p))
    q = q if isinstance(q, FockState) else FockState(tuple(q))
    if p.total_photons() != q.total_photons():
        return 0.0
    other = a if b is None else b
    x_p, x_q, pr_p, pr_q = _branch_probabilities(a, p, other, q, renormalize)
    if b is None and p == q:
        return x_p
    weight = pr_p + pr_q
    if weight <= REACHABILITY_TOL:
        return 0.0
    return (pr_p * x_p + pr_q * x_q) / weight


def estimate_overlap_algorithm1(a: AdaptiveInterferometer, p, q, shots, seed, delta=0.05,
                                b=None, attempt_budget=ATTEMPT_BUDGET, renormalize=True,
                                workers=1) -> EstimateReport:
    """Emulate the post-selected overlap estimation loop.

    Runs the device until ``shots`` runs have produced adaptive outcome p or q
    (c_sp). Each arrival is followed by the inverse circuit of the other branch,
    whose success (all photons back in the input pattern) is drawn as a
    Bernoulli with the exact probability. Returns c_over / shots.

    With ``b`` given, runs alternate between ``a`` (waiting for p) and ``b``
    (waiting for q). Raises StarvationError after ``attempt_budget`` runs.
    """
    p = p if isinstance(p, FockState) else FockState(tuple(p))
    q = q if isinstance(q, FockState) else FockState(tuple(q))
    if shots < 1:
        raise InputError(f"shots must be positive, got {shots}")
    if p.total_photons() != q.total_photons():
        return EstimateReport(0.0, 0, 0.0, delta)

    other = a if b is None else b
    x_p, x_q, _, _ = _branch_probabilities(a, p, other, q, renormalize)
    sampler_a = ShotSampler(a, workers=workers)
    sampler_b = sampler_a if b is None else ShotSampler(b, workers=workers)
    id_p = sampler_a.adaptive_id(p)
    id_q = sampler_b.adaptive_id(q)
    success = np.asarray([0.0, x_p, x_q])
    rng = make_rng(seed, "projection")

    c_sp = c_over = attempts = 0
    block = 0
    while c_sp < shots:
        if attempts >= attempt_budget:
            raise StarvationError(
                f"only {c_sp} of {shots} post-selected runs after {attempts} attempts "
                f"(outcomes {p.to_json()}, {q.to_json()})",
                attempts=attempts, arrivals=c_sp,
            )
        size = min(max(_MIN_BLOCK, 2 * (shots - c_sp)), attempt_budget - attempts)
        if b is None:
            ids = sampler_a.adaptive_ids[sampler_a.draw_indices(size, _block_seed(seed, "a", block))]
            codes = np.where(ids == id_p, 1, np.where(ids == id_q, 2, 0))
        else:
            half = max(1, size // 2)
            ids_a = sampler_a.adaptive_ids[sampler_a.draw_indices(half, _block_seed(seed, "a", block))]
            ids_b = sampler_b.adaptive_ids[sampler_b.draw_indices(half, _block_seed(seed, "b", block))]
            codes = np.empty(2 * half, dtype=np.int64)
            codes[0::2] = np.where(ids_a == id_p, 1, 0)
            codes[1::2] = np.where(ids_b == id_q, 2, 0)
        block += 1

        positions = np.flatnonzero(codes)
        needed = shots - c_sp
        if positions.size >= needed:
            positions = positions[:needed]
            attempts += int(positions[-1]) + 1
        else:
            attempts += codes.size
        if positions.size:
            arrivals = codes[positions]
            draws = rng.random(positions.size)
            c_over += int(np.count_nonzero(draws < success[arrivals]))
            c_sp += int(positions.size)

    logger.debug("Overlap loop: %d arrivals after %d attempts, %d successes",
                 c_sp, attempts, c_over)
    return EstimateReport(c_over / shots, shots, hoeffding_halfwidth(shots, delta), delta)


def _block_seed(seed, device, block):
    return derive_seed(seed, f"algorithm1-{device}-{block}")


# ---------------------------------------------------------------------------
# Shot logs
# ---------------------------------------------------------------------------

def write_shot_log(records, fh):
    """Stream records as JSON lines {"p": [...], "s": [...]}."""
    for record in records:
        fh.write(json.dumps(record.to_json(), separators=(",", ":")))
        fh.write("\n")


def read_shot_log(fh, source=None) -> List[ShotRecord]:
    records = []
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            records.append(ShotRecord.from_json(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, source=source, line=lineno) from exc
        except (KeyError, TypeError, InputError) as exc:
            raise ParseError(f"bad shot record ({exc})", source=source, line=lineno) from exc
    return records
