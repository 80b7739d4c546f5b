# strong_sim.py

"""Strong simulation of adaptive linear optics: probabilities, output states and overlaps."""

import logging
import math
from dataclasses import dataclass, field
from threading import Lock
from typing import Dict

import numpy as np

from optics.errors import InputError, ParseError, UnreachableOutcomeError
from optics.fock import (
    FockState,
    adaptive_outcomes,
    count_phi,
    input_state,
    multi_factorial,
    phi_sector,
    weight_masks,
)
from optics.interferometer import AdaptiveInterferometer
from optics.permanent import (
    PermanentEstimate,
    estimate_permanent_sq_repeated,
    permanent_repeated,
    permanent_ryser,
)
from optics.utils import check_capacity, derive_seed, parallel_map

logger = logging.getLogger(__name__)

PROB_TOL = 1e-9
REACHABILITY_TOL = 1e-12


class EvalCounter:
    """Thread-safe tally of permanent evaluations."""

    def __init__(self):
        self.evals = 0
        self._lock = Lock()

    def add(self, count=1):
        with self._lock:
            self.evals += count


@dataclass
class OutputDistribution:
    """Exact probability table keyed by Fock state, in canonical order."""
    context: dict
    entries: Dict[FockState, float] = field(default_factory=dict)

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def probability(self, state) -> float:
        state = state if isinstance(state, FockState) else FockState(tuple(state))
        return self.entries.get(state, 0.0)

    def to_json(self) -> dict:
        return {
            "context": dict(self.context),
            "entries": [
                {"state": s.to_json(), "prob": min(1.0, max(0.0, p))}
                for s, p in self.entries.items()
            ],
        }

    @classmethod
    def from_json(cls, data, source=None) -> "OutputDistribution":
        if not isinstance(data, dict) or "entries" not in data:
            raise ParseError("distribution needs 'context' and 'entries'", source=source)
        entries = {}
        for idx, entry in enumerate(data["entries"]):
            try:
                entries[FockState.from_json(entry["state"])] = float(entry["prob"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad entry ({exc})", source=source,
                                 field=f"entries[{idx}]") from exc
        return cls(dict(data.get("context", {})), entries)


@dataclass
class UnnormalizedState:
    """|psi_p>: amplitudes over the unmeasured modes after adaptive outcome p."""
    outcome: FockState
    modes: int                  # m - k
    photons: int                # n - |p|
    amplitudes: Dict[FockState, complex] = field(default_factory=dict)

    def norm_squared(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def vector(self) -> np.ndarray:
        return np.fromiter(self.amplitudes.values(), dtype=complex, count=len(self.amplitudes))


def _state(s) -> FockState:
    return s if isinstance(s, FockState) else FockState(tuple(s))


def _check_probability(value, what):
    if value < -PROB_TOL or value > 1.0 + PROB_TOL:
        raise RuntimeError(f"{what} = {value!r} left [0, 1]; numerical breakdown")
    return value


def _check_outcome(a: AdaptiveInterferometer, p, s=None):
    if p.modes != a.k:
        raise InputError(f"adaptive outcome must have length {a.k}, got {p.modes}")
    if s is not None and s.modes != a.m - a.k:
        raise InputError(f"final outcome must have length {a.m - a.k}, got {s.modes}")


# ---------------------------------------------------------------------------
# Probabilities
# ---------------------------------------------------------------------------

def prob_total(a: AdaptiveInterferometer, p, s) -> float:
    """Pr^total[p, s] = |Per(U^p_{(p,s),t})|^2 / (p! s!)."""
    p, s = _state(p), _state(s)
    _check_outcome(a, p, s)
    if p.total_photons() + s.total_photons() != a.n:
        return 0.0
    u = a.compose(p).matrix
    t = input_state(a.m, a.n)
    per = permanent_repeated(u, p.concat(s).occupations, t.occupations)
    value = abs(per) ** 2 / (multi_factorial(p) * multi_factorial(s))
    return _check_probability(value, f"Pr[{p.to_json()}, {s.to_json()}]")


def prob_final_exact(a: AdaptiveInterferometer, s, counter=None) -> float:
    """Pr^final[s]: sum of Pr^total[p, s] over p in Phi_{k, n-|s|}."""
    s = _state(s)
    if s.modes != a.m - a.k:
        raise InputError(f"final outcome must have length {a.m - a.k}, got {s.modes}")
    r = a.n - s.total_photons()
    if r < 0:
        return 0.0
    total = 0.0
    for p in phi_sector(a.k, r):
        total += prob_total(a, p, s)
        if counter is not None:
            counter.add()
    return _check_probability(total, f"Pr^final[{s.to_json()}]")


def prob_final_estimate(a: AdaptiveInterferometer, s, epsilon, delta, seed,
                        counter=None) -> PermanentEstimate:
    """Estimate Pr^final[s] within epsilon·|Phi_{k,r}| with probability >= 1 - delta.

    Each of the |Phi_{k,r}| terms is estimated with the repeated-rows estimator
    at epsilon/3 and failure probability delta/|Phi_{k,r}| (union bound).
    """
    s = _state(s)
    if s.modes != a.m - a.k:
        raise InputError(f"final outcome must have length {a.m - a.k}, got {s.modes}")
    r = a.n - s.total_photons()
    terms = phi_sector(a.k, r) if r >= 0 else []
    if not terms:
        return PermanentEstimate(0.0, 0.0, 0)

    term_eps = epsilon / 3.0
    term_delta = delta / len(terms)
    value = 0.0
    samples = 0
    for idx, p in enumerate(terms):
        b = a.compose(p).matrix[:, :a.n]
        est = estimate_permanent_sq_repeated(
            b, p.concat(s).occupations, term_eps, term_delta,
            derive_seed(seed, f"final-term-{idx}"),
        )
        value += est.value.real / (multi_factorial(p) * multi_factorial(s))
        samples += est.samples_used
        if counter is not None:
            counter.add()
    return PermanentEstimate(value, epsilon * len(terms), samples)


def joint_distribution(a: AdaptiveInterferometer, workers=1, progress_callback=None) -> OutputDistribution:
    """Pr^total over every total outcome (p, s), keyed by the concatenated m-mode state."""
    check_capacity(count_phi(a.m, a.n), "joint distribution")
    states = phi_sector(a.m, a.n)

    def evaluate(state):
        p, s = state.split(a.k)
        return prob_total(a, p, s)

    probs = parallel_map(evaluate, states, workers=workers, progress_callback=progress_callback)
    logger.debug("Joint distribution over %d outcomes (m=%d, n=%d, k=%d)",
                 len(states), a.m, a.n, a.k)
    return OutputDistribution(
        {"m": a.m, "n": a.n, "k": a.k, "marginal": "joint"},
        dict(zip(states, probs)),
    )


def final_outcomes(a: AdaptiveInterferometer):
    """Every final outcome over the m-k unmeasured modes, by decreasing photon count."""
    out = []
    for r in range(a.n + 1):
        out.extend(phi_sector(a.m - a.k, a.n - r))
    return out


def final_distribution(a: AdaptiveInterferometer, workers=1) -> OutputDistribution:
    """Pr^final marginal over adaptive outcomes, across every photon sector."""
    outcomes = final_outcomes(a)
    check_capacity(len(outcomes), "final distribution")
    probs = parallel_map(lambda s: prob_final_exact(a, s), outcomes, workers=workers)
    return OutputDistribution(
        {"m": a.m, "n": a.n, "k": a.k, "marginal": "final"},
        dict(zip(outcomes, probs)),
    )


def adaptive_distribution(a: AdaptiveInterferometer) -> OutputDistribution:
    """Pr^adap[p] = <psi_p|psi_p> for every adaptive outcome."""
    entries = {p: output_state(a, p).norm_squared() for p in adaptive_outcomes(a.k, a.n)}
    return OutputDistribution({"m": a.m, "n": a.n, "k": a.k, "marginal": "adaptive"}, entries)


# ---------------------------------------------------------------------------
# Output states and inner products
# ---------------------------------------------------------------------------

def output_state(a: AdaptiveInterferometer, p) -> UnnormalizedState:
    p = _state(p)
    _check_outcome(a, p)
    r = p.total_photons()
    if r > a.n:
        raise InputError(f"adaptive outcome {p.to_json()} exceeds {a.n} photons")
    u = a.compose(p).matrix
    t = input_state(a.m, a.n).occupations
    scale = multi_factorial(p)
    amplitudes = {}
    for s in phi_sector(a.m - a.k, a.n - r):
        per = permanent_repeated(u, p.concat(s).occupations, t)
        amplitudes[s] = per / math.sqrt(scale * multi_factorial(s))
    return UnnormalizedState(p, a.m - a.k, a.n - r, amplitudes)


def inner_product_bruteforce(u_state: UnnormalizedState, v_state: UnnormalizedState) -> complex:
    """<psi_u|psi_v> as a term-wise sum over the shared final-outcome sector."""
    if u_state.modes != v_state.modes:
        raise InputError(f"states live on {u_state.modes} and {v_state.modes} modes")
    if u_state.photons != v_state.photons:
        return 0j
    total = 0j
    for s, amp in u_state.amplitudes.items():
        total += np.conj(amp) * v_state.amplitudes.get(s, 0j)
    return complex(total)


def inner_product_k0(u, v, n) -> complex:
    """Non-adaptive inner product: Per of the top-left n×n block of U^dagger V."""
    u = getattr(u, "matrix", u)
    v = getattr(v, "matrix", v)
    prod = np.asarray(u).conj().T @ np.asarray(v)
    return permanent_ryser(prod[:n, :n])


def _check_pair(a, b):
    if (a.m, a.n, a.k) != (b.m, b.n, b.k):
        raise InputError(
            f"interferometers disagree on (m, n, k): {(a.m, a.n, a.k)} vs {(b.m, b.n, b.k)}"
        )


def inner_product_lemma1(a: AdaptiveInterferometer, p, b: AdaptiveInterferometer, q,
                         counter=None, cache_factors=False) -> complex:
    """<psi_p|psi_q> for psi_p from ``a`` and psi_q from ``b`` without touching final outcomes.

    Sums Per(A^i) Per(B^j) Per(C^{i,j}) / sqrt(p! q!) over row/column masks i, j of
    weight r = |p| on the first n modes, where
      A^i = (U^p)^dagger rows i, columns 0..k-1 repeated by p   (r×r)
      B^j = V^q rows 0..k-1 repeated by q, columns j           (r×r)
      C^{i,j} = (U^p)^dagger[~i, k:] @ V^q[k:, ~j]               ((n-r)×(n-r))
    Work is C(n,r)^2 mask pairs with three permanents each, whatever k is.
    """
    _check_pair(a, b)
    p, q = _state(p), _state(q)
    _check_outcome(a, p)
    _check_outcome(b, q)
    r = p.total_photons()
    if r != q.total_photons():
        return 0j
    n, k = a.n, a.k
    u_dag = a.compose(p).matrix.conj().T
    v = b.compose(q).matrix

    if k:
        a_cols = np.repeat(u_dag[:n, :k], p.occupations, axis=1)    # n×r
        b_rows = np.repeat(v[:k, :n], q.occupations, axis=0)        # r×n
    else:
        a_cols = np.zeros((n, 0), dtype=complex)
        b_rows = np.zeros((0, n), dtype=complex)
    masks = [np.asarray(mask, dtype=bool) for mask in weight_masks(n, r)]

    u_factor = v_factor = None
    if cache_factors:
        u_factor = [u_dag[:n][~i][:, k:] for i in masks]
        v_factor = [v[k:, :n][:, ~j] for j in masks]

    total = 0j
    for ii, i in enumerate(masks):
        u_rest = u_factor[ii] if cache_factors else u_dag[:n][~i][:, k:]
        for jj, j in enumerate(masks):
            v_rest = v_factor[jj] if cache_factors else v[k:, :n][:, ~j]
            per_a = permanent_ryser(a_cols[i])
            per_b = permanent_ryser(b_rows[:, j])
            per_c = permanent_ryser(u_rest @ v_rest)
            total += per_a * per_b * per_c
    if counter is not None:
        counter.add(3 * len(masks) ** 2)
    logger.debug("Lemma-1 inner product: n=%d r=%d k=%d, %d mask pairs", n, r, k, len(masks) ** 2)
    return complex(total / math.sqrt(multi_factorial(p) * multi_factorial(q)))


def overlap_normalized(a: AdaptiveInterferometer, p, b: AdaptiveInterferometer, q,
                       counter=None) -> float:
    """|<psi_p|psi_q>|^2 / (<psi_p|psi_p> <psi_q|psi_q>), in [0, 1]."""
    p, q = _state(p), _state(q)
    if p.total_photons() != q.total_photons():
        return 0.0
    norm_p = inner_product_lemma1(a, p, a, p, counter=counter).real
    norm_q = inner_product_lemma1(b, q, b, q, counter=counter).real
    if norm_p <= REACHABILITY_TOL:
        raise UnreachableOutcomeError(f"adaptive outcome {p.to_json()} has zero probability")
    if norm_q <= REACHABILITY_TOL:
        raise UnreachableOutcomeError(f"adaptive outcome {q.to_json()} has zero probability")
    cross = inner_product_lemma1(a, p, b, q, counter=counter)
    value = _check_probability(abs(cross) ** 2 / (norm_p * norm_q), "overlap")
    return min(1.0, max(0.0, value))
