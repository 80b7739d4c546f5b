# explicit.py

"""Explicit variational classifier: feature map, trainable mesh BS(θ), binned photon counts."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from config import ATTEMPT_BUDGET
from optics.errors import InputError, ParseError, StarvationError, UnreachableOutcomeError
from optics.fock import FockState
from optics.interferometer import AdaptiveInterferometer, build_variational, variational_param_count
from optics.sampler import ShotSampler
from optics.strong_sim import REACHABILITY_TOL, output_state
from optics.utils import derive_seed, make_rng, parallel_map
from qml.dataset import Dataset
from qml.feature_map import FeatureMapSpec

logger = logging.getLogger(__name__)

SMOOTHING = 1e-3


def parity_binning(s: FockState) -> int:
    """+1 when the first unmeasured mode holds an even number of photons, else -1."""
    return 1 if s[0] % 2 == 0 else -1


def constant_binning(s: FockState) -> int:
    return 1


BINNINGS = {
    "parity-first-mode": parity_binning,
    "constant-plus": constant_binning,
}


@dataclass
class VariationalModel:
    """Trainable mesh BS(θ) on the unmeasured modes, applied after the feature map."""
    theta: np.ndarray
    feature_map: FeatureMapSpec
    binning: str = "parity-first-mode"

    def __post_init__(self):
        if self.binning not in BINNINGS:
            raise InputError(f"unknown binning {self.binning!r}; choose from {sorted(BINNINGS)}")
        theta = np.asarray(self.theta, dtype=float).ravel()
        expected = variational_param_count(self.modes)
        if theta.size != expected:
            raise InputError(f"mesh on {self.modes} modes needs {expected} parameters, got {theta.size}")
        self.theta = theta

    @classmethod
    def initial(cls, feature_map: FeatureMapSpec, binning="parity-first-mode") -> "VariationalModel":
        modes = feature_map.m - feature_map.k
        return cls(np.zeros(variational_param_count(modes)), feature_map, binning)

    @property
    def modes(self) -> int:
        return self.feature_map.m - self.feature_map.k

    @property
    def g(self) -> Callable:
        return BINNINGS[self.binning]

    def with_theta(self, theta) -> "VariationalModel":
        return VariationalModel(np.asarray(theta, dtype=float), self.feature_map, self.binning)

    def circuit(self, x) -> AdaptiveInterferometer:
        return self.feature_map.encode(x).with_post(build_variational(self.modes, self.theta))

    def to_json(self) -> dict:
        return {
            "theta": [float(v) for v in self.theta],
            "feature_map": self.feature_map.to_json(),
            "binning": self.binning,
        }

    @classmethod
    def from_json(cls, data, source=None) -> "VariationalModel":
        if not isinstance(data, dict):
            raise ParseError("variational model must be a JSON object", source=source)
        for key in ("theta", "feature_map"):
            if key not in data:
                raise ParseError("missing key", source=source, field=key)
        fm = FeatureMapSpec.from_json(data["feature_map"], source=source)
        try:
            return cls(np.asarray(data["theta"], dtype=float), fm,
                       data.get("binning", "parity-first-mode"))
        except InputError as exc:
            raise ParseError(str(exc), source=source) from exc


@dataclass
class TrainerConfig:
    """Optimizer settings for explicit_train."""
    mode: str = "exact"             # "exact" (coordinate line search) or "shots" (SPSA)
    max_iter: int = 200
    tol: float = 1e-4               # |ΔJ| threshold over ``patience`` iterations
    patience: int = 10
    shots: int = 1000               # post-selected shots per data point (shot mode)
    initial_step: float = 0.5       # line-search step (radians)
    min_step: float = 1e-4
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    stop_at_zero_risk: bool = True
    attempt_budget: int = ATTEMPT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("exact", "shots"):
            raise InputError(f"mode must be 'exact' or 'shots', got {self.mode!r}")


@dataclass
class TrainingTrace:
    costs: List[float] = field(default_factory=list)      # smoothed cross-entropy J(θ)
    risks: List[float] = field(default_factory=list)      # empirical risk
    converged: bool = False
    hit_iteration_cap: bool = False
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "costs": self.costs,
            "risks": self.risks,
            "converged": self.converged,
            "hit_iteration_cap": self.hit_iteration_cap,
            "iterations": self.iterations,
        }


def _complementary(plus) -> Tuple[float, float]:
    """(plus, 1 - plus) computed so the pair sums to exactly 1.0."""
    plus = min(1.0, max(0.0, float(plus)))
    if plus >= 0.5:
        return plus, 1.0 - plus
    minus = 1.0 - plus
    return 1.0 - minus, minus


def _outcome_signs(g, states):
    signs = np.empty(len(states), dtype=np.int64)
    for idx, s in enumerate(states):
        value = g(s)
        if value not in (1, -1):
            raise InputError(f"binning returned {value!r} for outcome {s.to_json()}; expected ±1")
        signs[idx] = value
    return signs


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def explicit_exact_prob(vm: VariationalModel, x) -> Tuple[float, float]:
    """Pr(±1 | p_x) from the post-selected output state."""
    circuit = vm.circuit(x)
    p = vm.feature_map.outcome(x)
    state = output_state(circuit, p)
    norm = state.norm_squared()
    if norm <= REACHABILITY_TOL:
        raise UnreachableOutcomeError(f"designated outcome {p.to_json()} has zero probability")
    states = list(state.amplitudes)
    weights = np.abs(state.vector()) ** 2
    signs = _outcome_signs(vm.g, states)
    return _complementary(float(weights[signs == 1].sum()) / norm)


def explicit_predict_prob(vm: VariationalModel, x, shots, seed,
                          attempt_budget=ATTEMPT_BUDGET) -> Tuple[float, float]:
    """Shot estimate T_{+1|x}/T_x, T_{-1|x}/T_x over runs post-selected on p_x."""
    if shots < 1:
        raise InputError(f"shots must be positive, got {shots}")
    circuit = vm.circuit(x)
    p = vm.feature_map.outcome(x)
    sampler = ShotSampler(circuit)
    target = sampler.adaptive_id(p)
    signs = _outcome_signs(vm.g, sampler.final_outcomes)

    arrivals = plus = attempts = 0
    block = 0
    while arrivals < shots:
        if attempts >= attempt_budget:
            raise StarvationError(
                f"only {arrivals} of {shots} runs hit {p.to_json()} after {attempts} attempts",
                attempts=attempts, arrivals=arrivals,
            )
        size = min(max(4096, 2 * (shots - arrivals)), attempt_budget - attempts)
        idx = sampler.draw_indices(size, derive_seed(seed, f"explicit-{block}"))
        block += 1
        hits = np.flatnonzero(sampler.adaptive_ids[idx] == target)
        needed = shots - arrivals
        if hits.size >= needed:
            hits = hits[:needed]
            attempts += int(hits[-1]) + 1
        else:
            attempts += size
        plus += int(np.count_nonzero(signs[idx[hits]] == 1))
        arrivals += int(hits.size)
    return _complementary(plus / shots)


def explicit_predict(vm: VariationalModel, x, shots=None, seed=0) -> int:
    """argmax_y Pr(y | p_x), ties to +1."""
    plus, minus = explicit_exact_prob(vm, x) if shots is None else explicit_predict_prob(vm, x, shots, seed)
    return 1 if plus >= minus else -1


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _evaluate(vm, dataset, config, seed):
    """(smoothed cross-entropy, empirical risk) of ``vm`` on ``dataset``."""
    def point_probs(idx):
        x = dataset.points[idx]
        if config.mode == "exact":
            return explicit_exact_prob(vm, x)
        return explicit_predict_prob(vm, x, config.shots, derive_seed(seed, f"point-{idx}"),
                                     attempt_budget=config.attempt_budget)

    probs = parallel_map(point_probs, range(len(dataset)), workers=config.workers)
    cost = 0.0
    errors = 0
    for (plus, minus), y in zip(probs, dataset.labels):
        p_y = plus if y == 1 else minus
        cost -= math.log((p_y + SMOOTHING) / (1.0 + 2.0 * SMOOTHING))
        predicted = 1 if plus >= minus else -1
        errors += int(predicted != y)
    return cost / len(dataset), errors / len(dataset)


def _converged(costs, config):
    if len(costs) <= config.patience:
        return False
    return abs(costs[-config.patience - 1] - costs[-1]) < config.tol


def explicit_train(vm: VariationalModel, dataset: Dataset, config: TrainerConfig = None,
                   seed=0) -> Tuple[VariationalModel, TrainingTrace]:
    """Fit θ to minimise the smoothed cross-entropy; returns the best model and its trace.

    Exact mode uses coordinate line search (the cost never increases); shot mode
    uses simultaneous-perturbation stochastic approximation.
    """
    config = config or TrainerConfig()
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    if dataset.dimension != vm.feature_map.d:
        raise InputError(f"dataset dimension {dataset.dimension} != feature map d={vm.feature_map.d}")

    trace = TrainingTrace()
    theta = vm.theta.copy()
    cost, risk = _evaluate(vm, dataset, config, derive_seed(seed, "eval-0"))
    trace.costs.append(cost)
    trace.risks.append(risk)
    best = (cost, risk, theta.copy())
    logger.info("Explicit training (%s mode): %d points, %d parameters, J=%.4f risk=%.3f",
                config.mode, len(dataset), theta.size, cost, risk)

    step = config.initial_step
    rng = make_rng(seed, "spsa")
    for it in range(1, config.max_iter + 1):
        if config.stop_at_zero_risk and risk == 0.0:
            trace.converged = True
            break

        if config.mode == "exact":
            improved = False
            for i in range(theta.size):
                for direction in (1.0, -1.0):
                    cand = theta.copy()
                    cand[i] += direction * step
                    c_cost, c_risk = _evaluate(vm.with_theta(cand), dataset, config, 0)
                    if c_cost < cost:
                        theta, cost, risk = cand, c_cost, c_risk
                        improved = True
                        break
            if not improved:
                step *= 0.5
        else:
            a_k = config.spsa_a / (it + 10) ** 0.602
            c_k = config.spsa_c / it ** 0.101
            perturb = rng.choice((-1.0, 1.0), size=theta.size)
            j_plus, _ = _evaluate(vm.with_theta(theta + c_k * perturb), dataset, config,
                                  derive_seed(seed, f"plus-{it}"))
            j_minus, _ = _evaluate(vm.with_theta(theta - c_k * perturb), dataset, config,
                                   derive_seed(seed, f"minus-{it}"))
            theta = theta - a_k * (j_plus - j_minus) / (2.0 * c_k) * perturb
            cost, risk = _evaluate(vm.with_theta(theta), dataset, config,
                                   derive_seed(seed, f"eval-{it}"))

        trace.costs.append(cost)
        trace.risks.append(risk)
        trace.iterations = it
        if cost < best[0]:
            best = (cost, risk, theta.copy())
        logger.debug("Iteration %d: J=%.5f risk=%.3f step=%.4g", it, cost, risk, step)

        if _converged(trace.costs, config) or (config.mode == "exact" and step < config.min_step):
            trace.converged = True
            break
    else:
        if not (config.stop_at_zero_risk and risk == 0.0):
            trace.hit_iteration_cap = True
            logger.warning("Explicit training stopped at the iteration cap (%d); "
                           "returning best-so-far parameters", config.max_iter)
        else:
            trace.converged = True

    logger.info("Explicit training done after %d iterations: J=%.4f risk=%.3f",
                trace.iterations, best[0], best[1])
    return vm.with_theta(best[2]), trace
