# feature_map.py

"""Encoding classical data points as post-selected adaptive linear-optics states."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from optics.errors import InputError, ParseError
from optics.fock import FockState
from optics.interferometer import (
    AdaptiveInterferometer,
    build_variational,
    variational_param_count,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FeatureMapSpec:
    """Phase encoding x -> (adaptive interferometer, designated outcome p_x).

    The data vector, scaled by ``scale`` and wrapped into [0, 2π), is tiled over
    the parameters of a triangular mesh on all m modes (U_0). With
    ``adaptive_stages`` every stage j is a mesh on m-j modes whose angles are the
    same encoding multiplied by (1 + photons seen so far). x = 0 gives identities.
    """
    d: int
    m: int
    n: int
    k: int
    scale: float = TWO_PI
    designated_outcome: Tuple[int, ...] = ()
    adaptive_stages: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise InputError(f"data dimension must be positive, got {self.d}")
        if not 0 <= self.k < self.m:
            raise InputError(f"need 0 <= k < m, got k={self.k}, m={self.m}")
        if not 1 <= self.n <= self.m:
            raise InputError(f"need 1 <= n <= m, got n={self.n}, m={self.m}")
        if self.d > variational_param_count(self.m):
            raise InputError(
                f"{self.d} features do not fit the {variational_param_count(self.m)} "
                f"parameters of a {self.m}-mode mesh"
            )
        designated = tuple(int(v) for v in self.designated_outcome)
        if len(designated) != self.k:
            raise InputError(f"designated outcome must have length {self.k}, got {len(designated)}")
        if sum(designated) > self.n:
            raise InputError(f"designated outcome {list(designated)} exceeds {self.n} photons")
        object.__setattr__(self, "designated_outcome", designated)

    def angles(self, x, modes) -> np.ndarray:
        """Encoding of ``x`` tiled over a mesh on ``modes`` modes."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.d:
            raise InputError(f"data point has dimension {x.size}, expected {self.d}")
        wrapped = np.mod(self.scale * x, TWO_PI)
        return np.resize(wrapped, variational_param_count(modes))

    def encode(self, x) -> AdaptiveInterferometer:
        base = self.angles(x, self.m)
        u0 = build_variational(self.m, base)
        generator = None
        if self.adaptive_stages and self.k:
            def generator(prefix):
                modes = self.m - len(prefix)
                return build_variational(modes, self.angles(x, modes) * (1 + sum(prefix)))
        return AdaptiveInterferometer(self.m, self.k, self.n, u0, stage_generator=generator)

    def outcome(self, x=None) -> FockState:
        """Designated adaptive outcome p_x (fixed pattern, independent of x)."""
        return FockState(self.designated_outcome)

    def to_json(self) -> dict:
        return {
            "d": self.d, "m": self.m, "n": self.n, "k": self.k,
            "scale": self.scale,
            "designated_outcome": list(self.designated_outcome),
            "adaptive_stages": self.adaptive_stages,
        }

    @classmethod
    def from_json(cls, data, source=None) -> "FeatureMapSpec":
        if not isinstance(data, dict):
            raise ParseError("feature map must be a JSON object", source=source)
        for key in ("d", "m", "n", "k"):
            if key not in data:
                raise ParseError("missing key", source=source, field=key)
        try:
            return cls(
                d=int(data["d"]), m=int(data["m"]), n=int(data["n"]), k=int(data["k"]),
                scale=float(data.get("scale", TWO_PI)),
                designated_outcome=tuple(data.get("designated_outcome",
                                                  _default_outcome(int(data["k"])))),
                adaptive_stages=bool(data.get("adaptive_stages", True)),
            )
        except InputError as exc:
            raise ParseError(str(exc), source=source) from exc


def _default_outcome(k) -> Tuple[int, ...]:
    return (1,) + (0,) * (k - 1) if k else ()


def default_feature_map(d, m, n, k, scale=TWO_PI, designated_outcome: Optional[tuple] = None,
                        adaptive_stages=True) -> FeatureMapSpec:
    """Phase-encoding feature map with designated outcome (1, 0, ..., 0)."""
    if designated_outcome is None:
        designated_outcome = _default_outcome(k)
    return FeatureMapSpec(d, m, n, k, scale, tuple(designated_outcome), adaptive_stages)
