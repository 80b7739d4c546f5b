# interferometer.py

"""Unitary interferometers, adaptive interferometer families and mesh builders."""

import logging
import math
from dataclasses import dataclass
from threading import Lock
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import qr

from config import UNITARITY_TOL
from optics.errors import InputError, ParseError
from optics.fock import FockState, multi_factorial, phi_sector
from optics.permanent import (
    as_complex_matrix,
    matrix_from_json,
    matrix_to_json,
    permanent_repeated,
)
from optics.utils import check_capacity, make_rng

logger = logging.getLogger(__name__)


def unitarity_defect(u) -> float:
    """max |U U^dagger - I| entrywise."""
    arr = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(arr @ arr.conj().T - np.eye(arr.shape[0])))) if arr.size else 0.0


@dataclass(frozen=True, eq=False)
class Interferometer:
    """An m×m unitary acting on mode creation operators."""
    matrix: np.ndarray

    def __post_init__(self):
        arr = as_complex_matrix(self.matrix, "interferometer")
        if arr.shape[0] != arr.shape[1]:
            raise InputError(f"interferometer must be square, got {arr.shape}")
        defect = unitarity_defect(arr)
        if defect > UNITARITY_TOL:
            raise InputError(f"matrix is not unitary (defect {defect:.3e})")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, m):
        return cls(np.eye(m, dtype=complex))

    def dagger(self) -> "Interferometer":
        return Interferometer(self.matrix.conj().T)

    def __eq__(self, other):
        if not isinstance(other, Interferometer):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)

    @classmethod
    def from_json(cls, data, source=None) -> "Interferometer":
        return cls(matrix_from_json(data, source=source))


def _as_matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, Interferometer) else np.asarray(u, dtype=complex)


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def direct_sum_identity(j, block) -> np.ndarray:
    """1_j ⊕ block."""
    block = np.asarray(block, dtype=complex)
    size = j + block.shape[0]
    out = np.eye(size, dtype=complex)
    out[j:, j:] = block
    return out


class AdaptiveInterferometer:
    """Family U^p of interferometers indexed by adaptive outcomes of the first k modes.

    Stage j (1 <= j <= k) acts on modes j..m-1 after mode j-1 is measured with
    the outcome prefix (p_1, ..., p_j). Stages come from ``stages`` (a table
    keyed by prefix tuples, identity when absent) or ``stage_generator`` (a pure
    callback prefix -> (m-j)×(m-j) unitary). ``post`` is an optional trailing
    non-adaptive unitary on the m-k unmeasured modes.
    """

    def __init__(self, m, k, n, u0, stages=None, stage_generator=None, post=None):
        if m < 1:
            raise InputError(f"number of modes must be positive, got {m}")
        if not 0 <= k <= m:
            raise InputError(f"adaptive modes must satisfy 0 <= k <= m, got k={k}, m={m}")
        if not 0 <= n <= m:
            raise InputError(f"input photons must satisfy 0 <= n <= m, got n={n}, m={m}")
        if stages and stage_generator is not None:
            raise InputError("give either a stage table or a stage generator, not both")
        self.m = m
        self.k = k
        self.n = n
        self.u0 = u0 if isinstance(u0, Interferometer) else Interferometer(u0)
        if self.u0.modes != m:
            raise InputError(f"u0 acts on {self.u0.modes} modes, expected {m}")
        self._stages: Dict[Tuple[int, ...], Interferometer] = {}
        for prefix, mat in (stages or {}).items():
            self._add_stage(tuple(prefix), mat)
        self._generator: Optional[Callable] = stage_generator
        self.post = None
        if post is not None:
            self.post = post if isinstance(post, Interferometer) else Interferometer(post)
            if self.post.modes != m - k:
                raise InputError(f"post unitary acts on {self.post.modes} modes, expected {m - k}")
        self._cache: Dict[Tuple[int, ...], Interferometer] = {}
        self._cache_lock = Lock()

    def _add_stage(self, prefix, mat):
        j = len(prefix)
        if not 1 <= j <= self.k:
            raise InputError(f"stage prefix {prefix} must have length 1..{self.k}")
        stage = mat if isinstance(mat, Interferometer) else Interferometer(mat)
        if stage.modes != self.m - j:
            raise InputError(
                f"stage for prefix {prefix} acts on {stage.modes} modes, expected {self.m - j}"
            )
        self._stages[prefix] = stage

    @classmethod
    def non_adaptive(cls, u, n):
        u = u if isinstance(u, Interferometer) else Interferometer(u)
        return cls(u.modes, 0, n, u)

    def stage(self, prefix) -> Interferometer:
        """U_j(p_1..p_j) for a prefix of length j."""
        prefix = tuple(prefix)
        j = len(prefix)
        if self._generator is not None:
            mat = self._generator(prefix)
            stage = mat if isinstance(mat, Interferometer) else Interferometer(mat)
            if stage.modes != self.m - j:
                raise InputError(
                    f"stage generator returned {stage.modes} modes for prefix {prefix}, "
                    f"expected {self.m - j}"
                )
            return stage
        stage = self._stages.get(prefix)
        if stage is None:
            return Interferometer.identity(self.m - j)
        return stage

    def compose(self, p) -> Interferometer:
        """U^p = [1_k ⊕ U_k(p_1..p_k)] ... [1_1 ⊕ U_1(p_1)] U_0 (then 1_k ⊕ post)."""
        p = p if isinstance(p, FockState) else FockState(tuple(p))
        if p.modes != self.k:
            raise InputError(f"adaptive outcome must have length {self.k}, got {p.modes}")
        if p.total_photons() > self.n:
            raise InputError(f"adaptive outcome {p.to_json()} exceeds {self.n} photons")
        key = p.occupations
        with self._cache_lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached

        total = self.u0.matrix
        for j in range(1, self.k + 1):
            total = direct_sum_identity(j, self.stage(key[:j]).matrix) @ total
        if self.post is not None:
            total = direct_sum_identity(self.k, self.post.matrix) @ total
        result = Interferometer(total)
        with self._cache_lock:
            self._cache[key] = result
        return result

    def with_post(self, post) -> "AdaptiveInterferometer":
        """Copy of this family with a trailing unitary on the unmeasured modes."""
        return AdaptiveInterferometer(
            self.m, self.k, self.n, self.u0,
            stages=dict(self._stages) or None,
            stage_generator=self._generator,
            post=post,
        )

    def reachable_prefixes(self):
        """Every prefix (length 1..k) whose photon total is at most n."""
        out = []
        for j in range(1, self.k + 1):
            for r in range(self.n + 1):
                out.extend(s.occupations for s in phi_sector(j, r))
        return out

    def to_json(self) -> dict:
        """JSON table form; generator-backed families are materialised over reachable prefixes."""
        stages = []
        for prefix in self.reachable_prefixes():
            if self._generator is None and prefix not in self._stages:
                continue
            stages.append({"prefix": list(prefix), "matrix": self.stage(prefix).to_json()})
        data = {"m": self.m, "k": self.k, "n": self.n, "u0": self.u0.to_json(), "stages": stages}
        if self.post is not None:
            data["post"] = self.post.to_json()
        return data

    @classmethod
    def from_json(cls, data, source=None) -> "AdaptiveInterferometer":
        if not isinstance(data, dict):
            raise ParseError("adaptive interferometer must be a JSON object", source=source)
        for key in ("m", "k", "n", "u0"):
            if key not in data:
                raise ParseError("missing key", source=source, field=key)
        for key in ("m", "k", "n"):
            if not _is_count(data[key]):
                raise ParseError(f"expected a non-negative integer, got {data[key]!r}",
                                 source=source, field=key)
        stages = {}
        for idx, entry in enumerate(data.get("stages", [])):
            if not isinstance(entry, dict) or "prefix" not in entry or "matrix" not in entry:
                raise ParseError("stage needs 'prefix' and 'matrix'", source=source,
                                 field=f"stages[{idx}]")
            if not isinstance(entry["prefix"], list) or not all(map(_is_count, entry["prefix"])):
                raise ParseError("prefix must be a list of photon counts", source=source,
                                 field=f"stages[{idx}].prefix")
            stages[tuple(entry["prefix"])] = matrix_from_json(entry["matrix"], source=source)
        post = data.get("post")
        try:
            return cls(
                data["m"], data["k"], data["n"],
                matrix_from_json(data["u0"], source=source),
                stages=stages or None,
                post=matrix_from_json(post, source=source) if post is not None else None,
            )
        except ParseError:
            raise
        except InputError as exc:
            raise ParseError(str(exc), source=source) from exc

    def __eq__(self, other):
        if not isinstance(other, AdaptiveInterferometer):
            return NotImplemented
        return self.to_json() == other.to_json()

    __hash__ = None


def compose_adaptive(a: AdaptiveInterferometer, p) -> Interferometer:
    return a.compose(p)


# ---------------------------------------------------------------------------
# Transition amplitudes
# ---------------------------------------------------------------------------

def amplitude(u, s, t) -> complex:
    """<s|U|t> = Per(U_{s,t}) / sqrt(s! t!), zero when photon numbers differ."""
    mat = _as_matrix(u)
    s = s if isinstance(s, FockState) else FockState(tuple(s))
    t = t if isinstance(t, FockState) else FockState(tuple(t))
    if s.modes != mat.shape[0] or t.modes != mat.shape[1]:
        raise InputError(
            f"states over ({s.modes}, {t.modes}) modes do not match a {mat.shape} interferometer"
        )
    if s.total_photons() != t.total_photons():
        return 0j
    per = permanent_repeated(mat, s.occupations, t.occupations)
    return per / math.sqrt(multi_factorial(s) * multi_factorial(t))


def fock_representation(u, n) -> np.ndarray:
    """Matrix [<s|U|t>] over s, t in Phi_{m,n} (canonical order)."""
    mat = _as_matrix(u)
    basis = phi_sector(mat.shape[0], n)
    check_capacity(len(basis) ** 2, "lifted unitary")
    out = np.empty((len(basis), len(basis)), dtype=complex)
    for a_idx, s in enumerate(basis):
        for b_idx, t in enumerate(basis):
            out[a_idx, b_idx] = amplitude(mat, s, t)
    return out


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def variational_param_count(m) -> int:
    """m(m-1)/2 blocks with two angles each, plus m output phases."""
    return m * (m - 1) + m


def mesh_pairs(m):
    """Mode pairs of the triangular mesh, in application order."""
    return [(i, i + 1) for layer in range(m - 1) for i in range(m - 1 - layer)]


def build_variational(m, theta) -> Interferometer:
    """Triangular mesh of blocks [[e^{iφ}cosθ, -sinθ], [e^{iφ}sinθ, cosθ]] then output phases.

    theta layout: (θ_1, φ_1, θ_2, φ_2, ..., α_1, ..., α_m). All zeros gives the identity.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    expected = variational_param_count(m)
    if theta.size != expected:
        raise InputError(f"mesh on {m} modes needs {expected} parameters, got {theta.size}")
    total = np.eye(m, dtype=complex)
    for idx, (i, j) in enumerate(mesh_pairs(m)):
        angle, phase = theta[2 * idx], theta[2 * idx + 1]
        c, s = math.cos(angle), math.sin(angle)
        e = complex(math.cos(phase), math.sin(phase))
        block = np.eye(m, dtype=complex)
        block[i, i], block[i, j] = e * c, -s
        block[j, i], block[j, j] = e * s, c
        total = block @ total
    phases = np.exp(1j * theta[expected - m:])
    return Interferometer(phases[:, None] * total)


def random_unitary(m, seed) -> Interferometer:
    """Haar-random unitary via QR of a complex Gaussian matrix with phase-fixed R."""
    if m < 1:
        raise InputError(f"number of modes must be positive, got {m}")
    rng = make_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return Interferometer(q)
