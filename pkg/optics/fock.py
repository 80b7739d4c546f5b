# fock.py

"""Occupation-number multi-indices (Fock states) and their combinatorics."""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import List, Tuple

from optics.errors import InputError


@dataclass(frozen=True)
class FockState:
    """Photon occupation numbers per mode.

    A zero-length state is allowed and stands for the empty adaptive outcome
    of a circuit without measured modes.
    """
    occupations: Tuple[int, ...]

    def __post_init__(self):
        occ = tuple(self.occupations)
        for i, v in enumerate(occ):
            try:
                valid = not isinstance(v, (bool, str)) and int(v) == v and v >= 0
            except (TypeError, ValueError):
                valid = False
            if not valid:
                raise InputError(f"occupation {i} must be a non-negative integer, got {v!r}")
        object.__setattr__(self, "occupations", tuple(int(v) for v in occ))

    @classmethod
    def of(cls, *occupations):
        return cls(tuple(occupations))

    @property
    def modes(self) -> int:
        return len(self.occupations)

    def total_photons(self) -> int:
        return sum(self.occupations)

    def factorial(self) -> int:
        return multi_factorial(self)

    def concat(self, other: "FockState") -> "FockState":
        return FockState(self.occupations + other.occupations)

    def split(self, k: int) -> Tuple["FockState", "FockState"]:
        """Cut into (first k modes, remaining modes)."""
        if not 0 <= k <= self.modes:
            raise InputError(f"cannot split a {self.modes}-mode state at {k}")
        return FockState(self.occupations[:k]), FockState(self.occupations[k:])

    def __len__(self):
        return len(self.occupations)

    def __iter__(self):
        return iter(self.occupations)

    def __getitem__(self, i):
        return self.occupations[i]

    def to_json(self) -> list:
        return list(self.occupations)

    @classmethod
    def from_json(cls, data) -> "FockState":
        if not isinstance(data, (list, tuple)):
            raise InputError(f"Fock state must be a JSON array, got {type(data).__name__}")
        return cls(tuple(data))


def _as_state(s) -> FockState:
    return s if isinstance(s, FockState) else FockState(tuple(s))


@lru_cache(maxsize=None)
def _phi_tuples(m: int, n: int) -> Tuple[Tuple[int, ...], ...]:
    # reverse-lexicographic: first entry from n down to 0
    if m == 0:
        return ((),) if n == 0 else ()
    if m == 1:
        return ((n,),)
    out = []
    for first in range(n, -1, -1):
        for rest in _phi_tuples(m - 1, n - first):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_phi(m: int, n: int) -> List[FockState]:
    """All m-mode states with n photons, in reverse-lexicographic order."""
    if m < 1:
        raise InputError(f"number of modes must be positive, got {m}")
    if n < 0:
        raise InputError(f"photon number must be non-negative, got {n}")
    return [FockState(t) for t in _phi_tuples(m, n)]


def phi_sector(m: int, n: int) -> List[FockState]:
    """Like enumerate_phi but tolerates m = 0 (only the empty state, only for n = 0)."""
    if m < 0 or n < 0:
        raise InputError(f"invalid sector ({m}, {n})")
    return [FockState(t) for t in _phi_tuples(m, n)]


def count_phi(m: int, n: int) -> int:
    if m < 1:
        raise InputError(f"number of modes must be positive, got {m}")
    if n < 0:
        raise InputError(f"photon number must be non-negative, got {n}")
    return math.comb(m + n - 1, n)


def count_adaptive_outcomes(k: int, n: int) -> int:
    """Number of adaptive outcomes over k measured modes: C(n+k, n)."""
    if k < 1:
        raise InputError(f"number of adaptive modes must be positive, got {k}")
    if n < 0:
        raise InputError(f"photon number must be non-negative, got {n}")
    return math.comb(n + k, n)


def adaptive_outcomes(k: int, n: int) -> List[FockState]:
    """Every outcome of k measured modes holding at most n photons, grouped by r = 0..n."""
    out = []
    for r in range(n + 1):
        out.extend(phi_sector(k, r))
    return out


def multi_factorial(s) -> int:
    result = 1
    for v in _as_state(s):
        result *= math.factorial(v)
    return result


def input_state(m: int, n: int) -> FockState:
    """The standard input t = (1^n, 0^(m-n))."""
    if n > m:
        raise InputError(f"cannot place {n} single photons in {m} modes")
    return FockState((1,) * n + (0,) * (m - n))


def weight_masks(n: int, r: int) -> List[Tuple[int, ...]]:
    """Binary masks of length n and weight r, in lexicographic order."""
    masks = []
    for ones in combinations(range(n), r):
        mask = [0] * n
        for i in ones:
            mask[i] = 1
        masks.append(tuple(mask))
    return sorted(masks)
