# permanent.py

"""Matrix permanents: exact (naive, Ryser), repeated rows/columns, and randomized estimators."""

import logging
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from optics.errors import InputError, ParseError
from optics.fock import FockState, multi_factorial, phi_sector, weight_masks
from optics.utils import make_rng

logger = logging.getLogger(__name__)

NAIVE_MAX_SIZE = 10
RYSER_MAX_SIZE = 30
NORM_TOL = 1e-9
_CHUNK = 16384


@dataclass
class PermanentEstimate:
    """Randomized permanent estimate with its additive error guarantee."""
    value: complex
    abs_error_bound: float   # holds with probability >= 1 - delta
    samples_used: int


# ---------------------------------------------------------------------------
# ComplexMatrix helpers
# ---------------------------------------------------------------------------

def as_complex_matrix(a, name="matrix") -> np.ndarray:
    """Validate and convert to a 2-D complex ndarray with finite entries."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def _square(a, name="matrix") -> np.ndarray:
    arr = as_complex_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be square, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def matrix_to_json(a) -> dict:
    arr = as_complex_matrix(a)
    return {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "re": [float(v) for v in arr.real.ravel()],
        "im": [float(v) for v in arr.imag.ravel()],
    }


def matrix_from_json(data, source=None) -> np.ndarray:
    if not isinstance(data, dict):
        raise ParseError("complex matrix must be a JSON object", source=source)
    for key in ("rows", "cols", "re", "im"):
        if key not in data:
            raise ParseError("missing key", source=source, field=key)
    rows, cols = data["rows"], data["cols"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 0 or cols < 0:
        raise ParseError("rows/cols must be non-negative integers", source=source, field="rows")
    for key in ("re", "im"):
        if not isinstance(data[key], list) or len(data[key]) != rows * cols:
            raise ParseError(
                f"expected {rows * cols} entries", source=source, field=key
            )
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric entry ({exc})", source=source, field="re/im") from exc
    arr = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite entry", source=source, field="re/im")
    return arr


# ---------------------------------------------------------------------------
# Exact permanents
# ---------------------------------------------------------------------------

def permanent_naive(a) -> complex:
    """Defining permutation sum; an O(n!·n) oracle for n <= 10."""
    arr = _square(a)
    n = arr.shape[0]
    if n > NAIVE_MAX_SIZE:
        raise InputError(f"naive permanent limited to size {NAIVE_MAX_SIZE}, got {n}")
    total = 0j
    rows = range(n)
    for sigma in permutations(range(n)):
        prod = 1 + 0j
        for i in rows:
            prod *= arr[i, sigma[i]]
        total += prod
    return complex(total)


def permanent_ryser(a) -> complex:
    """Ryser's formula with a Gray-code subset walk, O(n·2^n)."""
    arr = _square(a)
    n = arr.shape[0]
    if n == 0:
        return 1 + 0j
    if n > RYSER_MAX_SIZE:
        raise InputError(f"exact permanent limited to size {RYSER_MAX_SIZE}, got {n}")
    if n == 1:
        return complex(arr[0, 0])

    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    for step in range(1, 1 << n):
        j = (step & -step).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += arr[:, j]
        else:
            row_sums -= arr[:, j]
        term = np.prod(row_sums)
        if bin(gray).count("1") & 1:
            total -= term
        else:
            total += term
    return complex(total if n % 2 == 0 else -total)


def repeat_matrix(b, row_reps, col_reps) -> np.ndarray:
    """Repeat row i row_reps[i] times and column j col_reps[j] times (0 deletes)."""
    arr = as_complex_matrix(b)
    rows = list(row_reps)
    cols = list(col_reps)
    if len(rows) != arr.shape[0] or len(cols) != arr.shape[1]:
        raise InputError(
            f"repetition lengths ({len(rows)}, {len(cols)}) do not match "
            f"matrix shape {arr.shape}"
        )
    return np.repeat(np.repeat(arr, rows, axis=0), cols, axis=1)


def permanent_repeated(b, row_reps, col_reps) -> complex:
    if sum(row_reps) != sum(col_reps):
        raise InputError(
            f"row repetitions sum to {sum(row_reps)} but column repetitions to {sum(col_reps)}"
        )
    return permanent_ryser(repeat_matrix(b, row_reps, col_reps))


# ---------------------------------------------------------------------------
# Identities (generalised Laplace expansion, composition)
# ---------------------------------------------------------------------------

def laplace_expansion(w, col_mask) -> complex:
    """Expand Per(W) along the columns selected by ``col_mask``.

    Per(W) = sum over row masks i with |i| = |j| of Per(W[i, j]) * Per(W[~i, ~j]).
    """
    arr = _square(w)
    j = np.asarray(col_mask, dtype=bool)
    total = 0j
    for mask in weight_masks(arr.shape[0], int(j.sum())):
        i = np.asarray(mask, dtype=bool)
        total += permanent_ryser(arr[np.ix_(i, j)]) * permanent_ryser(arr[np.ix_(~i, ~j)])
    return complex(total)


def composition_expansion(m_mat, n_mat, u, v) -> complex:
    """Sum over s in Phi_{c,|u|} of Per(M[u, s]) Per(N[s, v]) / s!.

    M is a×c and N is c×b; the sum equals Per((M N)[u, v]).
    """
    m_arr = as_complex_matrix(m_mat)
    n_arr = as_complex_matrix(n_mat)
    c = m_arr.shape[1]
    total = 0j
    for s in phi_sector(c, sum(u)):
        total += (permanent_repeated(m_arr, u, s) * permanent_repeated(n_arr, s, v)
                  / multi_factorial(s))
    return complex(total)


# ---------------------------------------------------------------------------
# Randomized estimators
# ---------------------------------------------------------------------------

def sample_count(epsilon, delta) -> int:
    """Single-shot estimators averaged: ceil(9 ln(2/delta) / epsilon^2)."""
    if epsilon <= 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return int(math.ceil(9.0 * math.log(2.0 / delta) / epsilon ** 2))


def spectral_norm(a) -> float:
    """Largest singular value (2-norm), from the SVD."""
    arr = as_complex_matrix(a)
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr, 2))


def _glynn_mean(arr, samples, rng):
    """Mean of prod(x) * prod(x @ A) over random sign vectors x, chunked in order."""
    n = arr.shape[0]
    total = 0j
    done = 0
    while done < samples:
        size = min(_CHUNK, samples - done)
        x = rng.choice((-1.0, 1.0), size=(size, n))
        total += np.sum(np.prod(x, axis=1) * np.prod(x @ arr, axis=1))
        done += size
    return total / samples


def estimate_permanent_gurvits(a, epsilon, delta, seed) -> PermanentEstimate:
    """Additive-error estimate: |value - Per(a)| <= epsilon·||a||^n w.p. >= 1 - delta."""
    arr = _square(a)
    samples = sample_count(epsilon, delta)
    n = arr.shape[0]
    if n == 0:
        return PermanentEstimate(1 + 0j, 0.0, samples)
    rng = make_rng(seed)
    value = _glynn_mean(arr, samples, rng)
    bound = epsilon * spectral_norm(arr) ** n
    return PermanentEstimate(complex(value), float(bound), samples)


def repeated_rows_factor(row_reps) -> float:
    """prod_i q_i! / sqrt(q_i^q_i), with 0^0 = 1."""
    factor = 1.0
    for q in row_reps:
        factor *= math.factorial(q) / math.sqrt(q ** q)
    return factor


def estimate_permanent_sq_repeated(b, row_reps, epsilon, delta, seed) -> PermanentEstimate:
    """Estimate |Per A|^2 where A repeats row i of ``b`` row_reps[i] times.

    The amplitude z ≈ Per A is estimated with a Glynn-type estimator that scales
    row i by sqrt(q_i) times a random root of unity, then squared. Additive
    error on the square is at most 3·epsilon·prod(q_i!^2 / q_i^q_i).
    """
    arr = as_complex_matrix(b)
    reps = tuple(row_reps.occupations if isinstance(row_reps, FockState) else row_reps)
    n_rows, n = arr.shape
    if len(reps) != n_rows:
        raise InputError(f"row_reps has length {len(reps)}, matrix has {n_rows} rows")
    if sum(reps) != n:
        raise InputError(f"row repetitions sum to {sum(reps)}, need {n}")
    norm = spectral_norm(arr)
    if norm > 1.0 + NORM_TOL:
        raise InputError(f"spectral norm {norm:.12g} exceeds 1; not a unitary submatrix")

    samples = sample_count(epsilon, delta)
    factor = repeated_rows_factor(reps)
    bound = 3.0 * epsilon * factor ** 2
    if n == 0:
        return PermanentEstimate(1 + 0j, 0.0, samples)

    keep = [i for i, q in enumerate(reps) if q > 0]
    q = np.asarray([reps[i] for i in keep], dtype=float)
    rows = arr[keep, :]
    order = 2 if q.max() <= 1 else n + 1
    roots = np.exp(2j * np.pi * np.arange(order) / order)
    scale = float(np.prod([math.factorial(int(v)) for v in q]) / np.prod(q ** (q / 2)))

    rng = make_rng(seed)
    total = 0j
    done = 0
    while done < samples:
        size = min(_CHUNK, samples - done)
        phases = roots[rng.integers(0, order, size=(size, len(keep)))]
        weights = np.prod(np.conj(phases) ** q, axis=1)
        z = phases * np.sqrt(q)
        total += np.sum(weights * np.prod(z @ rows, axis=1))
        done += size
    estimate = scale * total / samples
    return PermanentEstimate(complex(abs(estimate) ** 2), float(bound), samples)
