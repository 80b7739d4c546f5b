# kernel.py

"""Quantum-kernel Gram matrices: exact (output-state overlaps) and shot-estimated."""

import logging
from dataclasses import dataclass

import numpy as np

from config import ATTEMPT_BUDGET
from optics.errors import InputError, ParseError, StarvationError
from optics.sampler import estimate_overlap_algorithm1
from optics.strong_sim import overlap_normalized
from optics.utils import derive_seed, parallel_map
from qml.dataset import Dataset
from qml.feature_map import FeatureMapSpec

logger = logging.getLogger(__name__)

PSD_TOL = 1e-8


@dataclass
class GramMatrix:
    """Kernel values between training points."""
    entries: np.ndarray
    provenance: str = "exact"     # "exact" or "shot-estimated(T=...)"

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {
            "n": self.size,
            "entries": [[float(v) for v in row] for row in self.entries],
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data, source=None) -> "GramMatrix":
        if not isinstance(data, dict) or "entries" not in data:
            raise ParseError("Gram matrix needs 'n' and 'entries'", source=source)
        try:
            entries = np.asarray(data["entries"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"non-numeric entry ({exc})", source=source, field="entries") from exc
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ParseError(f"entries must be square, got shape {entries.shape}",
                             source=source, field="entries")
        if "n" in data and data["n"] != entries.shape[0]:
            raise ParseError(f"n={data['n']} but {entries.shape[0]} rows", source=source, field="n")
        return cls(entries, str(data.get("provenance", "exact")))


def _pairs(size):
    return [(i, j) for i in range(size) for j in range(i, size)]


def _encode_all(fm: FeatureMapSpec, points):
    return [(fm.encode(x), fm.outcome(x)) for x in points]


def kernel_entry_exact(fm: FeatureMapSpec, x1, x2) -> float:
    """Normalised overlap of the post-selected encodings of x1 and x2."""
    a, p = fm.encode(x1), fm.outcome(x1)
    b, q = fm.encode(x2), fm.outcome(x2)
    return overlap_normalized(a, p, b, q)


def _fill_symmetric(size, pairs, values):
    entries = np.zeros((size, size))
    for (i, j), value in zip(pairs, values):
        entries[i, j] = entries[j, i] = value
    return entries


def gram_exact(fm: FeatureMapSpec, dataset: Dataset, workers=1, progress_callback=None) -> GramMatrix:
    """Exact Gram matrix from the upper triangle (diagonal fixed at 1)."""
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    encoded = _encode_all(fm, dataset.points)
    pairs = [(i, j) for i, j in _pairs(len(dataset)) if i != j]

    def entry(pair):
        i, j = pair
        (a, p), (b, q) = encoded[i], encoded[j]
        return overlap_normalized(a, p, b, q)

    logger.info("Exact Gram: %d points, %d off-diagonal pairs, workers=%d",
                len(dataset), len(pairs), workers)
    values = parallel_map(entry, pairs, workers=workers, progress_callback=progress_callback)
    entries = _fill_symmetric(len(dataset), pairs, values)
    np.fill_diagonal(entries, 1.0)
    return GramMatrix(entries, "exact")


def gram_estimated(fm: FeatureMapSpec, dataset: Dataset, shots, seed, delta=0.05, workers=1,
                   attempt_budget=ATTEMPT_BUDGET, progress_callback=None) -> GramMatrix:
    """Shot-estimated Gram matrix: one overlap-estimation loop per upper-triangle pair."""
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    encoded = _encode_all(fm, dataset.points)
    pairs = _pairs(len(dataset))

    def entry(pair):
        i, j = pair
        (a, p), (b, q) = encoded[i], encoded[j]
        try:
            report = estimate_overlap_algorithm1(
                a, p, q, shots, derive_seed(seed, f"gram-{i}-{j}"), delta=delta,
                b=b, attempt_budget=attempt_budget,
            )
        except StarvationError as exc:
            raise StarvationError(f"Gram entry ({i}, {j}): {exc}", attempts=exc.attempts,
                                  arrivals=exc.arrivals, indices=(i, j)) from exc
        return report.value

    logger.info("Estimated Gram: %d points, %d pairs, T=%d shots, workers=%d",
                len(dataset), len(pairs), shots, workers)
    values = parallel_map(entry, pairs, workers=workers, progress_callback=progress_callback)
    return GramMatrix(_fill_symmetric(len(dataset), pairs, values), f"shot-estimated(T={shots})")


def gram_rows(fm: FeatureMapSpec, train: Dataset, points, exact=True, shots=None, seed=0,
              delta=0.05, workers=1, attempt_budget=ATTEMPT_BUDGET) -> np.ndarray:
    """Kernel rows kappa(x_l, x) for each x in ``points`` against the training set."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    if not exact and not shots:
        raise InputError("estimated kernel rows need a positive shot count")
    encoded_train = _encode_all(fm, train.points)
    encoded_points = _encode_all(fm, points)
    jobs = [(r, c) for r in range(len(points)) for c in range(len(train))]

    def entry(job):
        r, c = job
        (a, p), (b, q) = encoded_train[c], encoded_points[r]
        if exact:
            return overlap_normalized(a, p, b, q)
        try:
            return estimate_overlap_algorithm1(
                a, p, q, shots, derive_seed(seed, f"row-{r}-{c}"), delta=delta,
                b=b, attempt_budget=attempt_budget,
            ).value
        except StarvationError as exc:
            raise StarvationError(f"kernel row {r}, column {c}: {exc}", attempts=exc.attempts,
                                  arrivals=exc.arrivals, indices=(r, c)) from exc

    values = parallel_map(entry, jobs, workers=workers)
    return np.asarray(values, dtype=float).reshape(len(points), len(train))


def clip_psd(entries) -> np.ndarray:
    """Project a symmetric matrix onto the PSD cone by clipping negative eigenvalues."""
    sym = (np.asarray(entries, dtype=float) + np.asarray(entries, dtype=float).T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() >= 0.0:
        return sym
    clipped = np.clip(eigvals, 0.0, None)
    log = logger.warning if eigvals.min() < -PSD_TOL else logger.debug
    log("Clipping %d negative Gram eigenvalue(s), most negative %.3e",
        int(np.count_nonzero(eigvals < 0)), float(eigvals.min()))
    return (eigvecs * clipped) @ eigvecs.T


def is_psd(entries, tol=PSD_TOL) -> bool:
    return bool(np.linalg.eigvalsh(np.asarray(entries, dtype=float)).min() >= -tol)
