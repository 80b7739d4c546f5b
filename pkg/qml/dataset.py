# dataset.py

"""Labelled classical datasets for the kernel and variational classifiers."""

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from optics.errors import InputError, ParseError
from optics.utils import make_rng

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """Points x_l (rows of ``points``) with labels y_l in {-1, +1}."""
    points: np.ndarray      # shape (size, d)
    labels: np.ndarray      # shape (size,), entries -1/+1
    name: str = "dataset"

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise InputError(f"points must be a 2-D array, got shape {points.shape}")
        labels = np.asarray(self.labels, dtype=int).ravel()
        if labels.shape[0] != points.shape[0]:
            raise InputError(f"{points.shape[0]} points but {labels.shape[0]} labels")
        bad = labels[(labels != 1) & (labels != -1)]
        if bad.size:
            raise InputError(f"labels must be -1 or +1, got {int(bad[0])}")
        if not np.all(np.isfinite(points)):
            raise InputError("points contain non-finite values")
        self.points = points
        self.labels = labels

    def __len__(self):
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def subset(self, indices, name=None) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.points[idx], self.labels[idx], name or self.name)

    # -------------------------------------------------------------------
    # CSV: columns x_1..x_d,label
    # -------------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x_{i + 1}" for i in range(self.dimension)] + ["label"])
        for x, y in zip(self.points, self.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, name="dataset", source=None) -> "Dataset":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty dataset file", source=source, line=1) from None
        header = [h.strip() for h in header]
        if not header or header[-1] != "label":
            raise ParseError("last column must be 'label'", source=source, line=1,
                             field=header[-1] if header else None)
        dim = len(header) - 1
        if dim < 1:
            raise ParseError("need at least one feature column", source=source, line=1)

        points, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != dim + 1:
                raise ParseError(f"expected {dim + 1} columns, got {len(row)}",
                                 source=source, line=lineno)
            values = []
            for col, cell in zip(header[:-1], row[:-1]):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", source=source,
                                     line=lineno, field=col) from None
            try:
                label = int(float(row[-1]))
            except ValueError:
                raise ParseError(f"not a label: {row[-1]!r}", source=source,
                                 line=lineno, field="label") from None
            if label not in (-1, 1):
                raise ParseError(f"label must be -1 or +1, got {label}", source=source,
                                 line=lineno, field="label")
            points.append(values)
            labels.append(label)

        if not points:
            raise ParseError("dataset has no rows", source=source, line=2)
        logger.debug("Parsed %d points of dimension %d from %s", len(points), dim, source or name)
        return cls(np.asarray(points, dtype=float), np.asarray(labels, dtype=int), name)


def gaussian_blobs(n_points, d=2, seed=0, separation=3.0, spread=0.5, name="blobs") -> Dataset:
    """Two isotropic Gaussian clusters at ±separation/2 along the first axis.

    Labels alternate +1, -1 so every prefix is balanced.
    """
    if n_points < 1:
        raise InputError(f"n_points must be positive, got {n_points}")
    rng = make_rng(seed, "blobs")
    labels = np.where(np.arange(n_points) % 2 == 0, 1, -1)
    centers = np.zeros((n_points, d))
    centers[:, 0] = labels * separation / 2.0
    points = centers + spread * rng.standard_normal((n_points, d))
    return Dataset(points, labels, name)
