# svm.py

"""Soft-margin SVM on a precomputed kernel, solved in the dual by SMO."""

import logging
from dataclasses import dataclass, field

import numpy as np

from config import SVM_KKT_TOL, SVM_MAX_ITER
from optics.errors import ConvergenceError, InputError, ParseError
from qml.kernel import GramMatrix, clip_psd

logger = logging.getLogger(__name__)

TAU = 1e-12
BOUND_EPS = 1e-12


@dataclass
class SvmModel:
    """Dual coefficients, bias and soft-margin parameter of a trained SVM."""
    alphas: np.ndarray
    bias: float
    lam: float
    labels: np.ndarray            # training labels, needed for alpha_l y_l
    iterations: int = 0
    kkt_residual: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def box(self) -> float:
        return box_bound(len(self.alphas), self.lam)

    def to_json(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "bias": float(self.bias),
            "lambda": float(self.lam),
            "labels": [int(y) for y in self.labels],
        }

    @classmethod
    def from_json(cls, data, source=None) -> "SvmModel":
        if not isinstance(data, dict):
            raise ParseError("model must be a JSON object", source=source)
        for key in ("alphas", "bias", "lambda", "labels"):
            if key not in data:
                raise ParseError("missing key", source=source, field=key)
        try:
            alphas = np.asarray(data["alphas"], dtype=float)
            labels = np.asarray(data["labels"], dtype=int)
            bias, lam = float(data["bias"]), float(data["lambda"])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad value ({exc})", source=source) from exc
        if alphas.shape != labels.shape:
            raise ParseError("alphas and labels differ in length", source=source, field="labels")
        return cls(alphas, bias, lam, labels)


def box_bound(size, lam) -> float:
    """Upper bound C = 1 / (2 |T| lambda) on each dual coefficient."""
    return 1.0 / (2.0 * size * lam)


def _index_sets(alphas, labels, c):
    up = ((labels == 1) & (alphas < c - BOUND_EPS)) | ((labels == -1) & (alphas > BOUND_EPS))
    low = ((labels == 1) & (alphas > BOUND_EPS)) | ((labels == -1) & (alphas < c - BOUND_EPS))
    return up, low


def _violating_pair(grad, alphas, labels, c):
    """Maximal violating pair (i, j) and the KKT gap m(alpha) - M(alpha)."""
    score = -labels * grad
    up, low = _index_sets(alphas, labels, c)
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.flatnonzero(up)[np.argmax(score[up])])
    j = int(np.flatnonzero(low)[np.argmin(score[low])])
    return i, j, float(score[i] - score[j])


def _bias(grad, alphas, labels, c):
    yg = labels * grad
    free = (alphas > BOUND_EPS) & (alphas < c - BOUND_EPS)
    if free.any():
        return -float(np.mean(yg[free]))
    upper = alphas >= c - BOUND_EPS
    lower = ~upper
    lb_mask = ((labels == 1) & upper) | ((labels == -1) & lower)
    ub_mask = ((labels == 1) & lower) | ((labels == -1) & upper)
    lb = float(yg[lb_mask].max()) if lb_mask.any() else float(yg[ub_mask].min())
    ub = float(yg[ub_mask].min()) if ub_mask.any() else lb
    return -(lb + ub) / 2.0


def svm_train(gram, labels, lam, max_iter=SVM_MAX_ITER, tol=SVM_KKT_TOL) -> SvmModel:
    """Maximise sum(alpha) - 1/2 sum alpha_l alpha_l' y_l y_l' K_ll'
    subject to sum alpha_l y_l = 0 and 0 <= alpha_l <= 1/(2|T|lambda).

    Args:
        gram: GramMatrix or square array; negative eigenvalues are clipped first.
        labels: Sequence of -1/+1 training labels.
        lam: Soft-margin parameter (positive).
        max_iter: Cap on pair updates.
        tol: KKT violation at which the solver stops.

    Returns:
        SvmModel. Raises ConvergenceError when the cap is hit.
    """
    entries = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    labels = np.asarray(labels, dtype=int).ravel()
    size = labels.shape[0]
    if entries.shape != (size, size):
        raise InputError(f"Gram matrix shape {entries.shape} does not match {size} labels")
    if size == 0:
        raise InputError("no training points")
    if np.any((labels != 1) & (labels != -1)):
        raise InputError("labels must be -1 or +1")
    if lam <= 0:
        raise InputError(f"lambda must be positive, got {lam}")

    kernel = clip_psd(entries)
    c = box_bound(size, lam)
    alphas = np.zeros(size)

    if np.all(labels == labels[0]):
        # sum alpha_l y_l = 0 with a single label forces alpha = 0
        logger.warning("All %d training labels are %+d; model reduces to its bias", size, labels[0])
        return SvmModel(alphas, float(labels[0]), lam, labels, notes=["single-class"])

    q = (labels[:, None] * labels[None, :]) * kernel
    grad = -np.ones(size)
    gap = float("inf")
    for iteration in range(max_iter + 1):
        i, j, gap = _violating_pair(grad, alphas, labels, c)
        if gap < tol:
            break
        if iteration == max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} pair updates (KKT violation {gap:.3e})",
                residual=gap,
            )
        quad = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if quad <= 0:
            quad = TAU
        old_i, old_j = alphas[i], alphas[j]
        if labels[i] != labels[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > c:
                    ai, aj = c, c - diff
            elif aj > c:
                aj, ai = c, c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > c:
                if ai > c:
                    ai, aj = c, total - c
            elif aj < 0:
                aj, ai = 0.0, total
            if total > c:
                if aj > c:
                    aj, ai = c, total - c
            elif ai < 0:
                ai, aj = 0.0, total
        alphas[i], alphas[j] = ai, aj
        grad += q[:, i] * (ai - old_i) + q[:, j] * (aj - old_j)
        if iteration and iteration % 10000 == 0:
            logger.debug("SMO iteration %d: KKT violation %.3e", iteration, gap)

    bias = _bias(grad, alphas, labels, c)
    logger.info("SMO converged after %d pair updates (KKT violation %.2e, %d support vectors)",
                iteration, max(gap, 0.0), int(np.count_nonzero(alphas > BOUND_EPS)))
    return SvmModel(alphas, bias, lam, labels, iterations=iteration, kkt_residual=max(gap, 0.0))


def kkt_violation(model: SvmModel, gram, labels=None) -> float:
    """Maximal KKT violation m(alpha) - M(alpha) of ``model`` on ``gram``."""
    entries = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    labels = model.labels if labels is None else np.asarray(labels, dtype=int)
    kernel = clip_psd(entries)
    q = (labels[:, None] * labels[None, :]) * kernel
    grad = q @ model.alphas - 1.0
    _, _, gap = _violating_pair(grad, model.alphas, labels, model.box)
    return max(gap, 0.0)


def decision_function(model: SvmModel, gram_row) -> float:
    """sum_l alpha_l y_l kappa(x_l, x) + b."""
    row = np.asarray(gram_row, dtype=float).ravel()
    if row.shape[0] != model.alphas.shape[0]:
        raise InputError(f"kernel row has {row.shape[0]} entries, model has {model.alphas.shape[0]}")
    return float(np.dot(model.alphas * model.labels, row) + model.bias)


def svm_predict(model: SvmModel, gram_row) -> int:
    """sign of the decision function, with sign(0) = +1."""
    return 1 if decision_function(model, gram_row) >= 0 else -1
