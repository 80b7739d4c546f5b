"""Builders and independent reference simulators shared by the test suite."""

import math
from collections import defaultdict

import numpy as np

from optics.fock import FockState
from optics.interferometer import AdaptiveInterferometer, direct_sum_identity, random_unitary
from qml.dataset import Dataset

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def make_hom():
    """Balanced beam splitter with one photon in each input mode."""
    return AdaptiveInterferometer.non_adaptive(HADAMARD, 2)


def make_unitary(m, seed=7):
    return random_unitary(m, seed).matrix


def make_random_matrix(rows, cols=None, seed=0):
    cols = rows if cols is None else cols
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def make_adaptive(m=4, k=2, n=3, seed=11):
    """Random adaptive instance: Haar U_0 plus a Haar stage for every reachable prefix."""
    base = AdaptiveInterferometer(m, k, n, make_unitary(m, seed))
    stages = {}
    for offset, prefix in enumerate(base.reachable_prefixes()):
        stages[tuple(prefix)] = make_unitary(m - len(prefix), seed * 1000 + offset + 1)
    return AdaptiveInterferometer(m, k, n, make_unitary(m, seed), stages=stages)


def make_tritter_feedforward():
    """Three-mode Fourier interferometer, then H or SWAP on modes 1..2 depending on mode 0."""
    m = 3
    w = np.exp(2j * np.pi / 3)
    dft = np.array([[w ** (j * c) for c in range(m)] for j in range(m)]) / math.sqrt(m)
    stages = {(0,): np.eye(2), (1,): HADAMARD, (2,): SWAP}
    return AdaptiveInterferometer(m, 1, 2, dft, stages=stages)


def make_dataset(points, labels, name="toy"):
    return Dataset(np.asarray(points, dtype=float), np.asarray(labels, dtype=int), name)


# ---------------------------------------------------------------------------
# Reference simulation by creation-operator expansion
# ---------------------------------------------------------------------------

def evolve_basis(u, t):
    """U|t> as {occupation tuple: amplitude}.

    Expands prod_j (sum_i U[i, j] a_i^dagger)^{t_j} / sqrt(t_j!) applied to vacuum.
    """
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    poly = {(0,) * m: 1.0 + 0j}
    for j, count in enumerate(t):
        for _ in range(count):
            nxt = defaultdict(complex)
            for mono, coef in poly.items():
                for i in range(m):
                    if u[i, j] == 0:
                        continue
                    grown = list(mono)
                    grown[i] += 1
                    nxt[tuple(grown)] += coef * u[i, j]
            poly = nxt
    norm_t = math.sqrt(math.prod(math.factorial(v) for v in t))
    out = {}
    for mono, coef in poly.items():
        out[mono] = coef * math.sqrt(math.prod(math.factorial(v) for v in mono)) / norm_t
    return out


def evolve_state(u, state):
    """Apply U to a superposition {occupation tuple: amplitude}."""
    out = defaultdict(complex)
    for basis, amp in state.items():
        for target, value in evolve_basis(u, basis).items():
            out[target] += amp * value
    return dict(out)


def reference_joint(a: AdaptiveInterferometer):
    """Joint probabilities {(p, s): prob} by measuring modes one at a time.

    Each measured mode is projected on every photon count (unnormalised), then
    the stage for the prefix seen so far acts on the remaining modes.
    """
    m, k, n = a.m, a.k, a.n
    start = {(1,) * n + (0,) * (m - n): 1.0 + 0j}
    branches = {(): evolve_state(a.u0.matrix, start)}
    for j in range(1, k + 1):
        nxt = {}
        for prefix, state in branches.items():
            for count in range(n - sum(prefix) + 1):
                projected = {b: v for b, v in state.items() if b[j - 1] == count}
                if not projected:
                    continue
                new_prefix = prefix + (count,)
                stage = direct_sum_identity(j, a.stage(new_prefix).matrix)
                nxt[new_prefix] = evolve_state(stage, projected)
        branches = nxt
    probs = {}
    for prefix, state in branches.items():
        if a.post is not None:
            state = evolve_state(direct_sum_identity(k, a.post.matrix), state)
        for basis, amp in state.items():
            key = (FockState(basis[:k]), FockState(basis[k:]))
            probs[key] = probs.get(key, 0.0) + abs(amp) ** 2
    return probs


def reference_output_state(a: AdaptiveInterferometer, p):
    """Unnormalised final-mode amplitudes {s: amplitude} after adaptive outcome p."""
    p = p if isinstance(p, FockState) else FockState(tuple(p))
    start = {(1,) * a.n + (0,) * (a.m - a.n): 1.0 + 0j}
    state = evolve_state(a.compose(p).matrix, start)
    return {
        FockState(b[a.k:]): v for b, v in state.items() if b[:a.k] == p.occupations
    }
