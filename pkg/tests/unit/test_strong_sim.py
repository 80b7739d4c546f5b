import math

import numpy as np
import pytest

from optics.errors import CapacityError, InputError, UnreachableOutcomeError
from optics.fock import FockState, adaptive_outcomes, phi_sector
from optics.interferometer import AdaptiveInterferometer
from optics.strong_sim import (
    EvalCounter,
    OutputDistribution,
    adaptive_distribution,
    final_distribution,
    final_outcomes,
    inner_product_bruteforce,
    inner_product_k0,
    inner_product_lemma1,
    joint_distribution,
    output_state,
    overlap_normalized,
    prob_final_estimate,
    prob_final_exact,
    prob_total,
)
from helpers import (
    HADAMARD,
    make_adaptive,
    make_hom,
    make_tritter_feedforward,
    make_unitary,
    reference_joint,
    reference_output_state,
)


class TestProbabilities:
    def test_hong_ou_mandel(self):
        a = make_hom()
        assert prob_total(a, (), (1, 1)) == pytest.approx(0.0, abs=1e-12)
        assert prob_total(a, (), (2, 0)) == pytest.approx(0.5)
        assert prob_final_exact(a, (0, 2)) == pytest.approx(0.5)

    def test_wrong_photon_count_is_zero(self):
        assert prob_total(make_hom(), (), (1, 0)) == 0.0

    def test_shape_errors(self):
        a = make_tritter_feedforward()
        with pytest.raises(InputError):
            prob_total(a, (1, 0), (1,))
        with pytest.raises(InputError):
            prob_final_exact(a, (1, 0, 0))

    @pytest.mark.parametrize("builder", [make_tritter_feedforward, make_adaptive])
    def test_joint_matches_measurement_reference(self, builder):
        a = builder()
        reference = reference_joint(a)
        dist = joint_distribution(a)
        assert dist.total() == pytest.approx(1.0, abs=1e-10)
        for state, prob in dist.entries.items():
            assert prob == pytest.approx(reference.get(state.split(a.k), 0.0), abs=1e-10)

    def test_joint_canonical_order(self):
        a = make_tritter_feedforward()
        assert list(joint_distribution(a).entries) == phi_sector(3, 2)

    def test_final_marginal_sums_to_one(self):
        a = make_adaptive(m=4, k=1, n=2)
        dist = final_distribution(a)
        assert dist.total() == pytest.approx(1.0, abs=1e-10)
        assert len(dist.entries) == len(final_outcomes(a))

    def test_final_matches_joint_marginal(self):
        a = make_adaptive(m=4, k=2, n=2)
        joint = joint_distribution(a)
        for s in phi_sector(2, 1):
            marginal = sum(prob for state, prob in joint.entries.items() if state.split(2)[1] == s)
            assert prob_final_exact(a, s) == pytest.approx(marginal, abs=1e-12)

    def test_adaptive_marginal(self):
        a = make_adaptive(m=4, k=2, n=2)
        dist = adaptive_distribution(a)
        assert list(dist.entries) == adaptive_outcomes(2, 2)
        assert dist.total() == pytest.approx(1.0, abs=1e-10)

    def test_workers_do_not_change_result(self):
        a = make_adaptive()
        assert joint_distribution(a, workers=4).entries == joint_distribution(a).entries

    def test_capacity_limit(self, monkeypatch):
        monkeypatch.setattr("optics.utils.MAX_TABLE_SIZE", 5)
        with pytest.raises(CapacityError):
            joint_distribution(make_tritter_feedforward())

    def test_counter_counts_terms(self):
        a = make_adaptive(m=4, k=2, n=3)
        counter = EvalCounter()
        prob_final_exact(a, (1, 0), counter=counter)
        assert counter.evals == len(phi_sector(2, 2))

    def test_distribution_json(self):
        dist = joint_distribution(make_hom())
        data = dist.to_json()
        assert data["context"] == {"m": 2, "n": 2, "k": 0, "marginal": "joint"}
        assert all(0.0 <= entry["prob"] <= 1.0 for entry in data["entries"])
        assert OutputDistribution.from_json(data).probability((2, 0)) == pytest.approx(0.5)


class TestFinalEstimate:
    def test_within_bound(self):
        a = make_adaptive(m=4, k=1, n=2)
        s = FockState.of(1, 0, 0)
        est = prob_final_estimate(a, s, epsilon=0.1, delta=0.01, seed=4)
        assert abs(est.value - prob_final_exact(a, s)) <= est.abs_error_bound
        assert est.abs_error_bound == pytest.approx(0.1 * len(phi_sector(1, 1)))

    def test_counter_and_determinism(self):
        a = make_adaptive(m=4, k=2, n=2)
        counter = EvalCounter()
        first = prob_final_estimate(a, (0, 1), 0.2, 0.1, seed=1, counter=counter)
        second = prob_final_estimate(a, (0, 1), 0.2, 0.1, seed=1)
        assert counter.evals == len(phi_sector(2, 1))
        assert first.value == second.value

    def test_impossible_outcome(self):
        a = make_hom()
        est = prob_final_estimate(a, (2, 1), 0.1, 0.1, seed=0)
        assert est.value == 0.0 and est.samples_used == 0


class TestOutputStates:
    def test_output_state_matches_reference(self):
        a = make_adaptive()
        for p in adaptive_outcomes(2, 3):
            state = output_state(a, p)
            reference = reference_output_state(a, p)
            for s, amp in state.amplitudes.items():
                assert amp == pytest.approx(reference.get(s, 0j), abs=1e-10)

    def test_norm_is_adaptive_probability(self):
        a = make_tritter_feedforward()
        joint = joint_distribution(a)
        for p in adaptive_outcomes(1, 2):
            expected = sum(prob for state, prob in joint.entries.items() if state.split(1)[0] == p)
            assert output_state(a, p).norm_squared() == pytest.approx(expected, abs=1e-12)

    def test_k0_inner_product(self):
        u, v = make_unitary(4, seed=1), make_unitary(4, seed=2)
        a = AdaptiveInterferometer.non_adaptive(u, 3)
        b = AdaptiveInterferometer.non_adaptive(v, 3)
        brute = inner_product_bruteforce(output_state(a, ()), output_state(b, ()))
        assert inner_product_k0(u, v, 3) == pytest.approx(brute, abs=1e-10)
        assert inner_product_lemma1(a, (), b, ()) == pytest.approx(brute, abs=1e-10)


class TestLemma1:
    @pytest.mark.parametrize("p,q", [
        ((0, 0), (0, 0)), ((1, 0), (0, 1)), ((1, 1), (2, 0)), ((0, 2), (0, 2)), ((1, 2), (3, 0)),
    ])
    def test_matches_bruteforce(self, p, q):
        a = make_adaptive(m=5, k=2, n=3, seed=3)
        b = make_adaptive(m=5, k=2, n=3, seed=4)
        brute = inner_product_bruteforce(output_state(a, p), output_state(b, q))
        assert inner_product_lemma1(a, p, b, q) == pytest.approx(brute, abs=1e-10)

    def test_cached_factors_agree(self):
        a = make_adaptive(m=5, k=2, n=3, seed=3)
        assert inner_product_lemma1(a, (1, 0), a, (0, 1), cache_factors=True) == pytest.approx(
            inner_product_lemma1(a, (1, 0), a, (0, 1)), abs=1e-12)

    def test_different_weights_are_orthogonal(self):
        a = make_adaptive()
        assert inner_product_lemma1(a, (1, 0), a, (1, 1)) == 0

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_eval_count_independent_of_k(self, k):
        a = make_adaptive(m=5, k=k, n=3, seed=6)
        p = (1,) + (0,) * (k - 1)
        counter = EvalCounter()
        inner_product_lemma1(a, p, a, p, counter=counter)
        assert counter.evals == 3 * math.comb(3, 1) ** 2 == 27

    def test_mismatched_devices(self):
        with pytest.raises(InputError):
            inner_product_lemma1(make_adaptive(m=4), (0, 0), make_adaptive(m=5), (0, 0))


class TestOverlap:
    def test_self_overlap_is_one(self):
        a = make_adaptive()
        assert overlap_normalized(a, (1, 0), a, (1, 0)) == pytest.approx(1.0, abs=1e-10)

    def test_bounded(self):
        a = make_adaptive(seed=2)
        b = make_adaptive(seed=5)
        for p in phi_sector(2, 1):
            for q in phi_sector(2, 1):
                assert 0.0 <= overlap_normalized(a, p, b, q) <= 1.0

    def test_different_weights(self):
        a = make_adaptive()
        assert overlap_normalized(a, (1, 0), a, (0, 0)) == 0.0

    def test_unreachable_outcome(self):
        # U_0 moves the only photon from mode 0 to mode 1, so mode 0 always reads 0
        eye = np.eye(3)
        a = AdaptiveInterferometer(3, 1, 1, eye[[1, 0, 2]])
        with pytest.raises(UnreachableOutcomeError):
            overlap_normalized(a, (1,), a, (1,))
