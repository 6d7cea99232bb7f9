import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqmem import passivity as ps
from eqmem.errors import DomainError, ResourceError
from eqmem.passivity import DiagonalState, EnergySpectrum, GeneralState

QUTRIT = EnergySpectrum.from_energies([0.0, 1.0, 2.0])
QUTRIT_STATE = DiagonalState(np.array([0.5, 0.3, 0.2]))
# first copy number at which (0.5, 0.3, 0.2) on (0, 1, 2) shows an inversion
QUTRIT_ACTIVATION = 9


def pairwise_passive(energies, pops, rtol=1e-9):
    """Direct pairwise form of the no-inversion condition."""
    for i, j in product(range(len(energies)), repeat=2):
        if energies[i] < energies[j] and pops[i] * (1 + rtol) < pops[j]:
            return False
    return True


def explicit_tensor(energies, pops, n):
    e, p = np.zeros(1), np.ones(1)
    for _ in range(n):
        e = np.add.outer(e, energies).ravel()
        p = np.multiply.outer(p, pops).ravel()
    return e, p


@st.composite
def spectra_and_states(draw, max_d=5):
    d = draw(st.integers(2, max_d))
    levels = sorted(draw(st.lists(st.integers(0, 4), min_size=d, max_size=d)))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=d, max_size=d)))
    return EnergySpectrum.from_energies(np.array(levels, dtype=float)), DiagonalState(w / w.sum())


class TestSpectrum:
    def test_levels_and_degeneracy(self):
        s = EnergySpectrum.from_energies([0.0, 1.0, 1.0, 3.0])
        assert list(s.level_energies) == [0.0, 1.0, 3.0]
        assert list(s.degeneracies) == [1, 2, 1]
        assert s.slot(2) == (1, 1)

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            EnergySpectrum.from_energies([1.0, 0.0])

    def test_state_validation(self):
        with pytest.raises(DomainError):
            DiagonalState(np.array([0.6, 0.6]))
        with pytest.raises(DomainError):
            DiagonalState(np.array([1.1, -0.1]))
        with pytest.raises(DomainError):
            GeneralState(np.array([[0.5, 0.6], [0.6, 0.5]]))


class TestPassivity:
    def test_qubit_gibbs(self):
        s = EnergySpectrum.from_energies([0.0, 1.0])
        g = ps.gibbs_state(s, math.log(3))
        assert g.populations == pytest.approx([0.75, 0.25], abs=1e-14)
        assert ps.is_passive(s, g).passive
        assert ps.effective_beta(s, g) == pytest.approx(math.log(3))

    def test_qutrit_inverted(self):
        st_ = DiagonalState(np.array([0.3, 0.5, 0.2]))
        v = ps.is_passive(QUTRIT, st_)
        assert not v.passive
        assert v.witness.lower == (0, 0) and v.witness.upper == (1, 0)
        assert v.witness.condition_product() > 0
        assert ps.ergotropy(QUTRIT, st_) == pytest.approx(0.2)

    def test_qutrit_ergotropy_example(self):
        st_ = DiagonalState(np.array([0.2, 0.3, 0.5]))
        assert ps.ergotropy(QUTRIT, st_) == pytest.approx(0.6)
        assert ps.ergotropy(QUTRIT, DiagonalState(np.array([0.0, 0.0, 1.0]))) == \
            pytest.approx(2.0)

    def test_degenerate_level_any_order(self):
        s = EnergySpectrum.from_energies([0.0, 1.0, 1.0])
        assert ps.is_passive(s, DiagonalState(np.array([0.5, 0.1, 0.4]))).passive
        assert not ps.is_passive(s, DiagonalState(np.array([0.3, 0.1, 0.6]))).passive

    @given(spectra_and_states())
    def test_matches_pairwise_definition(self, case):
        s, state = case
        assert ps.is_passive(s, state).passive == pairwise_passive(s.energies, state.populations)

    @given(spectra_and_states())
    def test_ergotropy_zero_iff_passive(self, case):
        s, state = case
        w = ps.ergotropy(s, state)
        assert w >= 0
        passive = ps.is_passive(s, state).passive
        if passive:
            assert w == pytest.approx(0, abs=1e-12)
        else:
            assert w > 0

    @given(spectra_and_states(max_d=6))
    @settings(max_examples=40)
    def test_ergotropy_bruteforce(self, case):
        s, state = case
        assert ps.ergotropy(s, state) == pytest.approx(ps.ergotropy_bruteforce(s, state),
                                                       abs=1e-12)

    @given(spectra_and_states())
    def test_rearrangement_is_passive(self, case):
        s, state = case
        r = ps.passive_rearrangement(s, state)
        assert ps.is_passive(s, r).passive
        drop = np.dot(s.energies, state.populations) - np.dot(s.energies, r.populations)
        assert drop == pytest.approx(ps.ergotropy(s, state), abs=1e-12)


class TestGeneralState:
    def test_coherence_between_levels(self):
        s = EnergySpectrum.from_energies([0.0, 1.0])
        rho = np.array([[0.7, 0.1], [0.1, 0.3]])
        v = ps.is_passive(s, GeneralState(rho))
        assert not v.passive and isinstance(v.witness, ps.CommutatorWitness)
        # unitary orbit: ergotropy from the eigenvalues
        r = np.linalg.eigvalsh(rho)
        assert ps.ergotropy(s, GeneralState(rho)) == pytest.approx(0.3 - r.min())
        assert ps.ergotropy(s, GeneralState(rho)) == pytest.approx(
            ps.ergotropy_bruteforce(s, GeneralState(rho)))

    def test_coherence_inside_level_allowed(self):
        s = EnergySpectrum.from_energies([0.0, 1.0, 1.0])
        rho = np.array([[0.6, 0, 0], [0, 0.2, 0.1], [0, 0.1, 0.2]])
        assert ps.is_passive(s, GeneralState(rho)).passive
        rho = np.array([[0.4, 0, 0], [0, 0.3, 0.25], [0, 0.25, 0.3]])
        assert not ps.is_passive(s, GeneralState(rho)).passive

    def test_diagonal_general_agree(self):
        p = np.array([0.5, 0.3, 0.2])
        assert ps.is_passive(QUTRIT, GeneralState(np.diag(p))).passive
        assert ps.ergotropy(QUTRIT, GeneralState(np.diag(p[::-1]))) == \
            pytest.approx(ps.ergotropy(QUTRIT, DiagonalState(p[::-1])))


class TestTensorPower:
    def test_matches_explicit_product(self):
        e, p = explicit_tensor(QUTRIT.energies, QUTRIT_STATE.populations, 3)
        s3, st3 = ps.tensor_power(QUTRIT, QUTRIT_STATE, 3)
        assert np.array_equal(s3.energies, e[s3.slot_labels])
        assert np.allclose(st3.populations, p[s3.slot_labels], rtol=0, atol=0)
        assert list(s3.degeneracies) == [1, 3, 6, 7, 6, 3, 1]

    def test_slot_labels_decode(self):
        s2, st2 = ps.tensor_power(QUTRIT, QUTRIT_STATE, 2)
        for slot, label in enumerate(s2.slot_labels):
            i, j = np.unravel_index(label, (3, 3))
            assert s2.energies[slot] == i + j
            assert st2.populations[slot] == pytest.approx(
                QUTRIT_STATE.populations[i] * QUTRIT_STATE.populations[j])

    def test_budget(self):
        with pytest.raises(ResourceError):
            ps.tensor_power(QUTRIT, QUTRIT_STATE, 13, budget=10**6)

    @given(beta=st.floats(0.1, 5.0), n=st.integers(1, 5))
    @settings(max_examples=30)
    def test_gibbs_completely_passive(self, beta, n):
        s = EnergySpectrum.from_energies([0.0, 0.7, 1.5])
        assert ps.is_n_passive(s, ps.gibbs_state(s, beta), n).passive

    @given(p0=st.floats(0.5, 1.0), n=st.integers(1, 8))
    @settings(max_examples=30)
    def test_qubit_never_activated(self, p0, n):
        s = EnergySpectrum.from_energies([0.0, 1.0])
        st_ = DiagonalState(np.array([p0, 1 - p0]))
        assert ps.is_n_passive(s, st_, n).passive

    @given(spectra_and_states(max_d=3), st.integers(2, 3))
    @settings(max_examples=30)
    def test_superadditive(self, case, n):
        s, state = case
        single = ps.ergotropy(s, state)
        assert ps.work_per_copy(s, state, n) >= single - 1e-12

    @given(spectra_and_states(max_d=3))
    @settings(max_examples=20)
    def test_n_passive_matches_pairwise(self, case):
        s, state = case
        e, p = explicit_tensor(s.energies, state.populations, 2)
        order = np.argsort(e, kind="stable")
        assert ps.is_n_passive(s, state, 2).passive == pairwise_passive(e[order], p[order])


class TestActivation:
    def test_qutrit_activation_order(self):
        act = ps.activation_order(QUTRIT, QUTRIT_STATE, 10)
        assert act.n == QUTRIT_ACTIVATION
        w = act.verdict.witness
        assert w.energy_lower < w.energy_upper
        assert w.population_lower < w.population_upper
        assert (w.energy_lower, w.energy_upper) == (9.0, 10.0)

    def test_passive_below_activation(self):
        act = ps.activation_order(QUTRIT, QUTRIT_STATE, QUTRIT_ACTIVATION - 1)
        assert act.n is None and act.verdict.passive

    def test_work_per_copy(self):
        for n in range(1, QUTRIT_ACTIVATION):
            assert ps.work_per_copy(QUTRIT, QUTRIT_STATE, n) == 0.0
        assert ps.work_per_copy(QUTRIT, QUTRIT_STATE, QUTRIT_ACTIVATION) > 0

    def test_witness_decodes_to_copies(self):
        act = ps.activation_order(QUTRIT, QUTRIT_STATE, QUTRIT_ACTIVATION)
        s9, _ = ps.tensor_power(QUTRIT, QUTRIT_STATE, QUTRIT_ACTIVATION)
        w = act.verdict.witness
        lo = np.unravel_index(s9.slot_labels[w.lower_slot], (3,) * 9)
        hi = np.unravel_index(s9.slot_labels[w.upper_slot], (3,) * 9)
        assert sum(lo) == 9 and sum(hi) == 10
        p = QUTRIT_STATE.populations
        assert w.population_lower == pytest.approx(np.prod(p[list(lo)]))
        assert w.population_upper == pytest.approx(np.prod(p[list(hi)]))

    def test_n_max_validation(self):
        with pytest.raises(DomainError):
            ps.activation_order(QUTRIT, QUTRIT_STATE, 0)
