import numpy as np
import pytest

from dimwitness import (CapacityError, CorrelatedState, InvalidStateError,
                        IngestionError, amplitudes_from_rates, correlated_pure,
                        generic_mode_set, load_state, max_witness_elements,
                        max_witness_state, maximally_entangled, perturb_state,
                        save_state, schmidt_rank, spdc_profile,
                        state_from_elements)
from dimwitness.modes import ModeIndex, ModeSet

EXAMPLE_AMPS = np.array([0.5, 0.07, 0.01, 0.01])
EXAMPLE_MODES = ModeSet((ModeIndex(0, 0), ModeIndex(1, -1),
                         ModeIndex(2, -2), ModeIndex(3, -3)))


def example_state():
    return correlated_pure(EXAMPLE_AMPS, EXAMPLE_MODES)


def test_product_state_coefficients():
    st = correlated_pure([1, 0, 0], generic_mode_set(3))
    want = np.zeros((3, 3))
    want[0, 0] = 1.0
    assert np.allclose(st.coeffs, want)


def test_bell_state_coefficients():
    st = correlated_pure(np.array([1, 1]) / np.sqrt(2), generic_mode_set(2))
    assert np.allclose(st.coeffs, np.full((2, 2), 0.5))


def test_four_mode_example_normalization():
    st = example_state()
    norm2 = np.sum(EXAMPLE_AMPS**2)
    assert np.isclose(st.coeffs[0, 0].real, 0.25 / norm2)
    assert np.isclose(np.trace(st.coeffs).real, 1.0)
    st.validate()


def test_zero_vector_rejected():
    with pytest.raises(InvalidStateError):
        correlated_pure([0, 0, 0], generic_mode_set(3))


def test_scale_invariance():
    v = np.array([0.3, -0.2, 0.9, 0.1])
    a = correlated_pure(v, generic_mode_set(4))
    b = correlated_pure(2 * v, generic_mode_set(4))
    assert np.allclose(a.coeffs, b.coeffs)


def test_constructors_validate():
    rng = np.random.default_rng(5)
    for _ in range(20):
        v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        correlated_pure(v, generic_mode_set(5)).validate()
    maximally_entangled(6).validate()
    max_witness_state(6, 3).validate()


def test_max_witness_state_full_rank_is_maximally_entangled():
    assert np.allclose(max_witness_state(4, 4).coeffs,
                       maximally_entangled(4).coeffs)


def test_max_witness_state_d3_d2_structure():
    # mixture of the 3 two-mode Bell states, each weight 1/3
    st = max_witness_state(3, 2)
    assert np.allclose(np.diag(st.coeffs).real, 1 / 3)
    off = st.coeffs[0, 1]
    assert np.isclose(off.real, 1 / 6)


def test_max_witness_elements_have_schmidt_rank_d():
    for D, d in ((4, 2), (5, 3), (3, 3)):
        elements = max_witness_elements(D, d)
        assert len(elements) > 0
        for e in elements:
            M = np.zeros((D, D))
            for k, amp in zip(e.support, e.amplitudes):
                M[k, k] = amp
            assert schmidt_rank(M) == d
        assert np.isclose(sum(e.weight for e in elements), 1.0)


def test_state_from_elements_matches_closed_form():
    st = state_from_elements(max_witness_elements(5, 2), generic_mode_set(5))
    assert np.allclose(st.coeffs, max_witness_state(5, 2).coeffs, atol=1e-12)


def test_spdc_profile_limits():
    ms = EXAMPLE_MODES
    flat = spdc_profile(ms, 1e12, 1e12)
    assert np.allclose(flat, np.full(4, 0.5), atol=1e-9)
    peaked = spdc_profile(ms, 1e-2, 1e-2)
    assert peaked[0] > 0.999  # all weight on (0, 0)


def test_amplitudes_from_rates():
    rates = {(0, 0): 100.0, (1, -1): 25.0, (2, -2): 4.0, (3, -3): 1.0}
    a = amplitudes_from_rates(EXAMPLE_MODES, rates)
    assert np.allclose(a / a[-1], [10.0, 5.0, 2.0, 1.0])
    with pytest.raises(IngestionError):
        amplitudes_from_rates(EXAMPLE_MODES, {(0, 0): 1.0})


def test_perturb_zero_strength_is_exact_embedding():
    st = example_state()
    gen = perturb_state(st, 0.0, np.random.default_rng(0))
    diag = np.arange(4) * 4 + np.arange(4)
    assert np.allclose(gen.rho[np.ix_(diag, diag)], st.coeffs)
    off = gen.rho.copy()
    off[np.ix_(diag, diag)] = 0.0
    assert np.allclose(off, 0.0)


@pytest.mark.parametrize("strength", [0.01, 0.1, 0.5])
def test_perturbed_state_is_valid(strength):
    bell = correlated_pure([1, 1], generic_mode_set(2))
    gen = perturb_state(bell, strength, np.random.default_rng(3))
    gen.validate()
    assert np.isclose(np.trace(gen.rho).real, 1.0)


def test_perturb_capacity_cap():
    big = maximally_entangled(9)
    with pytest.raises(CapacityError):
        perturb_state(big, 0.1, np.random.default_rng(0))


def test_state_file_roundtrip(tmp_path):
    st = example_state()
    path = tmp_path / "state.json"
    save_state(st, path)
    loaded = load_state(path)
    assert isinstance(loaded, CorrelatedState)
    assert np.allclose(loaded.coeffs, st.coeffs)
    assert loaded.mode_set == st.mode_set

    gen = perturb_state(st, 0.05, np.random.default_rng(1))
    gpath = tmp_path / "general.json"
    save_state(gen, gpath)
    loaded = load_state(gpath)
    assert np.allclose(loaded.rho, gen.rho)
