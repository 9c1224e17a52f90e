import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleqm.interactions import ShiftPrepare, Swap
from circleqm.lattice import (
    PREPARER,
    SYSTEM,
    CompositeState,
    ModeWavefunction,
    basis_state,
    superposition,
    tensor,
    uniform_width,
    window,
)
from circleqm.representations import (
    AngleWavefunction,
    frame_factorization_residual,
    joint_angle_amplitudes,
    rotate,
    to_angle,
    to_momentum,
)

from conftest import random_fitting_pair, random_profile


def direct_angle(psi):
    """Plain O(D^2) sum with the exp(+i theta_j l) / sqrt(D) kernel."""
    d = psi.dim
    theta = 2 * np.pi * np.arange(d) / d
    return np.array([sum(psi[l] * np.exp(1j * t * l) for l in window(d)) for t in theta]) / np.sqrt(d)


def direct_joint(state):
    da, db = state.dims
    ta = 2 * np.pi * np.arange(da) / da
    tb = 2 * np.pi * np.arange(db) / db
    out = np.zeros((da, db), dtype=complex)
    for (la, lb), a in state.items():
        out += a * np.outer(np.exp(1j * ta * la), np.exp(1j * tb * lb))
    return out / np.sqrt(da * db)


def prepared(phi, psi):
    start = tensor([(PREPARER, phi), (SYSTEM, basis_state(phi.dim, 0))])
    return ShiftPrepare(PREPARER, SYSTEM, psi).apply(start)


class TestTransforms:
    @pytest.mark.parametrize("d", [1, 2, 7, 8])
    def test_zero_momentum_is_flat(self, d):
        amps = to_angle(basis_state(d, 0)).amps
        assert np.allclose(amps, 1 / np.sqrt(d), atol=1e-12)

    def test_two_level_is_cosine(self):
        d = 8
        psi = superposition(d, {-1: 1, 1: 1})
        theta = 2 * np.pi * np.arange(d) / d
        expected = np.sqrt(2 / d) * np.cos(theta)
        assert np.allclose(to_angle(psi).amps, expected, atol=1e-12)
        assert np.allclose(direct_angle(psi), expected, atol=1e-12)

    def test_momentum_shift_is_angle_phase(self, rng):
        d = 9
        psi = random_profile(rng, d, -3, 2)
        theta = 2 * np.pi * np.arange(d) / d
        lhs = to_angle(psi.shifted(1)).amps
        assert np.allclose(lhs, np.exp(1j * theta) * to_angle(psi).amps, atol=1e-12)

    @pytest.mark.parametrize("d", [3, 8, 16, 31])
    def test_matches_direct_sum(self, rng, d):
        psi = random_profile(rng, d, window(d)[0], window(d)[-1])
        assert np.allclose(to_angle(psi).amps, direct_angle(psi), atol=1e-12)

    def test_flat_angle_to_basis(self):
        d = 10
        phi = AngleWavefunction(d, np.full(d, 1 / np.sqrt(d)))
        assert to_momentum(phi).allclose(basis_state(d, 0))

    def test_round_trip_d16(self, rng):
        psi = random_profile(rng, 16, -8, 7)
        assert to_momentum(to_angle(psi)).allclose(psi, atol=1e-12)

    @pytest.mark.parametrize("m0", [-4, -1, 0, 3])
    def test_phase_ramp_to_basis(self, m0):
        d = 8
        theta = 2 * np.pi * np.arange(d) / d
        phi = AngleWavefunction(d, np.exp(1j * theta * m0) / np.sqrt(d))
        assert to_momentum(phi).allclose(basis_state(d, m0), atol=1e-12)

    def test_rotation_translates_angle_distribution(self, rng):
        d = 12
        psi = random_profile(rng, d, -3, 3)
        r = 5
        moved = to_angle(rotate(psi, 2 * np.pi * r / d)).amps
        assert np.allclose(moved, np.roll(to_angle(psi).amps, r), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_isometry(d, seed):
    rng = np.random.default_rng(seed)
    a = random_profile(rng, d, window(d)[0], window(d)[-1])
    b = random_profile(rng, d, window(d)[0], window(d)[-1])
    lhs = a.inner(b)
    rhs = np.vdot(to_angle(a).amps, to_angle(b).amps)
    assert abs(lhs - rhs) <= 1e-10
    assert abs(to_angle(a).norm() - 1) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 24), st.integers(-50, 50), st.integers(0, 2**32 - 1))
def test_shift_phase_duality(d, m, seed):
    rng = np.random.default_rng(seed)
    psi = random_profile(rng, d, window(d)[0], window(d)[-1])
    theta = 2 * np.pi * np.arange(d) / d
    lhs = to_angle(psi.shifted(m)).amps
    assert np.max(np.abs(lhs - np.exp(1j * theta * m) * to_angle(psi).amps)) <= 1e-10


class TestJointTable:
    def test_two_rest_states_constant(self):
        d = 6
        st_ = tensor([(PREPARER, basis_state(d, 0)), (SYSTEM, basis_state(d, 0))])
        assert np.allclose(joint_angle_amplitudes(st_, PREPARER, SYSTEM), 1 / d, atol=1e-12)

    def test_matches_direct_sum(self, rng):
        phi, psi = random_fitting_pair(rng, 11)
        st_ = prepared(phi, psi)
        assert np.allclose(joint_angle_amplitudes(st_, PREPARER, SYSTEM), direct_joint(st_), atol=1e-12)
        assert np.allclose(joint_angle_amplitudes(st_, SYSTEM, PREPARER), direct_joint(st_).T, atol=1e-12)

    def test_prepared_state_is_relative_angle_product(self, rng):
        d = 10
        phi, psi = random_fitting_pair(rng, d)
        table = joint_angle_amplitudes(prepared(phi, psi), PREPARER, SYSTEM)
        fp, ft = direct_angle(phi), direct_angle(psi)
        expected = np.array([[fp[jp] * ft[(js - jp) % d] for js in range(d)] for jp in range(d)])
        assert np.max(np.abs(table - expected)) <= 1e-9

    def test_swap_output_has_no_relative_angle_dependence(self, rng):
        d = 8
        phi = random_profile(rng, d, -2, 1)
        st_ = Swap(PREPARER, SYSTEM).apply(tensor([(PREPARER, phi), (SYSTEM, basis_state(d, 0))]))
        table = joint_angle_amplitudes(st_, PREPARER, SYSTEM)
        # product of its own marginals: rank one
        assert np.linalg.matrix_rank(table, tol=1e-10) == 1
        f = direct_angle(basis_state(d, 0))
        g = direct_angle(phi)
        assert np.allclose(table, np.outer(f, g), atol=1e-12)

    def test_extra_labels_rejected(self):
        from circleqm.lattice import METER

        st_ = tensor([(PREPARER, basis_state(4, 0)), (SYSTEM, basis_state(4, 0)), (METER, basis_state(4, 0))])
        with pytest.raises(ValueError):
            joint_angle_amplitudes(st_, PREPARER, SYSTEM)


class TestFrameResidual:
    def test_prepared_state_factorizes(self, rng):
        phi, psi = random_fitting_pair(rng, 14)
        st_ = prepared(phi, psi)
        assert frame_factorization_residual(st_, PREPARER, SYSTEM, psi) <= 1e-9
        assert frame_factorization_residual(st_, PREPARER, SYSTEM, psi, frame_profile=phi) <= 1e-9

    def test_system_rotation_breaks_it(self):
        d = 6
        psi = superposition(d, {-1: 1, 1: 1})
        st_ = prepared(basis_state(d, 0), psi)
        rotated = rotate(st_, 2 * np.pi / 6 + 0.3, SYSTEM)
        assert frame_factorization_residual(rotated, PREPARER, SYSTEM, psi) > 0.1

    def test_minimal_d2(self):
        psi = superposition(2, {-1: 1, 0: 1})
        st_ = prepared(basis_state(2, -1), psi)
        # tuples (P, S): (-1, 0) and (0, -1), both 1/sqrt(2); table by hand:
        # T[jp, js] = (exp(-i pi jp) + exp(-i pi js)) / (2 sqrt 2)
        hand = np.array([[1, 0], [0, -1]]) / np.sqrt(2)
        assert np.allclose(joint_angle_amplitudes(st_, PREPARER, SYSTEM), hand, atol=1e-12)
        assert frame_factorization_residual(st_, PREPARER, SYSTEM, psi) <= 1e-9

    def test_wrong_target_detected(self):
        d = 8
        st_ = prepared(uniform_width(d, 3), superposition(d, {0: 1, 1: 1}))
        assert frame_factorization_residual(st_, PREPARER, SYSTEM, superposition(d, {0: 1, 1: -1})) > 0.1

    def test_global_phase_is_ignored(self, rng):
        phi, psi = random_fitting_pair(rng, 9)
        st_ = prepared(phi, psi)
        phased = CompositeState.build(st_.labels, st_.dims, {k: a * np.exp(0.77j) for k, a in st_.items()})
        assert frame_factorization_residual(phased, PREPARER, SYSTEM, psi, frame_profile=phi) <= 1e-9

    def test_dimension_mismatch(self):
        st_ = prepared(basis_state(6, 0), superposition(6, {0: 1, 1: 1}))
        with pytest.raises(ValueError):
            frame_factorization_residual(st_, PREPARER, SYSTEM, ModeWavefunction(5, [1, 0, 0, 0, 0]))
