import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from qeraser.errors import ContractViolation, NonUnitaryElementError
from qeraser.optics import (JonesOperator, SlitElementPair, eraser_pair, hwp, identity, mark_paths,
                            polarizer, qwp, waveplate)
from qeraser.state import (CIRCULAR, DIAGONAL, HV, PolarizationBasis, TwoPhotonState,
                           make_entangled_source, product_state, split_through_double_slit)

from . import oracles

TOL = 1e-12
H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)


def overlap(a, b):
    return abs(np.vdot(a, b))


def test_qwp_matches_hand_written_matrix():
    for theta in np.linspace(-np.pi, np.pi, 17):
        assert np.allclose(qwp(theta).m, np.array(oracles.qwp_matrix(theta)), atol=TOL)


def test_qwp_zero_convention():
    assert np.allclose(qwp(0).m, np.diag([1, 1j]), atol=TOL)
    assert overlap(qwp(0) @ H, H) == pytest.approx(1, abs=TOL)


def test_qwp_45_makes_v_circular():
    out = qwp(math.pi / 4) @ V
    assert overlap(out, CIRCULAR.ket("first")) == pytest.approx(1, abs=TOL)
    out = qwp(-math.pi / 4) @ V
    assert overlap(out, CIRCULAR.ket("second")) == pytest.approx(1, abs=TOL)


def test_two_qwps_make_half_wave():
    twice = qwp(math.pi / 4) @ qwp(math.pi / 4)
    assert overlap(twice @ H, V) == pytest.approx(1, abs=TOL)
    for theta in (0.1, 0.7, 2.0):
        prod = (qwp(theta) @ qwp(theta)).m
        ref = hwp(theta).m
        phase = prod[0, 0] / ref[0, 0] if abs(ref[0, 0]) > 0.1 else prod[0, 1] / ref[0, 1]
        assert np.allclose(prod, phase * ref, atol=TOL)


@pytest.mark.parametrize("theta", np.random.default_rng(0).uniform(-np.pi, np.pi, 64))
def test_waveplates_unitary(theta):
    for op in (qwp(theta), hwp(theta), waveplate(0.37, theta)):
        assert np.max(np.abs(op.m @ op.m.conj().T - np.eye(2))) < TOL


def test_polarizer_transmission():
    pol = polarizer(HV, "first")
    assert pol.is_projector()
    assert pol.transmission(H) == pytest.approx(1, abs=TOL)
    assert pol.transmission(V) == pytest.approx(0, abs=TOL)
    assert pol.transmission(CIRCULAR.ket("first")) == pytest.approx(0.5, abs=TOL)
    assert pol.transmission(CIRCULAR.ket("second")) == pytest.approx(0.5, abs=TOL)


def test_malus_law():
    for t_in in np.linspace(0, np.pi, 32):
        v = np.array([math.cos(t_in), math.sin(t_in)])
        for t_pol in (0.0, 0.4, 1.3):
            pol = polarizer(PolarizationBasis.linear(t_pol), "first")
            first = pol.transmission(v)
            ket = PolarizationBasis.linear(t_pol).ket("first")
            assert first == pytest.approx(abs(np.vdot(ket, v)) ** 2, abs=TOL)
            assert first == pytest.approx(math.cos(t_in - t_pol) ** 2, abs=TOL)


def test_polarizers_are_projectors():
    for b in (HV, DIAGONAL, CIRCULAR, PolarizationBasis.linear(0.9)):
        for o in ("first", "second"):
            assert polarizer(b, o).is_projector()


def test_slit_pair_rejects_polarizer():
    with pytest.raises(NonUnitaryElementError):
        SlitElementPair(polarizer(HV), identity())


def test_jones_shape():
    with pytest.raises(ValueError):
        JonesOperator(np.eye(3))


class TestMarkPaths:
    def test_identity_pair(self):
        s = split_through_double_slit(make_entangled_source())
        out = mark_paths(s, SlitElementPair(identity(), identity()))
        assert np.allclose(out.amplitudes, s.amplitudes, atol=TOL)

    def test_requires_populated_path(self):
        with pytest.raises(ContractViolation):
            mark_paths(make_entangled_source(), eraser_pair())

    def test_vertical_goes_r_and_l(self):
        s = split_through_double_slit(product_state(V, H))
        out = mark_paths(s, eraser_pair())
        r, l = CIRCULAR.ket("first"), CIRCULAR.ket("second")
        assert overlap(out.amplitudes[0, :, 0] / np.linalg.norm(out.amplitudes[0, :, 0]), r) == pytest.approx(1, abs=TOL)
        assert overlap(out.amplitudes[1, :, 0] / np.linalg.norm(out.amplitudes[1, :, 0]), l) == pytest.approx(1, abs=TOL)

    def test_horizontal_reversed(self):
        s = split_through_double_slit(product_state(H, H))
        out = mark_paths(s, eraser_pair())
        r, l = CIRCULAR.ket("first"), CIRCULAR.ket("second")
        assert overlap(out.amplitudes[0, :, 0] / np.linalg.norm(out.amplitudes[0, :, 0]), l) == pytest.approx(1, abs=TOL)
        assert overlap(out.amplitudes[1, :, 0] / np.linalg.norm(out.amplitudes[1, :, 0]), r) == pytest.approx(1, abs=TOL)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
        s = TwoPhotonState(amps, True).normalize()
        pair = SlitElementPair(JonesOperator(unitary_group.rvs(2, random_state=rng)),
                               JonesOperator(unitary_group.rvs(2, random_state=rng)))
        assert mark_paths(s, pair).norm() == pytest.approx(1, abs=TOL)
