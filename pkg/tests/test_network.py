import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risdesign.network import (DiodeModel, Environment, ImpedanceMatrix, NetworkDomainError,
                               NumericalSingularityError, diode_impedance, s11_from_network,
                               s11_to_db_phase)

from oracles import random_passive_z, s11_via_nodal_solve, s11_via_scattering

SMV = DiodeModel(r_series=0.3, l_series=0.7, c_min=0.6, c_max=2.6)


def series_rlc(r, l_nh, c_pf, f_ghz):
    w = 2 * math.pi * f_ghz * 1e9
    return complex(r, w * l_nh * 1e-9 - 1 / (w * c_pf * 1e-12))


def test_diode_impedance_matches_hand_value():
    za = diode_impedance(SMV, 2.6, 2.68)
    assert za == pytest.approx(series_rlc(0.3, 0.7, 2.6, 2.68), rel=1e-14)
    assert za.real == 0.3
    assert za.imag == pytest.approx(-11.05, abs=5e-3)


def test_diode_impedance_at_resonance_is_real():
    f_res = 1 / (2 * math.pi * math.sqrt(0.7e-9 * 2.6e-12)) / 1e9
    assert f_res == pytest.approx(3.731, abs=1e-3)
    za = diode_impedance(SMV, 2.6, f_res)
    assert za.real == 0.3
    assert abs(za.imag) < 1e-9


def test_diode_capacitor_short_limit():
    wide = DiodeModel(0.3, 0.7, 0.6, 1e12)
    za = diode_impedance(wide, 1e12, 3.0)
    w = 2 * math.pi * 3e9
    assert za == pytest.approx(complex(0.3, w * 0.7e-9), rel=1e-9)


@pytest.mark.parametrize("c, bound", [(0.5, "c_min"), (2.7, "c_max")])
def test_diode_capacitance_bounds(c, bound):
    with pytest.raises(NetworkDomainError, match=bound):
        diode_impedance(SMV, c, 3.0)


def test_diode_rejects_nonpositive_frequency():
    with pytest.raises(NetworkDomainError):
        diode_impedance(SMV, 1.0, 0.0)


def test_diode_model_invariants():
    with pytest.raises(NetworkDomainError):
        DiodeModel(-1.0, 0.7, 0.6, 2.6)
    with pytest.raises(NetworkDomainError):
        DiodeModel(0.3, 0.7, 2.6, 0.6)
    with pytest.raises(NetworkDomainError):
        Environment(0.0)
    with pytest.raises(NetworkDomainError):
        ImpedanceMatrix(1, 0, 0, 1, freq=0.0)


def test_matched_decoupled_port_reflects_nothing():
    z = ImpedanceMatrix.reciprocal(376.73, 0, 50, 3.0)
    assert s11_from_network(z, 10 + 5j, Environment(376.73)) == 0


@pytest.mark.parametrize("z11", [50 + 0j, 1000 - 300j, 2 + 700j])
def test_decoupled_port_reduces_to_load_reflection(z11):
    z = ImpedanceMatrix.reciprocal(z11, 0, 20 + 1j, 3.0)
    env = Environment()
    assert s11_from_network(z, 3 - 4j, env) == pytest.approx((z11 - env.z0) / (z11 + env.z0), rel=1e-15)


def test_matches_independent_oracles():
    rng = np.random.default_rng(7)
    env = Environment()
    for _ in range(200):
        z = random_passive_z(rng)
        za = complex(rng.uniform(0, 5), rng.uniform(-300, 300))
        got = s11_from_network(ImpedanceMatrix.from_array(z, 3.0), za, env)
        for ref in (s11_via_scattering(z, za, env.z0), s11_via_nodal_solve(z, za, env.z0)):
            assert abs(got - ref) / abs(ref) < 1e-12


def test_reciprocity_swap_is_exact():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z = random_passive_z(rng)
        za = complex(0.3, rng.uniform(-80, 80))
        a = ImpedanceMatrix(z[0, 0], z[0, 1], z[1, 0], z[1, 1], 3.0)
        b = ImpedanceMatrix(z[0, 0], z[1, 0], z[0, 1], z[1, 1], 3.0)
        assert s11_from_network(a, za) == s11_from_network(b, za)


def test_open_port_limit():
    rng = np.random.default_rng(11)
    env = Environment()
    for _ in range(50):
        z = ImpedanceMatrix.from_array(random_passive_z(rng), 3.0)
        za = 1e12 * np.exp(1j * rng.uniform(-np.pi / 2, np.pi / 2))
        expected = (z.z11 - env.z0) / (z.z11 + env.z0)
        assert abs(s11_from_network(z, za, env) - expected) < 1e-6


@settings(max_examples=200, deadline=None)
@given(x11=st.floats(-500, 500), x12=st.floats(-500, 500), x22=st.floats(-500, 500),
       xa=st.floats(-500, 500))
def test_lossless_network_is_unit_modulus(x11, x12, x22, xa):
    if abs(xa + x22) < 1e-9:
        return
    z = ImpedanceMatrix.reciprocal(1j * x11, 1j * x12, 1j * x22, 3.0)
    s = s11_from_network(z, 1j * xa)
    assert abs(abs(s) - 1) < 1e-9


def test_singular_termination_raises():
    z = ImpedanceMatrix.reciprocal(100, 50j, 20j, 3.0)
    with pytest.raises(NumericalSingularityError):
        s11_from_network(z, -20j)


def test_singular_denominator_raises():
    z = ImpedanceMatrix.reciprocal(-376.73, 0, 20j, 3.0)
    with pytest.raises(NumericalSingularityError):
        s11_from_network(z, 1.0)


def test_reciprocal_constructor_rejects_asymmetric_source():
    with pytest.raises(NetworkDomainError):
        ImpedanceMatrix.from_array([[1, 2], [3, 4]], 3.0, require_reciprocal=True)
    raw = ImpedanceMatrix.from_array([[1, 2], [3, 4]], 3.0)
    assert raw.z12 != raw.z21


@pytest.mark.parametrize("s, amp, phase", [
    (1 + 0j, 0.0, 0.0),
    (0 - 0.5j, 20 * math.log10(0.5), -90.0),
    (-1 + 0j, 0.0, 180.0),
    (complex(-1, -0.0), 0.0, 180.0),
])
def test_db_phase_conversion(s, amp, phase):
    a, p = s11_to_db_phase(s)
    assert a == pytest.approx(amp, abs=1e-12)
    assert p == pytest.approx(phase, abs=1e-12)


def test_db_phase_half_amplitude_value():
    assert s11_to_db_phase(-0.5j)[0] == pytest.approx(-6.0206, abs=1e-4)


def test_db_phase_zero_magnitude_sentinel():
    assert s11_to_db_phase(0j) == (-math.inf, 0.0)
