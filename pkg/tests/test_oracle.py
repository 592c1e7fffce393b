import hashlib
import math

import numpy as np
import pytest

from risdesign.network import NetworkDomainError
from risdesign.oracle import (GEOMETRY_BOUNDS, Dataset, GeometryParams, OracleConfig,
                              generate_arrays, generate_dataset, read_jsonl,
                              series_resonance_ghz, synth_impedance, synth_z_batch, write_jsonl)

DEFAULT = OracleConfig()
MID_POINT = GeometryParams(14, 16, 11, 2.0, 0.57, 7.0)


def test_bounds_are_sorted_per_column():
    assert np.all(GEOMETRY_BOUNDS[:, 0] < GEOMETRY_BOUNDS[:, 1])
    assert GEOMETRY_BOUNDS.tolist() == [[6, 24], [6, 24], [6, 24], [1, 3], [0.1, 1], [6, 8]]


@pytest.mark.parametrize("row", [
    [14.50, 10.50, 22.64, 2.36, 0.56, 7.81],
    [14.45, 16.50, 11.23, 1.65, 0.57, 7.22],
])
def test_reference_designs_fit_the_box(row):
    GeometryParams(*row)


def test_mutual_impedance_hand_value():
    z = synth_impedance(DEFAULT, MID_POINT, 3.3)
    w = 2 * math.pi * 3.3e9
    m_nh = 5.0 + 0.5 * math.sqrt(14 * 11)
    assert z.z12 == z.z21
    assert z.z12.real == 0
    assert z.z12.imag == pytest.approx(w * m_nh * 1e-9, rel=1e-14)
    assert z.z12.imag == pytest.approx(232.3, abs=0.5)


def test_mutual_impedance_is_purely_reactive():
    rng = np.random.default_rng(0)
    lo, hi = GEOMETRY_BOUNDS.T
    g = lo + (hi - lo) * rng.random((500, 6))
    for f in (2.0, 3.14, 4.0):
        z = synth_z_batch(DEFAULT, g, f)
        assert np.all(z[:, 0, 1].real == 0)
        assert np.array_equal(z[:, 0, 1], z[:, 1, 0])


def test_port1_resonance_at_box_center():
    g = GeometryParams.center()
    la = 2.0 + 0.08 * (g.w1 + g.l3)
    ca = 0.5 + 0.004 * g.w2 * g.l1
    f0 = 1 / (2 * math.pi * math.sqrt(la * 1e-9 * ca * 1e-12)) / 1e9
    assert DEFAULT.f_lo < f0 < DEFAULT.f_hi
    assert abs(synth_impedance(DEFAULT, g, f0).z11.imag) < 1e-9


def test_port1_resonance_spans_upper_band_across_the_box():
    lo, hi = GEOMETRY_BOUNDS.T
    v = DEFAULT.resonator_values(np.vstack([lo, hi]))
    f_min_corner, f_max_corner = series_resonance_ghz(v["La"], v["Ca"])
    assert f_min_corner > 4.0
    assert 2.0 < f_max_corner < 3.0


def test_out_of_bounds_geometry_names_field():
    with pytest.raises(NetworkDomainError, match="l2"):
        GeometryParams(14, 16, 11, 2.0, 1.5, 7.0)
    with pytest.raises(NetworkDomainError, match="w1.*l3"):
        synth_z_batch(DEFAULT, [30, 16, 11, 2.0, 0.5, 9.0], 3.0)


def test_out_of_band_frequency():
    with pytest.raises(NetworkDomainError):
        synth_impedance(DEFAULT, MID_POINT, 5.0)


def test_config_rejects_nonpositive_elements():
    with pytest.raises(ValueError, match="Ca"):
        OracleConfig(ca0=-1.0)
    with pytest.raises(ValueError):
        OracleConfig.from_dict({"bogus": 1})


def test_smooth_in_geometry():
    """Centered differences at h and h/2 agree, so no kinks."""
    rng = np.random.default_rng(5)
    lo, hi = GEOMETRY_BOUNDS.T
    pad = 0.01 * (hi - lo)
    for _ in range(100):
        x = lo + pad + (hi - lo - 2 * pad) * rng.random(6)
        f = rng.uniform(2.05, 3.95)
        for j in range(6):
            h = 1e-3 * (hi[j] - lo[j])
            e = np.zeros(6)
            e[j] = 1

            def d(step):
                zp = synth_z_batch(DEFAULT, x + step * e, f)[0]
                zm = synth_z_batch(DEFAULT, x - step * e, f)[0]
                return (zp - zm) / (2 * step)
            d1, d2 = d(h), d(h / 2)
            scale = max(np.abs(d1).max(), 1e-6)
            assert np.abs(d1 - d2).max() / scale < 1e-4


def _digest(ds: Dataset) -> str:
    return hashlib.sha256(b"".join(r.to_json().encode() for r in ds.records())).hexdigest()


def test_dataset_determinism_and_bounds():
    a = generate_arrays(DEFAULT, 2000, (2.0, 4.0, 3), seed=42)
    b = generate_arrays(DEFAULT, 2000, (2.0, 4.0, 3), seed=42)
    assert _digest(a) == _digest(b)
    assert len(a) == 6000
    lo, hi = GEOMETRY_BOUNDS.T
    assert np.all((a.geoms >= lo) & (a.geoms <= hi))
    c = generate_arrays(DEFAULT, 2000, (2.0, 4.0, 3), seed=43)
    assert _digest(a) != _digest(c)


def test_dataset_order_and_reciprocity():
    recs = list(generate_dataset(DEFAULT, 3, (2.0, 4.0, 5), seed=1))
    assert len(recs) == 15
    assert [r.freq for r in recs[:5]] == pytest.approx([2.0, 2.5, 3.0, 3.5, 4.0])
    assert recs[0].geometry == recs[4].geometry != recs[5].geometry
    for r in recs:
        assert r.z[2] == r.z[4] and r.z[3] == r.z[5]


def test_uniform_sampler_mean():
    ds = generate_arrays(DEFAULT, 10000, (3.0, 3.0 + 1e-9, 1), seed=9)
    mid = GEOMETRY_BOUNDS.mean(axis=1)
    assert np.all(np.abs(ds.geoms.mean(axis=0) - mid) / mid < 0.02)


def test_parameter_validation():
    with pytest.raises(ValueError):
        generate_arrays(DEFAULT, 0, (2.0, 4.0, 3))
    with pytest.raises(ValueError):
        generate_arrays(DEFAULT, 5, (4.0, 2.0, 3))
    with pytest.raises(ValueError):
        generate_arrays(DEFAULT, 5, (2.0, 4.0, 0))


def test_jsonl_roundtrip(tmp_path):
    ds = generate_arrays(DEFAULT, 4, (2.0, 4.0, 3), seed=0)
    path = tmp_path / "d.jsonl"
    write_jsonl(ds, path)
    first = path.read_text().splitlines()[0]
    assert first.startswith('{"geom": [') and '"freq_ghz": 2.0' in first and '"z": [' in first
    back = read_jsonl(path)
    assert np.array_equal(back.geoms, ds.geoms)
    assert np.array_equal(back.freqs, ds.freqs)
    assert np.array_equal(back.z, ds.z)
    assert np.unique(back.group).size == 4
    assert back.fingerprint() == ds.fingerprint()
