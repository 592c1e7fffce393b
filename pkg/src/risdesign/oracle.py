"""Analytic impedance oracle standing in for a full-wave solver.

The passive cell is modelled as two series resonators (port 1 and port 2)
coupled through a mutual inductance::

    Z11 = r11 + j(w*La - 1/(w*Ca))     La = la0 + la1*(w1 + l3)   [nH]
                                       Ca = ca0 + ca1*w2*l1       [pF]
    Z22 = r22 + j(w*Lb - 1/(w*Cb))     Lb = lb0 + lb1*w3
                                       Cb = cb0 + cb1*l2
    Z12 = Z21 = j*w*M                  M  = m0 + m1*sqrt(w1*w3)
    r11 = r11_0 + r11_1*w1

The model is smooth in every geometry field and in frequency, reciprocal by
construction, and cheap enough to label hundreds of thousands of samples.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .network import ImpedanceMatrix, NetworkDomainError, angular_frequency

GEOMETRY_FIELDS = ("w1", "w2", "w3", "l1", "l2", "l3")
# Per-column [min, max] in mm.
GEOMETRY_BOUNDS = np.array([
    [6.0, 24.0],
    [6.0, 24.0],
    [6.0, 24.0],
    [1.0, 3.0],
    [0.1, 1.0],
    [6.0, 8.0],
])
Z_COMPONENTS = ("ReZ11", "ImZ11", "ReZ12", "ImZ12", "ReZ21", "ImZ21", "ReZ22", "ImZ22")

# Slack for float round-off at the box faces (mm).
_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class GeometryParams:
    w1: float
    w2: float
    w3: float
    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        check_geometry(self.as_array())

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3, self.l1, self.l2, self.l3], dtype=float)

    @classmethod
    def from_array(cls, x) -> "GeometryParams":
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (6,):
            raise NetworkDomainError(f"geometry needs 6 values, got {x.shape[0]}")
        return cls(*(float(v) for v in x))

    @classmethod
    def center(cls) -> "GeometryParams":
        return cls.from_array(GEOMETRY_BOUNDS.mean(axis=1))


def check_geometry(x) -> np.ndarray:
    """Raise NetworkDomainError naming every field outside its bound."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lo, hi = GEOMETRY_BOUNDS[:, 0], GEOMETRY_BOUNDS[:, 1]
    bad = np.any((x < lo - _BOUND_TOL) | (x > hi + _BOUND_TOL) | ~np.isfinite(x), axis=0)
    if np.any(bad):
        msgs = [f"{GEOMETRY_FIELDS[i]} not in [{lo[i]}, {hi[i]}]"
                for i in np.flatnonzero(bad)]
        raise NetworkDomainError("geometry out of bounds: " + "; ".join(msgs))
    return x


@dataclass(frozen=True)
class OracleConfig:
    la0: float = 2.0
    la1: float = 0.08
    ca0: float = 0.5
    ca1: float = 0.004
    lb0: float = 0.5
    lb1: float = 0.05
    cb0: float = 0.3
    cb1: float = 0.3
    m0: float = 5.0
    m1: float = 0.5
    r11_0: float = 0.5
    r11_1: float = 0.5 / 24
    r22: float = 0.3
    f_lo: float = 2.0
    f_hi: float = 4.0
    # Substrate constants; informational only, the analytic model does not use them.
    eps_r: float = 2.65
    tan_delta: float = 0.001
    thickness_mm: float = 3.3

    def __post_init__(self):
        lo, hi = GEOMETRY_BOUNDS[:, 0], GEOMETRY_BOUNDS[:, 1]
        # Every coefficient term is monotone in its fields, so corners bound it.
        checks = {
            "La": (self.la0 + self.la1 * (lo[0] + lo[5]), self.la0 + self.la1 * (hi[0] + hi[5])),
            "Ca": (self.ca0 + self.ca1 * lo[1] * lo[3], self.ca0 + self.ca1 * hi[1] * hi[3]),
            "Lb": (self.lb0 + self.lb1 * lo[2], self.lb0 + self.lb1 * hi[2]),
            "Cb": (self.cb0 + self.cb1 * lo[4], self.cb0 + self.cb1 * hi[4]),
        }
        for name, ends in checks.items():
            if min(ends) <= 0:
                raise ValueError(f"oracle coefficients give non-positive {name} inside the box")
        if min(self.r11_0 + self.r11_1 * lo[0], self.r11_0 + self.r11_1 * hi[0]) < 0 or self.r22 < 0:
            raise ValueError("oracle loss resistances must be non-negative")
        if not 0 < self.f_lo < self.f_hi:
            raise ValueError(f"need 0 < f_lo < f_hi, got {self.f_lo}, {self.f_hi}")

    @classmethod
    def from_dict(cls, d: dict) -> "OracleConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown oracle config keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    @classmethod
    def load(cls, path) -> "OracleConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def check_band(self, freq):
        f = np.asarray(freq, dtype=float)
        if np.any(f < self.f_lo - 1e-12) or np.any(f > self.f_hi + 1e-12):
            raise NetworkDomainError(
                f"frequency {freq} GHz outside oracle band [{self.f_lo}, {self.f_hi}]")

    def z_matrix(self, geoms, freq) -> np.ndarray:
        """Batch impedance: (P, 6) geometries -> (P, 2, 2) complex."""
        return synth_z_batch(self, geoms, freq)

    def resonator_values(self, geoms) -> dict:
        """La, Ca, Lb, Cb, M in nH/pF plus the loss resistances, per geometry."""
        x = np.atleast_2d(np.asarray(geoms, dtype=float))
        w1, w2, w3, l1, l2, l3 = x.T
        return {
            "La": self.la0 + self.la1 * (w1 + l3),
            "Ca": self.ca0 + self.ca1 * w2 * l1,
            "Lb": self.lb0 + self.lb1 * w3,
            "Cb": self.cb0 + self.cb1 * l2,
            "M": self.m0 + self.m1 * np.sqrt(w1 * w3),
            "r11": self.r11_0 + self.r11_1 * w1,
            "r22": np.full_like(w1, self.r22),
        }


def synth_z_batch(cfg: OracleConfig, geoms, freq) -> np.ndarray:
    x = check_geometry(geoms)
    cfg.check_band(freq)
    v = cfg.resonator_values(x)
    w = angular_frequency(freq)
    z11 = v["r11"] + 1j * (w * v["La"] * 1e-9 - 1.0 / (w * v["Ca"] * 1e-12))
    z22 = v["r22"] + 1j * (w * v["Lb"] * 1e-9 - 1.0 / (w * v["Cb"] * 1e-12))
    z12 = 1j * w * v["M"] * 1e-9
    out = np.empty((x.shape[0], 2, 2), dtype=complex)
    out[:, 0, 0] = z11
    out[:, 0, 1] = z12
    out[:, 1, 0] = z12
    out[:, 1, 1] = z22
    return out


def synth_impedance(cfg: OracleConfig, g: GeometryParams, freq: float) -> ImpedanceMatrix:
    z = synth_z_batch(cfg, g.as_array(), freq)[0]
    return ImpedanceMatrix.from_array(z, freq, require_reciprocal=True)


def series_resonance_ghz(l_nh, c_pf):
    return 1.0 / (2 * np.pi * np.sqrt(np.asarray(l_nh) * 1e-9 * np.asarray(c_pf) * 1e-12)) / 1e9


def z_to_components(z: np.ndarray) -> np.ndarray:
    """(..., 2, 2) complex -> (..., 8) reals in Z_COMPONENTS order."""
    flat = z.reshape(z.shape[:-2] + (4,))
    return np.stack([flat.real, flat.imag], axis=-1).reshape(z.shape[:-2] + (8,))


def components_to_z(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    pairs = c.reshape(c.shape[:-1] + (4, 2))
    return (pairs[..., 0] + 1j * pairs[..., 1]).reshape(c.shape[:-1] + (2, 2))


# ---------------------------------------------------------------- datasets

@dataclass(frozen=True)
class DatasetRecord:
    geometry: GeometryParams
    freq: float
    z: tuple

    def to_json(self) -> str:
        return json.dumps({
            "geom": [float(v) for v in self.geometry.as_array()],
            "freq_ghz": float(self.freq),
            "z": [float(v) for v in self.z],
        })


@dataclass
class Dataset:
    """Columnar view of a dataset: one row per (geometry, frequency) pair."""

    geoms: np.ndarray   # (M, 6) mm
    freqs: np.ndarray   # (M,) GHz
    z: np.ndarray       # (M, 8) ohm
    group: np.ndarray   # (M,) geometry index, used for splitting

    def __len__(self):
        return self.freqs.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        return np.column_stack([self.geoms, self.freqs])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a in (self.geoms, self.freqs, self.z):
            h.update(np.ascontiguousarray(a, dtype=float).tobytes())
        return h.hexdigest()

    def records(self) -> Iterator[DatasetRecord]:
        for i in range(len(self)):
            yield DatasetRecord(GeometryParams.from_array(self.geoms[i]),
                                float(self.freqs[i]), tuple(float(v) for v in self.z[i]))

    @classmethod
    def from_records(cls, records: Iterable[DatasetRecord]) -> "Dataset":
        geoms, freqs, zs, group = [], [], [], []
        index: dict[tuple, int] = {}
        for r in records:
            g = tuple(r.geometry.as_array())
            group.append(index.setdefault(g, len(index)))
            geoms.append(g)
            freqs.append(r.freq)
            zs.append(r.z)
        if not geoms:
            raise ValueError("empty dataset")
        return cls(np.array(geoms, dtype=float), np.array(freqs, dtype=float),
                   np.array(zs, dtype=float), np.array(group, dtype=int))


def frequency_grid(band) -> np.ndarray:
    f_lo, f_hi, n_freq = band
    if not f_lo < f_hi:
        raise ValueError(f"need f_lo < f_hi, got {f_lo}, {f_hi}")
    if int(n_freq) < 1:
        raise ValueError("n_freq must be at least 1")
    if int(n_freq) == 1:
        return np.array([0.5 * (f_lo + f_hi)])
    return np.linspace(f_lo, f_hi, int(n_freq))


def sample_geometries(n: int, seed: int) -> np.ndarray:
    """n uniform draws inside the geometry box, reproducible from ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = GEOMETRY_BOUNDS[:, 0], GEOMETRY_BOUNDS[:, 1]
    return lo + (hi - lo) * rng.random((n, 6))


def generate_arrays(cfg: OracleConfig, n: int, band=None, seed: int = 0) -> Dataset:
    if band is None:
        band = (cfg.f_lo, cfg.f_hi, 201)
    geoms = sample_geometries(n, seed)
    fgrid = frequency_grid(band)
    nf = fgrid.size
    z = np.empty((n, nf, 8))
    for j, f in enumerate(fgrid):
        z[:, j, :] = z_to_components(synth_z_batch(cfg, geoms, f))
    return Dataset(
        geoms=np.repeat(geoms, nf, axis=0),
        freqs=np.tile(fgrid, n),
        z=z.reshape(n * nf, 8),
        group=np.repeat(np.arange(n), nf),
    )


def generate_dataset(cfg: OracleConfig, n: int, band=None, seed: int = 0) -> Iterator[DatasetRecord]:
    """Stream records geometry-major, frequency-minor, in seeded order."""
    return generate_arrays(cfg, n, band, seed).records()


def write_jsonl(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        for i in range(len(ds)):
            fh.write(json.dumps({
                "geom": ds.geoms[i].tolist(),
                "freq_ghz": float(ds.freqs[i]),
                "z": ds.z[i].tolist(),
            }))
            fh.write("\n")


class DatasetFormatError(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


def read_jsonl(path) -> Dataset:
    geoms, freqs, zs = [], [], []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                g, f, z = rec["geom"], float(rec["freq_ghz"]), rec["z"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(line_no, f"malformed record ({exc})") from None
            if len(g) != 6 or len(z) != 8:
                raise DatasetFormatError(line_no, "expected 6 geometry and 8 impedance values")
            geoms.append(g)
            freqs.append(f)
            zs.append(z)
    if not geoms:
        raise DatasetFormatError(0, "no records")
    geoms = np.array(geoms, dtype=float)
    _, group = np.unique(geoms, axis=0, return_inverse=True)
    return Dataset(geoms, np.array(freqs, dtype=float), np.array(zs, dtype=float),
                   np.asarray(group).ravel())
