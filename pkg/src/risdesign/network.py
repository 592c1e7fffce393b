"""Dual-port network arithmetic for a diode-loaded unit cell.

Port 1 faces the incident plane wave, port 2 is the internal gap where the
varactor sits. Units follow the design tables: GHz, ohm, nH, pF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FREE_SPACE_IMPEDANCE = 376.73
SINGULAR_TOL = 1e-12


class NetworkDomainError(ValueError):
    """Physical argument outside the model's domain."""


class NumericalSingularityError(ArithmeticError):
    """Termination or denominator too close to zero."""


def angular_frequency(freq_ghz):
    return 2.0 * np.pi * np.asarray(freq_ghz, dtype=float) * 1e9


@dataclass(frozen=True)
class ImpedanceMatrix:
    z11: complex
    z12: complex
    z21: complex
    z22: complex
    freq: float

    def __post_init__(self):
        if not self.freq > 0:
            raise NetworkDomainError(f"frequency must be positive, got {self.freq}")

    @classmethod
    def reciprocal(cls, z11, z12, z22, freq) -> "ImpedanceMatrix":
        return cls(complex(z11), complex(z12), complex(z12), complex(z22), float(freq))

    @classmethod
    def from_array(cls, z, freq, require_reciprocal=False) -> "ImpedanceMatrix":
        z = np.asarray(z, dtype=complex).reshape(2, 2)
        if require_reciprocal and z[0, 1] != z[1, 0]:
            raise NetworkDomainError(f"non-reciprocal source: z12={z[0, 1]} z21={z[1, 0]}")
        return cls(complex(z[0, 0]), complex(z[0, 1]), complex(z[1, 0]), complex(z[1, 1]), float(freq))

    def as_array(self) -> np.ndarray:
        return np.array([[self.z11, self.z12], [self.z21, self.z22]], dtype=complex)

    def components(self) -> list[float]:
        """Eight reals: Re/Im of Z11, Z12, Z21, Z22."""
        out = []
        for z in (self.z11, self.z12, self.z21, self.z22):
            out += [z.real, z.imag]
        return out


@dataclass(frozen=True)
class DiodeModel:
    """Series R-L-C varactor model; the capacitance is the tuning variable."""

    r_series: float = 0.3
    l_series: float = 0.7
    c_min: float = 0.6
    c_max: float = 2.6

    def __post_init__(self):
        if self.r_series < 0 or self.l_series < 0:
            raise NetworkDomainError("diode R and L must be non-negative")
        if not 0 < self.c_min < self.c_max:
            raise NetworkDomainError(
                f"need 0 < c_min < c_max, got c_min={self.c_min}, c_max={self.c_max}")


@dataclass(frozen=True)
class Environment:
    z0: float = FREE_SPACE_IMPEDANCE

    def __post_init__(self):
        if not self.z0 > 0:
            raise NetworkDomainError(f"z0 must be positive, got {self.z0}")


def _check_caps(model: DiodeModel, c):
    c = np.asarray(c, dtype=float)
    if np.any(c < model.c_min):
        raise NetworkDomainError(
            f"capacitance {c.min()} pF below lower bound c_min={model.c_min} pF")
    if np.any(c > model.c_max):
        raise NetworkDomainError(
            f"capacitance {c.max()} pF above upper bound c_max={model.c_max} pF")
    return c


def diode_impedance(model: DiodeModel, c, freq):
    """Za = R + j(wL - 1/(wC)) with L in nH, C in pF, freq in GHz.

    Accepts scalars or arrays for ``c``; scalars give a Python complex.
    """
    if np.any(np.asarray(freq) <= 0):
        raise NetworkDomainError(f"frequency must be positive, got {freq}")
    c = _check_caps(model, c)
    w = angular_frequency(freq)
    za = model.r_series + 1j * (w * model.l_series * 1e-9 - 1.0 / (w * c * 1e-12))
    return complex(za) if np.ndim(za) == 0 else za


def input_impedance(z11, z12, z21, z22, za):
    """Port-1 impedance with port 2 terminated by ``za`` (array friendly)."""
    term = np.asarray(za + z22)
    if np.any(np.abs(term) < SINGULAR_TOL):
        raise NumericalSingularityError("|za + z22| below 1e-12 ohm: singular termination")
    return z11 - z12 * z21 / term


def reflection(zin, z0=FREE_SPACE_IMPEDANCE):
    den = np.asarray(zin + z0)
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise NumericalSingularityError("|zin + z0| below 1e-12 ohm: singular reflection")
    return (zin - z0) / den


def s11_from_network(z: ImpedanceMatrix, za, env: Environment = Environment()):
    """Reflection coefficient at port 1 of ``z`` loaded by ``za`` at port 2."""
    zin = input_impedance(z.z11, z.z12, z.z21, z.z22, za)
    s = reflection(zin, env.z0)
    return complex(s) if np.ndim(s) == 0 else s


def s11_to_db_phase(s11) -> tuple[float, float]:
    """Return (20*log10|s11|, phase in degrees on (-180, 180]).

    Zero magnitude maps to (-inf, 0.0) instead of raising.
    """
    s11 = complex(s11)
    mag = abs(s11)
    if mag == 0.0:
        return -math.inf, 0.0
    phase = math.degrees(math.atan2(s11.imag, s11.real))
    if phase == -180.0:
        phase = 180.0
    return 20.0 * math.log10(mag), phase
