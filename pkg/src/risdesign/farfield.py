"""Column-coded far-field patterns for a 1-D RIS aperture.

Each column carries one coding digit d in 0..7, i.e. a reflection phase of
d * 45 degrees. The pattern is the array factor

    AF(theta) = sum_n exp(j * (k0 * n * d * sin(theta) + phi_n))

so a progressive phase phi_n = -k0 * n * d * sin(theta0) steers the beam to
theta0. Element pattern and mutual coupling are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0
PHASE_STEP_DEG = 45.0


class CodeParseError(ValueError):
    def __init__(self, position: int, char: str):
        super().__init__(f"invalid coding digit {char!r} at position {position}")
        self.position = position


class BeamDomainError(ValueError):
    pass


@dataclass(frozen=True)
class CodingSequence:
    digits: tuple

    def __post_init__(self):
        if not self.digits:
            raise CodeParseError(0, "")
        for i, d in enumerate(self.digits):
            if not (isinstance(d, (int, np.integer)) and 0 <= d <= 7):
                raise CodeParseError(i, str(d))

    @classmethod
    def parse(cls, text: str) -> "CodingSequence":
        if not text:
            raise CodeParseError(0, "")
        digits = []
        for i, ch in enumerate(text):
            if ch not in "01234567":
                raise CodeParseError(i, ch)
            digits.append(int(ch))
        return cls(tuple(digits))

    def __str__(self):
        return "".join(str(d) for d in self.digits)

    def __len__(self):
        return len(self.digits)


@dataclass(frozen=True)
class ArrayGeometry:
    n_columns: int = 16
    pitch_mm: float = 436.0 / 16
    freq_ghz: float = 3.5

    def __post_init__(self):
        if self.n_columns < 2:
            raise ValueError("need at least 2 columns")
        if not self.pitch_mm > 0 or not self.freq_ghz > 0:
            raise ValueError("pitch and frequency must be positive")

    @property
    def wavelength_mm(self) -> float:
        return SPEED_OF_LIGHT / (self.freq_ghz * 1e9) * 1e3

    @property
    def k0(self) -> float:
        """Free-space wavenumber in rad/mm."""
        return 2 * np.pi / self.wavelength_mm


def _as_code(code) -> CodingSequence:
    return code if isinstance(code, CodingSequence) else CodingSequence.parse(str(code))


def code_to_phases(code) -> np.ndarray:
    return np.array(_as_code(code).digits, dtype=float) * PHASE_STEP_DEG


def array_factor(geom: ArrayGeometry, phases_deg, theta_deg):
    """Complex AF at one or many angles; |theta| <= 90."""
    phases = np.deg2rad(np.asarray(phases_deg, dtype=float))
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(np.abs(theta) > 90):
        raise BeamDomainError("theta must lie in [-90, 90] degrees")
    n = np.arange(phases.size)
    arg = geom.k0 * geom.pitch_mm * np.multiply.outer(np.sin(np.deg2rad(theta)), n) + phases
    af = np.exp(1j * arg).sum(axis=-1)
    return complex(af) if af.ndim == 0 else af


def phase_gradient(geom: ArrayGeometry, code) -> float:
    """Least-squares slope of the unwrapped column phases, rad/mm."""
    phases = np.unwrap(np.deg2rad(code_to_phases(code)))
    x = np.arange(phases.size) * geom.pitch_mm
    if phases.size < 2:
        return 0.0
    xc = x - x.mean()
    return float(xc @ (phases - phases.mean()) / (xc @ xc))


def beam_angle_snell(geom: ArrayGeometry, code) -> float:
    """Main-beam direction (degrees) predicted from the code's phase gradient.

    Sign follows ``array_factor``: a positive phase gradient steers to
    negative theta.
    """
    g = phase_gradient(geom, code)
    if abs(g) < 1e-12:
        raise BeamDomainError("broadside or non-gradient code: zero phase gradient")
    s = -g / geom.k0
    if abs(s) > 1:
        raise BeamDomainError(f"phase gradient exceeds k0 (sin = {s:.3f}); wave is evanescent")
    return float(np.degrees(np.arcsin(s)))


def angle_grid(step: float) -> np.ndarray:
    """Angles from -90 to 90 degrees inclusive; 0 is hit exactly when 90/step is whole."""
    if not step > 0:
        raise ValueError("angle step must be positive")
    n = int(round(180.0 / step))
    return np.round(np.linspace(-90.0, 90.0, n + 1), 10)


def pattern_sweep(geom: ArrayGeometry, code, theta_grid) -> list[tuple[float, float]]:
    """(theta, normalized |AF| in dB) rows; the peak is exactly 0 dB."""
    theta = np.asarray(theta_grid, dtype=float)
    if theta.size == 0:
        raise ValueError("empty theta grid")
    mag = np.abs(array_factor(geom, code_to_phases(code), theta))
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag / mag.max())
    return list(zip(theta.tolist(), db.tolist()))


def half_power_beamwidth(geom: ArrayGeometry, code, step=0.01) -> float:
    """Width in degrees of the -3 dB region around the main beam."""
    theta = angle_grid(step)
    mag = np.abs(array_factor(geom, code_to_phases(code), theta))
    p = mag / mag.max()
    i = int(np.argmax(p))
    above = p >= 1 / np.sqrt(2)
    lo = i
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = i
    while hi < p.size - 1 and above[hi + 1]:
        hi += 1
    return float(theta[hi] - theta[lo])
