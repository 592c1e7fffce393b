"""Beam steering with column phase codes on a 16-column aperture.

Each digit picks one of eight reflection states (d * 45 degrees). A code
whose phase steps by 90 degrees every four columns tilts the beam by a
modest angle; stepping every two columns doubles the gradient and roughly
doubles the tilt.
"""
import numpy as np

from risdesign.farfield import (ArrayGeometry, angle_grid, beam_angle_snell,
                                half_power_beamwidth, pattern_sweep)

geom = ArrayGeometry(n_columns=16, pitch_mm=27.25, freq_ghz=3.5)
theta = angle_grid(0.05)
for code in ("0000000000000000", "1111333355557777", "1133557711335577"):
    db = np.array([r[1] for r in pattern_sweep(geom, code, theta)])
    peak = theta[np.argmax(db)]
    try:
        snell = f"{beam_angle_snell(geom, code):6.2f}"
    except ValueError:
        snell = "   n/a"
    side = db[np.abs(theta - peak) > half_power_beamwidth(geom, code)].max()
    print(f"{code}  peak {peak:6.2f} deg  gradient estimate {snell} deg  "
          f"HPBW {half_power_beamwidth(geom, code):5.2f} deg  highest outside beam {side:6.1f} dB")
