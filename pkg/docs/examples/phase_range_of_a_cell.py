"""How far can one varactor swing the reflection phase of a unit cell?

Builds the impedance matrix of a cell from the analytic oracle, terminates
port 2 with the varactor across its whole capacitance range and prints the
reflection amplitude and phase. The phase range and worst amplitude decide
how many bits the cell can support.
"""
import numpy as np

from risdesign import DiodeModel, GeometryParams, synth_impedance
from risdesign.fixtures import ACCEPTANCE_FREQ, ACCEPTANCE_REFERENCE_GEOMETRY, acceptance_oracle
from risdesign.network import diode_impedance, s11_from_network, s11_to_db_phase

cfg = acceptance_oracle()
diode = DiodeModel()
cell = GeometryParams(*ACCEPTANCE_REFERENCE_GEOMETRY)
z = synth_impedance(cfg, cell, ACCEPTANCE_FREQ)
print(f"Z at {ACCEPTANCE_FREQ} GHz:\n{np.round(z.as_array(), 2)}")

caps = np.linspace(diode.c_min, diode.c_max, 41)
rows = [s11_to_db_phase(s11_from_network(z, diode_impedance(diode, c, ACCEPTANCE_FREQ)))
        for c in caps]
amp = np.array([r[0] for r in rows])
phase = np.unwrap(np.radians([r[1] for r in rows]))

print(f"{'C /pF':>8}{'|S11| /dB':>12}{'phase /deg':>12}")
for c, a, p in zip(caps[::4], amp[::4], np.degrees(phase[::4])):
    print(f"{c:8.2f}{a:12.2f}{p:12.1f}")
span = np.degrees(phase.max() - phase.min())
print(f"phase span {span:.0f} deg, worst amplitude {amp.min():.2f} dB")
