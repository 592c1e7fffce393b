"""Reference configurations shared by the tests, the docs and the CLI."""
from .oracle import OracleConfig

# A cell tuned for a 3-bit design at 3.3 GHz: weak coupling (M ~ 1.5 nH) and a
# nearly inductive port-2 resonator let the varactor sweep the reflection
# phase through more than 335 degrees while staying above -2.5 dB. The band is
# kept narrow so a 30-unit surrogate resolves Z22 to a fraction of an ohm,
# which the design needs near the port-2 pole.
ACCEPTANCE_ORACLE = dict(
    la0=2.0, la1=0.08, ca0=0.45, ca1=0.006,
    lb0=1.2, lb1=0.04, cb0=100.0, cb1=0.0,
    m0=1.4, m1=0.01, r22=0.05,
    f_lo=3.0, f_hi=3.6,
)
ACCEPTANCE_FREQ = 3.3
ACCEPTANCE_BAND = (3.0, 3.6, 13)
ACCEPTANCE_SAMPLES = 2000
# Geometry used to certify attainability by brute force over capacitance.
ACCEPTANCE_REFERENCE_GEOMETRY = (6.0, 6.0, 24.0, 1.0, 0.5, 6.0)


def acceptance_oracle() -> OracleConfig:
    return OracleConfig(**ACCEPTANCE_ORACLE)


# Stronger coupling than the 3-bit cell: two states 180 degrees apart are
# reachable away from the port-2 pole, so both stay within 0.5 dB of unity.
ONE_BIT_ORACLE = dict(ACCEPTANCE_ORACLE, m0=3.0)
ONE_BIT_REFERENCE_GEOMETRY = (24.0, 15.0, 24.0, 1.3, 0.3, 7.2)


def one_bit_oracle() -> OracleConfig:
    return OracleConfig(**ONE_BIT_ORACLE)
