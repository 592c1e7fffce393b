"""A 3-bit cell designed end to end on a trained surrogate.

1. sample 2000 geometries and label them with the oracle,
2. fit the 7-30-8 surrogate (a minute or two on one core),
3. alternate geometry and capacitance updates until the eight states sit
   45 degrees apart,
4. check the design against the oracle it was meant to imitate.

Pass ``--oracle`` to skip training and design on the oracle directly.
"""
import sys
import time

from risdesign import DesignSpec, design_nbit, generate_arrays, train, verify_against_oracle
from risdesign.fixtures import ACCEPTANCE_BAND, ACCEPTANCE_FREQ, acceptance_oracle
from risdesign.surrogate import TrainConfig

cfg = acceptance_oracle()
if "--oracle" in sys.argv:
    source = cfg
else:
    t0 = time.perf_counter()
    data = generate_arrays(cfg, 2000, ACCEPTANCE_BAND, seed=0)
    source, report = train(data, TrainConfig(epochs=100, batch_size=128, lbfgs_iters=2000))
    print(report.format_table())
    print(f"trained in {time.perf_counter() - t0:.0f} s")

result = design_nbit(source, DesignSpec(bits=3, freq=ACCEPTANCE_FREQ))
print(result.summary())
print(f"loss after each round: {[round(v, 3) for v in result.trace]}")

check = verify_against_oracle(result, cfg)
print(f"against the oracle: phase within {check['max_abs_phase_delta_deg']:.2f} deg, "
      f"amplitude within {check['max_abs_amplitude_delta_db']:.3f} dB")
