"""Surrogate-assisted design of varactor-tuned RIS unit cells.

An MLP predicts the passive cell's 2x2 impedance matrix from geometry, the
dual-port formula turns it into a reflection coefficient for any varactor
state, and an alternating optimizer looks for one geometry plus per-state
capacitances that realize 2**N equally spaced phases.
"""
__version__ = "0.1.0"

from .network import (DiodeModel, Environment, ImpedanceMatrix, NetworkDomainError,
                      NumericalSingularityError, diode_impedance, s11_from_network,
                      s11_to_db_phase)
from .oracle import (GEOMETRY_BOUNDS, Dataset, DatasetRecord, GeometryParams, OracleConfig,
                     generate_arrays, generate_dataset, read_jsonl, synth_impedance, write_jsonl)
from .surrogate import (MetricsReport, SurrogateModel, TrainConfig, mae, mlp_forward,
                        mlp_gradient, mse, predict_impedance, train)
from .designer import (DesignResult, DesignSpec, PhaseSchedule, design_nbit, evaluate_loss,
                       optimize_diode_states, optimize_passive, predict_s11, sweep_spectrum,
                       verify_against_oracle, wrap_phase)
from .farfield import (ArrayGeometry, CodingSequence, array_factor, beam_angle_snell,
                       code_to_phases, pattern_sweep)
from .fixtures import acceptance_oracle
