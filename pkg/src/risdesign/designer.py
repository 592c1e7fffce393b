"""N-bit unit-cell design on top of an impedance source.

An *impedance source* is anything with ``z_matrix(geoms, freq)`` returning a
(P, 2, 2) complex array: a trained :class:`SurrogateModel` or an
:class:`OracleConfig` both qualify. Composing a source with the dual-port
formula gives the reflection coefficient for any geometry and capacitance.

The design loop alternates between the shared geometry (differential
evolution plus compass refinement) and the per-state capacitances (grid
search plus golden-section refinement), growing the phase schedule by one
state per round.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .network import (DiodeModel, Environment, ImpedanceMatrix, NetworkDomainError,
                      diode_impedance, input_impedance, reflection, s11_from_network)
from .oracle import GEOMETRY_BOUNDS, GEOMETRY_FIELDS, GeometryParams, OracleConfig

log = logging.getLogger(__name__)

_LO = GEOMETRY_BOUNDS[:, 0]
_HI = GEOMETRY_BOUNDS[:, 1]
_SPAN = _HI - _LO
_GOLDEN = (math.sqrt(5) - 1) / 2

AMPLITUDE_PENALTIES = ("saturating", "linear")
REFERENCE_MODES = ("joint", "max_amplitude", "initial")


@dataclass(frozen=True)
class DesignSpec:
    """Targets and knobs for one N-bit design.

    ``amplitude_penalty="saturating"`` uses ``-w_amp * max(dB, floor)``;
    ``"linear"`` uses ``-w_amp * min(dB, floor)`` which keeps growing below
    the floor. ``reference_state`` picks how state 1's capacitance is chosen.
    """

    bits: int = 3
    freq: float = 3.3
    floor_db: float = -3.0
    w_phase: float = 0.5
    w_amp: float = 0.5
    diode: DiodeModel = DiodeModel()
    env: Environment = Environment()
    population: int = 32
    generations: int = 200
    seed: int = 0
    initial_cap: float | None = None
    amplitude_penalty: str = "saturating"
    reference_state: str = "joint"
    cap_grid: int = 1024
    de_weight: float = 0.7
    de_crossover: float = 0.9

    def __post_init__(self):
        if not 1 <= self.bits <= 4:
            raise ValueError(f"bits must be in 1..4, got {self.bits}")
        if self.w_phase < 0 or self.w_amp < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.floor_db < 0:
            raise ValueError("amplitude floor must be negative (dB)")
        if not self.freq > 0:
            raise NetworkDomainError(f"design frequency must be positive, got {self.freq}")
        if self.amplitude_penalty not in AMPLITUDE_PENALTIES:
            raise ValueError(f"amplitude_penalty must be one of {AMPLITUDE_PENALTIES}")
        if self.reference_state not in REFERENCE_MODES:
            raise ValueError(f"reference_state must be one of {REFERENCE_MODES}")
        if self.population < 4 or self.generations < 0 or self.cap_grid < 3:
            raise ValueError("population >= 4, generations >= 0, cap_grid >= 3 required")
        c0 = self.start_cap
        if not self.diode.c_min <= c0 <= self.diode.c_max:
            raise NetworkDomainError(f"initial capacitance {c0} pF outside diode bounds")

    @property
    def n_states(self) -> int:
        return 2 ** self.bits

    @property
    def start_cap(self) -> float:
        return self.diode.c_max if self.initial_cap is None else self.initial_cap

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpec":
        d = dict(d)
        d["diode"] = DiodeModel(**d.get("diode", {}))
        d["env"] = Environment(**d.get("env", {}))
        return cls(**d)


@dataclass(frozen=True)
class PhaseSchedule:
    """First ``k`` of the 2**bits uniformly spaced target phases."""

    bits: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= 2 ** self.bits:
            raise ValueError(f"schedule length {self.k} outside 1..{2 ** self.bits}")

    @classmethod
    def full(cls, bits: int) -> "PhaseSchedule":
        return cls(bits, 2 ** bits)

    @property
    def delta_theta(self) -> float:
        return 360.0 / 2 ** self.bits

    @property
    def targets(self) -> np.ndarray:
        return np.arange(self.k) * self.delta_theta

    def extend(self) -> "PhaseSchedule":
        return PhaseSchedule(self.bits, min(self.k + 1, 2 ** self.bits))

    def __len__(self):
        return self.k


def wrap_phase(x):
    """Map degrees onto (-180, 180]; exact multiples of +-180 go to +180."""
    y = np.asarray(x, dtype=float)
    y = y - 360.0 * np.ceil((y - 180.0) / 360.0)
    return float(y) if y.ndim == 0 else y


# ---------------------------------------------------------------- forward model

def s11_grid(source, geoms, caps, freq, diode: DiodeModel, env: Environment) -> np.ndarray:
    """Reflection for every (geometry, capacitance) pair: shape (P, K)."""
    z = source.z_matrix(geoms, freq)
    za = np.atleast_1d(diode_impedance(diode, caps, freq))
    zin = input_impedance(z[:, 0, 0, None], z[:, 0, 1, None], z[:, 1, 0, None],
                          z[:, 1, 1, None], za[None, :])
    return reflection(zin, env.z0)


def predict_s11(source, g, c, freq, diode: DiodeModel = DiodeModel(),
                env: Environment = Environment()) -> complex:
    """S11 of geometry ``g`` with the varactor at ``c`` pF."""
    x = g.as_array() if hasattr(g, "as_array") else np.asarray(g, dtype=float)
    z = ImpedanceMatrix.from_array(source.z_matrix(x, freq)[0], freq)
    return s11_from_network(z, diode_impedance(diode, c, freq), env)


def db_and_phase(s11):
    s11 = np.asarray(s11)
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(s11)), np.degrees(np.angle(s11))


def loss_from_s11(s11, targets, spec: DesignSpec):
    """Matching loss for reflection coefficients ``s11[..., k]`` against ``targets``.

    Phases are taken relative to state 1 (the first entry on the last axis).
    """
    s11 = np.asarray(s11)
    targets = np.asarray(targets, dtype=float)
    if s11.shape[-1] != targets.size:
        raise ValueError(f"{s11.shape[-1]} states but {targets.size} targets")
    amp_db, phase = db_and_phase(s11)
    rel = wrap_phase(phase - phase[..., :1])
    return state_loss(rel, amp_db, targets, spec).sum(axis=-1)


def state_loss(rel_phase, amp_db, targets, spec: DesignSpec):
    """Per-state terms of the matching loss (phase error in degrees, squared)."""
    err = wrap_phase(np.asarray(rel_phase) - targets)
    if spec.amplitude_penalty == "saturating":
        amp = np.maximum(amp_db, spec.floor_db)
    else:
        amp = np.minimum(amp_db, spec.floor_db)
    return spec.w_phase * err ** 2 - spec.w_amp * amp


def evaluate_loss(source, g, caps, schedule: PhaseSchedule, spec: DesignSpec) -> float:
    caps = np.asarray(caps, dtype=float)
    if caps.size != len(schedule):
        raise ValueError(f"{caps.size} capacitances for a schedule of {len(schedule)} states")
    x = g.as_array() if hasattr(g, "as_array") else np.asarray(g, dtype=float)
    s = s11_grid(source, x, caps, spec.freq, spec.diode, spec.env)[0]
    return float(loss_from_s11(s, schedule.targets, spec))


def _batch_loss(source, caps, schedule, spec):
    caps = np.asarray(caps, dtype=float)
    targets = schedule.targets

    def fun(X):
        s = s11_grid(source, X, caps, spec.freq, spec.diode, spec.env)
        return loss_from_s11(s, targets, spec)
    return fun


# ---------------------------------------------------------------- geometry step

def compass_refine(fun, X, f=None, step=0.1, tol=1e-5, max_sweeps=500):
    """Coordinate-wise pattern search on a batch of starting points.

    ``fun`` maps (B, 6) -> (B,). Steps are fractions of each bound's width;
    a point's step halves after a sweep without improvement. Only
    improvements are accepted, so the result is never worse than the start.
    """
    X = np.array(X, dtype=float, copy=True)
    f = fun(X) if f is None else np.array(f, dtype=float, copy=True)
    steps = np.full(X.shape[0], step)
    for _ in range(max_sweeps):
        active = steps >= tol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        improved = np.zeros(X.shape[0], dtype=bool)
        for j in range(X.shape[1]):
            delta = steps[idx] * _SPAN[j]
            cand = np.concatenate([X[idx], X[idx]])
            cand[:, j] += np.concatenate([delta, -delta])
            cand[:, j] = np.clip(cand[:, j], _LO[j], _HI[j])
            fc = fun(cand).reshape(2, idx.size)
            best = np.argmin(fc, axis=0)
            fbest = fc[best, np.arange(idx.size)]
            win = fbest < f[idx]
            rows = idx[win]
            X[rows] = cand[best[win] * idx.size + np.flatnonzero(win)]
            f[rows] = fbest[win]
            improved[rows] = True
        steps[active & ~improved] *= 0.5
    return X, f


def differential_evolution(fun, incumbent=None, population=32, generations=200,
                           weight=0.7, crossover=0.9, seed=0):
    """DE/rand/1/bin over the geometry box with greedy (elitist) selection.

    ``fun`` evaluates a whole (P, 6) population at once. The incumbent, when
    given, replaces the first random member so the best loss can only
    improve on it.
    """
    rng = np.random.default_rng(seed)
    P, D = population, _LO.size
    pop = _LO + _SPAN * rng.random((P, D))
    if incumbent is not None:
        pop[0] = incumbent
    fit = fun(pop)
    others = np.array([[j for j in range(P) if j != i] for i in range(P)])
    for _ in range(generations):
        picks = np.argsort(rng.random((P, P - 1)), axis=1)[:, :3]
        r = np.take_along_axis(others, picks, axis=1)
        mutant = pop[r[:, 0]] + weight * (pop[r[:, 1]] - pop[r[:, 2]])
        # Reflect off the walls, then clip for the rare double overshoot.
        mutant = np.where(mutant < _LO, 2 * _LO - mutant, mutant)
        mutant = np.where(mutant > _HI, 2 * _HI - mutant, mutant)
        mutant = np.clip(mutant, _LO, _HI)
        cross = rng.random((P, D)) < crossover
        cross[np.arange(P), rng.integers(0, D, P)] = True
        trial = np.where(cross, mutant, pop)
        ft = fun(trial)
        better = ft <= fit
        pop[better] = trial[better]
        fit[better] = ft[better]
    best = int(np.argmin(fit))
    return pop[best].copy(), float(fit[best])


def optimize_passive(source, caps, schedule: PhaseSchedule, spec: DesignSpec,
                     incumbent=None, seed=None) -> GeometryParams:
    """Best geometry for fixed capacitances and schedule."""
    fun = _batch_loss(source, caps, schedule, spec)
    inc = None if incumbent is None else (
        incumbent.as_array() if hasattr(incumbent, "as_array") else np.asarray(incumbent, float))
    x, fx = differential_evolution(fun, inc, spec.population, spec.generations,
                                   spec.de_weight, spec.de_crossover,
                                   spec.seed if seed is None else seed)
    X, _ = compass_refine(fun, x[None, :], np.array([fx]))
    return GeometryParams.from_array(np.clip(X[0], _LO, _HI))


# ---------------------------------------------------------------- capacitance step

def golden_section(fun, a, b, tol=1e-7, max_iter=200):
    """Minimise a scalar function on [a, b]; returns (x, f(x))."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def _s11_of_caps(z: np.ndarray, spec: DesignSpec):
    def s11(c):
        za = diode_impedance(spec.diode, c, spec.freq)
        zin = input_impedance(z[0, 0], z[0, 1], z[1, 0], z[1, 1], za)
        return reflection(zin, spec.env.z0)
    return s11


def _refine_cap(term, grid, j):
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, grid.size - 1)]
    x, fx = golden_section(term, lo, hi)
    fj = term(grid[j])
    return (x, fx) if fx <= fj else (grid[j], fj)


def optimize_diode_states(source, g, schedule: PhaseSchedule, spec: DesignSpec) -> list[float]:
    """Per-state capacitances for a fixed geometry.

    Given state 1, every other state's term depends only on its own
    capacitance, so each is a 1-D problem: dense grid, then golden-section
    inside the winning grid cell.
    """
    d = spec.diode
    x = g.as_array() if hasattr(g, "as_array") else np.asarray(g, dtype=float)
    z = source.z_matrix(x, spec.freq)[0]
    s11 = _s11_of_caps(z, spec)
    grid = np.linspace(d.c_min, d.c_max, spec.cap_grid)
    amp_g, ph_g = db_and_phase(s11(grid))
    targets = schedule.targets
    amp_only = np.array([0.0])

    def amp_term(c):
        a, _ = db_and_phase(s11(c))
        return float(state_loss(0.0, a, amp_only, spec)[0])

    # State 1 on the grid.
    if spec.reference_state == "initial":
        c1 = spec.start_cap
    elif spec.reference_state == "max_amplitude":
        j1 = int(np.argmax(amp_g))
        c1, _ = golden_section(lambda c: -float(db_and_phase(s11(c))[0]), grid[max(j1 - 1, 0)],
                               grid[min(j1 + 1, grid.size - 1)])
    else:
        amp1 = state_loss(0.0, amp_g, amp_only, spec)
        total = amp1.copy()
        rel = wrap_phase(ph_g[None, :] - ph_g[:, None])  # [reference, candidate]
        for t in targets[1:]:
            total += state_loss(rel, amp_g[None, :], t, spec).min(axis=1)
        j1 = int(np.argmin(total))
        c1 = grid[j1]

    def solve_others(c_ref):
        _, ph1 = db_and_phase(s11(c_ref))
        caps = [c_ref]
        for t in targets[1:]:
            terms = state_loss(wrap_phase(ph_g - ph1), amp_g, t, spec)
            j = int(np.argmin(terms))

            def term(c, t=t):
                a, p = db_and_phase(s11(c))
                return float(state_loss(wrap_phase(p - ph1), a, t, spec))
            caps.append(float(_refine_cap(term, grid, j)[0]))
        return caps

    caps = solve_others(c1)
    if spec.reference_state == "joint" and len(targets) > 1:
        # One coordinate pass on state 1 with the others held, then re-solve.
        others = np.array(caps[1:])

        def total_of(c):
            return float(loss_from_s11(s11(np.concatenate([[c], others])), targets, spec))
        c1_new, f_new = _refine_cap(total_of, grid, j1)
        if f_new < total_of(c1):
            cand = solve_others(c1_new)
            if evaluate_loss(source, x, cand, schedule, spec) <= evaluate_loss(source, x, caps, schedule, spec):
                caps = cand
    elif spec.reference_state == "joint":
        caps = [float(_refine_cap(amp_term, grid, j1)[0])]
    return [float(np.clip(c, d.c_min, d.c_max)) for c in caps]


# ---------------------------------------------------------------- full design

@dataclass
class DesignResult:
    spec: DesignSpec
    geometry: GeometryParams
    caps: list
    phases: list          # relative to state 1, degrees in [0, 360)
    amplitudes: list      # dB
    loss: float
    trace: list = field(default_factory=list)
    infeasible: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def targets(self) -> np.ndarray:
        return PhaseSchedule.full(self.spec.bits).targets

    @property
    def phase_errors(self) -> np.ndarray:
        return np.abs(wrap_phase(np.asarray(self.phases) - self.targets))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "geometry_mm": dict(zip(GEOMETRY_FIELDS, self.geometry.as_array().tolist())),
            "capacitances_pf": list(self.caps),
            "target_phase_deg": self.targets.tolist(),
            "phase_deg": list(self.phases),
            "amplitude_db": list(self.amplitudes),
            "loss": self.loss,
            "loss_trace": list(self.trace),
            "infeasible": self.infeasible,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignResult":
        return cls(
            spec=DesignSpec.from_dict(d["spec"]),
            geometry=GeometryParams(**d["geometry_mm"]),
            caps=list(d["capacitances_pf"]),
            phases=list(d["phase_deg"]),
            amplitudes=list(d["amplitude_db"]),
            loss=float(d["loss"]),
            trace=list(d.get("loss_trace", [])),
            infeasible=bool(d.get("infeasible", False)),
            diagnostics=d.get("diagnostics", {}),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DesignResult":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def summary(self) -> str:
        g = ", ".join(f"{v:.2f}" for v in self.geometry.as_array())
        head = ["state"] + [str(i + 1) for i in range(len(self.caps))]
        rows = [
            ["C /pF"] + [f"{c:.2f}" for c in self.caps],
            ["Phase /deg"] + [f"{p:.1f}" for p in self.phases],
            ["Amp /dB"] + [f"{a:.2f}" for a in self.amplitudes],
        ]
        width = 11
        out = [f"f = {self.spec.freq} GHz   x_p* /mm = [{g}]   loss = {self.loss:.4g}"]
        for r in [head] + rows:
            out.append("".join(f"{v:>{width}}" for v in r))
        if self.infeasible:
            out.append(f"INFEASIBLE: {self.diagnostics}")
        return "\n".join(out)


def _state_values(source, g, caps, spec):
    s = s11_grid(source, g.as_array(), np.asarray(caps), spec.freq, spec.diode, spec.env)[0]
    amp, ph = db_and_phase(s)
    rel = np.mod(wrap_phase(ph - ph[0]), 360.0)
    rel = np.where(rel >= 360.0, 0.0, rel)
    return rel, amp


def design_nbit(source, spec: DesignSpec) -> DesignResult:
    """Alternate geometry and capacitance updates while the schedule grows.

    Round k fits the geometry to the first k states with their capacitances
    fixed, then re-solves the capacitances for k + 1 states. After every
    round the current geometry is scored on the full schedule (with
    capacitances re-solved for all states) and the best design so far is
    kept, which makes the recorded trace non-increasing.
    """
    full = PhaseSchedule.full(spec.bits)
    schedule = PhaseSchedule(spec.bits, 1)
    caps = [spec.start_cap]
    geom = None
    best = None
    trace = []
    for k in range(1, spec.n_states + 1):
        geom = optimize_passive(source, caps, schedule, spec, incumbent=geom, seed=spec.seed + k)
        schedule = schedule.extend()
        caps = optimize_diode_states(source, geom, schedule, spec)
        full_caps = caps if len(schedule) == full.k else optimize_diode_states(source, geom, full, spec)
        full_loss = evaluate_loss(source, geom, full_caps, full, spec)
        if best is None or full_loss < best[2]:
            best = (geom, full_caps, full_loss)
        trace.append(best[2])
        log.info("round %d/%d: round loss %.4g, best full loss %.4g", k, spec.n_states,
                 evaluate_loss(source, geom, caps, schedule, spec), best[2])

    geom, caps, loss = best
    phases, amps = _state_values(source, geom, caps, spec)
    errs = np.abs(wrap_phase(phases - full.targets))
    worst = int(np.argmin(amps))
    infeasible = bool(np.any(amps < spec.floor_db))
    diagnostics = {
        "worst_amplitude_state": worst + 1,
        "worst_amplitude_db": float(amps[worst]),
        "max_phase_error_deg": float(errs.max()),
        "max_phase_error_state": int(np.argmax(errs)) + 1,
    }
    return DesignResult(spec, geom, [float(c) for c in caps], phases.tolist(), amps.tolist(),
                        float(loss), trace, infeasible, diagnostics)


# ---------------------------------------------------------------- post-processing

def sweep_spectrum(source, result: DesignResult, band) -> list[tuple]:
    """Rows (state, freq_ghz, amplitude_db, phase_rel_deg), state-major.

    Phases are referenced to state 1 at the same frequency.
    """
    f_lo, f_hi, n = band
    if n < 1 or f_hi < f_lo:
        raise ValueError("band must satisfy f_lo <= f_hi and n >= 1")
    spec = result.spec
    freqs = np.linspace(f_lo, f_hi, int(n))
    g = result.geometry.as_array()
    caps = np.asarray(result.caps)
    amp = np.empty((caps.size, freqs.size))
    rel = np.empty_like(amp)
    for j, f in enumerate(freqs):
        s = s11_grid(source, g, caps, f, spec.diode, spec.env)[0]
        a, p = db_and_phase(s)
        amp[:, j] = a
        r = np.mod(wrap_phase(p - p[0]), 360.0)
        rel[:, j] = np.where(r >= 360.0, 0.0, r)
    return [(k + 1, float(freqs[j]), float(amp[k, j]), float(rel[k, j]))
            for k in range(caps.size) for j in range(freqs.size)]


def verify_against_oracle(result: DesignResult, oracle_cfg: OracleConfig) -> dict:
    """Recompute each state through the oracle and compare with the design's values."""
    spec = result.spec
    phases, amps = _state_values(oracle_cfg, result.geometry, result.caps, spec)
    rows = []
    for k in range(len(result.caps)):
        dphi = float(wrap_phase(phases[k] - result.phases[k]))
        rows.append({
            "state": k + 1,
            "capacitance_pf": result.caps[k],
            "surrogate_phase_deg": result.phases[k],
            "oracle_phase_deg": float(phases[k]),
            "phase_delta_deg": dphi,
            "surrogate_amplitude_db": result.amplitudes[k],
            "oracle_amplitude_db": float(amps[k]),
            "amplitude_delta_db": float(amps[k] - result.amplitudes[k]),
        })
    return {
        "freq_ghz": spec.freq,
        "states": rows,
        "max_abs_phase_delta_deg": max(abs(r["phase_delta_deg"]) for r in rows),
        "max_abs_amplitude_delta_db": max(abs(r["amplitude_delta_db"]) for r in rows),
    }


