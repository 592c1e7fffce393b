"""Command-line entry point.

Subcommands: gen-data, train, design, spectrum, verify, pattern, replay.
Exit codes: 0 success (flagged-infeasible designs included), 2 usage or
validation error, 3 I/O failure. Every run writes ``<out>.manifest.json``
next to its primary output; ``replay`` re-executes one.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys

from . import __version__
from .designer import DesignResult, DesignSpec, design_nbit, sweep_spectrum, verify_against_oracle
from .farfield import (ArrayGeometry, BeamDomainError, CodeParseError, CodingSequence,
                       angle_grid, beam_angle_snell, pattern_sweep)
from .network import DiodeModel, NetworkDomainError
from .oracle import DatasetFormatError, OracleConfig, generate_arrays, read_jsonl, write_jsonl
from .surrogate import SurrogateModel, TrainConfig, TrainingError, train

log = logging.getLogger("risdesign")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return f"{x:.9g}"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_json(path) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    if not isinstance(d, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return d


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _write_manifest(args, out_path, effective: dict, inputs: list) -> None:
    argv = getattr(args, "_argv", None)
    manifest = {
        "tool": "risdesign",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "seed": args.seed,
        "effective_config": effective,
        "inputs": {p: _sha256(p) for p in inputs if p},
        "output": os.path.basename(out_path),
        "output_sha256": _sha256(out_path),
    }
    _write_json(str(out_path) + ".manifest.json", manifest)


def _oracle_config(path) -> OracleConfig:
    return OracleConfig() if path is None else OracleConfig.load(path)


def _source(args):
    if getattr(args, "oracle", None):
        return OracleConfig.load(args.oracle), [args.oracle]
    if not args.model:
        raise UsageError("one of --model or --oracle is required")
    return SurrogateModel.load(args.model), [args.model]


# ---------------------------------------------------------------- subcommands

def cmd_gen_data(args) -> int:
    cfg = _oracle_config(args.config)
    band = tuple(args.band) if args.band else (cfg.f_lo, cfg.f_hi, 201)
    band = (float(band[0]), float(band[1]), int(band[2]))
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    ds = generate_arrays(cfg, args.n, band, seed=args.seed)
    write_jsonl(ds, args.out)
    _write_manifest(args, args.out, {"oracle": cfg.to_dict(), "n": args.n, "band": list(band)},
                    [args.config])
    log.info("wrote %d records to %s", len(ds), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    overrides = _load_json(args.config) if args.config else {}
    for key in ("epochs", "batch_size", "lbfgs_iters"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    overrides["seed"] = args.seed
    try:
        cfg = TrainConfig(**overrides)
    except TypeError as exc:
        raise UsageError(f"bad train config: {exc}") from None
    ds = read_jsonl(args.data)
    model, report = train(ds, cfg)
    model.save(args.model_out)
    _write_json(args.metrics_out, report.to_dict())
    _write_manifest(args, args.model_out, {"train": dataclasses.asdict(cfg)},
                    [args.data, args.config])
    print(report.format_table())
    return EXIT_OK


def cmd_design(args) -> int:
    source, inputs = _source(args)
    overrides = _load_json(args.config) if args.config else {}
    if "diode" in overrides:
        overrides["diode"] = DiodeModel(**overrides["diode"])
    for key, val in (("bits", args.bits), ("freq", args.freq), ("floor_db", args.floor),
                     ("population", args.population), ("generations", args.generations)):
        if val is not None:
            overrides[key] = val
    overrides["seed"] = args.seed
    try:
        spec = DesignSpec(**overrides)
    except TypeError as exc:
        raise UsageError(f"bad design config: {exc}") from None
    result = design_nbit(source, spec)
    result.save(args.out)
    _write_manifest(args, args.out, {"design": spec.to_dict()}, inputs + [args.config])
    print(result.summary())
    if result.infeasible:
        print(f"warning: design is infeasible: {result.diagnostics}", file=sys.stderr)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    source, inputs = _source(args)
    result = DesignResult.load(args.design)
    rows = sweep_spectrum(source, result, (args.band[0], args.band[1], int(args.band[2])))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "freq_ghz", "amplitude_db", "phase_deg"])
        for state, f, a, p in rows:
            w.writerow([state, _fmt(f), _fmt(a), _fmt(p)])
    _write_manifest(args, args.out, {"band": list(args.band)}, inputs + [args.design])
    return EXIT_OK


def cmd_verify(args) -> int:
    result = DesignResult.load(args.design)
    cfg = _oracle_config(args.config)
    report = verify_against_oracle(result, cfg)
    _write_json(args.out, report)
    _write_manifest(args, args.out, {"oracle": cfg.to_dict()}, [args.design, args.config])
    print(f"max |phase delta| {report['max_abs_phase_delta_deg']:.3f} deg, "
          f"max |amplitude delta| {report['max_abs_amplitude_delta_db']:.3f} dB")
    return EXIT_OK


def cmd_pattern(args) -> int:
    code = CodingSequence.parse(args.code)
    geom = ArrayGeometry(n_columns=len(code), pitch_mm=args.pitch, freq_ghz=args.freq)
    theta = angle_grid(args.step)
    rows = pattern_sweep(geom, code, theta)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "af_db"])
        for t, db in rows:
            w.writerow([_fmt(t), _fmt(db)])
    _write_manifest(args, args.out, {"code": str(code), "pitch_mm": args.pitch,
                                     "freq_ghz": args.freq, "step_deg": args.step}, [])
    try:
        print(f"Snell beam angle: {beam_angle_snell(geom, code):.2f} deg")
    except BeamDomainError as exc:
        print(f"no Snell beam angle: {exc}")
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = _load_json(args.manifest)
    argv = manifest.get("argv")
    if not argv:
        raise UsageError("manifest has no recorded argv")
    return main(argv)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risdesign", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--config", default=None, help="JSON config file for this subcommand")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", parents=[common], help="sample geometries and label them with the oracle")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--band", type=float, nargs=3, metavar=("F_LO", "F_HI", "N_FREQ"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[common], help="fit the MLP surrogate")
    s.add_argument("--data", required=True)
    s.add_argument("--model-out", required=True)
    s.add_argument("--metrics-out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--lbfgs-iters", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("design", parents=[common], help="run the N-bit alternating design")
    s.add_argument("--model")
    s.add_argument("--oracle", help="use an oracle config as the impedance source instead of a model")
    s.add_argument("--bits", type=int)
    s.add_argument("--freq", type=float)
    s.add_argument("--floor", type=float)
    s.add_argument("--population", type=int)
    s.add_argument("--generations", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("spectrum", parents=[common], help="per-state amplitude/phase spectra")
    s.add_argument("--model")
    s.add_argument("--oracle")
    s.add_argument("--design", required=True)
    s.add_argument("--band", type=float, nargs=3, required=True, metavar=("F_LO", "F_HI", "N_FREQ"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("verify", parents=[common], help="compare a design against the oracle")
    s.add_argument("--design", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("pattern", parents=[common], help="far-field pattern of a coding sequence")
    s.add_argument("--code", required=True)
    s.add_argument("--pitch", type=float, default=436.0 / 16, help="column pitch, mm")
    s.add_argument("--freq", type=float, default=3.5, help="GHz")
    s.add_argument("--step", type=float, default=0.1, help="angle step, degrees")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pattern)

    s = sub.add_parser("replay", parents=[common], help="re-run the command recorded in a manifest")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, NetworkDomainError, CodeParseError, BeamDomainError, TrainingError,
            ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
