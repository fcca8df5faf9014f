"""Command-line entry point: ``fritchman {simulate,train,generate,compare,sweep}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import formats, pipeline
from .channel import run_transmission
from .errors import (
    ConfigError,
    DegenerateMeasurementError,
    DegenerateSequenceError,
    ImpossibleObservationError,
    ModelValidationError,
    UndefinedEfrdError,
)
from .estimation import TrainingConfig, paper_initial_model, train
from .model import RNG_NAME, generate_error_sequence
from .stats import write_efrd_csv

log = logging.getLogger("fritchman")

EXPECTED_ERRORS = (
    ConfigError,
    ModelValidationError,
    DegenerateSequenceError,
    DegenerateMeasurementError,
    ImpossibleObservationError,
    UndefinedEfrdError,
    ValueError,
    OSError,
)


def _sibling(path, suffix) -> Path:
    path = Path(path)
    return path.with_name(path.stem + suffix)


def cmd_simulate(args) -> int:
    config = formats.read_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    result = run_transmission(config, args.n_bits)
    formats.write_sequence(result.error_sequence, args.output)

    t = result.thresholds
    items = [
        ("case", config.case),
        ("n_bits", args.n_bits),
        ("errors", int(result.error_sequence.sum())),
        ("pe", float(result.error_sequence.mean())),
        ("threshold_pwm_off", t.pwm_off),
        ("threshold_pwm_on", t.pwm_on),
        ("threshold_latch", config.threshold_latch if config.pwm is not None else None),
        *formats.quality_items(result.quality),
        ("clipped_fraction", result.clipped_fraction),
        ("warning", "; ".join(result.warnings) or None),
        ("rng", result.rng),
        ("seed", result.seed),
    ]
    report = Path(args.report) if args.report else _sibling(args.output, ".report")
    report.write_text(formats.dump_kv(items))
    if args.adc_dump:
        Path(args.adc_dump).write_text("".join(f"{c}\n" for c in result.adc_samples.tolist()))
    log.info("wrote %s and %s (Pe=%.5f)", args.output, report, result.error_sequence.mean())
    return 0


def cmd_train(args) -> int:
    seq = formats.read_sequence(args.sequence)
    init = paper_initial_model() if args.paper_init else formats.read_model(args.init)
    config = TrainingConfig(
        max_iterations=args.iterations,
        log_likelihood_tolerance=args.tolerance,
        initial_model=init,
    )
    report = train(config, seq)
    formats.write_model(report.final_model, args.output)
    csv_path = Path(args.report) if args.report else _sibling(args.output, "_training.csv")
    formats.write_training_csv(report.log_likelihoods, csv_path)
    log.info("trained %d iterations, final log10 likelihood %.4f",
             report.iterations_run, report.log_likelihoods[-1])
    return 0


def cmd_generate(args) -> int:
    model = formats.read_model(args.model)
    seed = 0 if args.seed is None else args.seed
    seq = generate_error_sequence(model, args.length, seed)
    formats.write_sequence(seq, args.output)
    meta = Path(str(args.output) + ".meta")
    meta.write_text(formats.dump_kv([
        ("model", str(args.model)), ("length", args.length), ("rng", RNG_NAME), ("seed", seed),
    ]))
    return 0


def cmd_compare(args) -> int:
    measured = formats.read_sequence(args.measured)
    model = formats.read_model(args.model)
    seed = 0 if args.seed is None else args.seed
    cmp = pipeline.compare(measured, model, seed)
    qcol, qval = "snr_db", None
    if args.quality:
        doc = formats.parse_kv(Path(args.quality).read_text(), args.quality)
        found, qval = formats.quality_db(doc)
        qcol = found or qcol
    row = {qcol: qval, **cmp.row}
    columns = [*pipeline.table_columns(model, qcol), "seed", "rng"]
    formats.write_table([row], columns, args.output)
    if args.efrd_dir:
        d = Path(args.efrd_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, curve in (("measured", cmp.measured), ("model", cmp.model), ("iid", cmp.iid)):
            write_efrd_csv(curve, d / f"efrd_{name}.csv")
    return 0


def cmd_sweep(args) -> int:
    spec = pipeline.load_sweep_spec(Path(args.spec).read_text(), args.spec, args.seed)
    rows, _ = pipeline.run_sweep(spec, args.output_dir, jobs=args.jobs)
    failed = [r for r in rows if r["status"] != "ok"]
    if failed:
        log.error("%d of %d sweep points failed", len(failed), len(rows))
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fritchman",
        description="Fritchman channel modelling: simulate, train, generate, compare, sweep.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the waveform channel and write an error sequence")
    s.add_argument("config", help="channel config file (key = value)")
    s.add_argument("--n-bits", type=int, default=100_000)
    s.add_argument("-o", "--output", required=True, help="error sequence file to write")
    s.add_argument("--report", help="quality report path (default: <output stem>.report)")
    s.add_argument("--adc-dump", help="write the decision ADC reads, one integer per line")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("train", help="Baum-Welch training from an error sequence")
    t.add_argument("sequence")
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--init", help="initial model file")
    g.add_argument("--paper-init", action="store_true", help="use the built-in 3-state starting model")
    t.add_argument("--iterations", type=int, default=20)
    t.add_argument("--tolerance", type=float, default=0.0,
                   help="stop when the log10-likelihood gain drops below this (0: never)")
    t.add_argument("-o", "--output", required=True, help="trained model file")
    t.add_argument("--report", help="log-likelihood CSV (default: <output stem>_training.csv)")
    t.set_defaults(func=cmd_train)

    gen = sub.add_parser("generate", help="sample an error sequence from a model")
    gen.add_argument("model")
    gen.add_argument("--length", type=int, default=100_000)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_generate)

    c = sub.add_parser("compare", help="EFRD fit of model and IID sequences against a measured one")
    c.add_argument("measured")
    c.add_argument("model")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--quality", help="simulate report supplying the SNR/SINR column")
    c.add_argument("--efrd-dir", help="also write the three EFRD curves as CSV here")
    c.add_argument("-o", "--output", required=True, help="one-row CSV")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="simulate/train/generate/compare over a list of points")
    w.add_argument("spec")
    w.add_argument("output_dir")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--seed", type=int, help="override the sweep base seed")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EXPECTED_ERRORS as exc:
        print(f"fritchman {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
