"""Command line entry point: ``onebit-em ber`` and ``onebit-em trace``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    load_config,
    run_ber_experiment,
    run_convergence_trace,
    write_ber_csv,
    write_manifest,
    write_traces,
)

EXIT_IO = 1
EXIT_USAGE = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onebit-em", description="One-bit MIMO-OFDM detection experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="override base_seed")
        sp.add_argument("--trials", type=int, help="override trials")
        sp.add_argument("--out", help="output directory (overrides out_dir)")
        sp.add_argument("--workers", type=int, help="worker threads for trials")
        sp.add_argument("--timing", action="store_true", default=None, help="record wall-clock columns")

    common(sub.add_parser("ber", help="BER versus SNR sweep"))
    tr = sub.add_parser("trace", help="NLL per iteration on one realization")
    common(tr)
    tr.add_argument("--snr-db", type=float, required=True)
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(
            args.config,
            base_seed=args.seed,
            trials=args.trials,
            out_dir=args.out,
            workers=args.workers,
            timing=args.timing,
        )
    except ConfigError as exc:
        print(f"onebit-em: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "ber":
            curve = run_ber_experiment(config)
            csv_path = out_dir / "ber.csv"
            write_ber_csv(curve, csv_path, timing=config.timing)
            sigma = {repr(snr): curve.sigma_c_sq[:, s].tolist() for s, snr in enumerate(curve.snr_db)}
            write_manifest(out_dir / "manifest_ber.yaml", config, "ber", [csv_path], {"sigma_c_sq_per_trial": sigma})
        else:
            traces = run_convergence_trace(config, args.snr_db)
            paths = write_traces(traces, out_dir, timing=config.timing)
            write_manifest(out_dir / "manifest_trace.yaml", config, "trace", paths, {"snr_db": args.snr_db})
    except OSError as exc:
        print(f"onebit-em: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
