"""``cqe run | oracle | validate``.

Exit codes: 0 success, 2 configuration error, 3 convergence failure,
4 FCIDUMP parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .exceptions import CapacityError, ConfigError, FCIDumpParseError
from .experiments import ALGORITHMS, load_config, oracle, run_experiment, write_bundle
from .fcidump import read_fcidump

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_PARSE = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cqe", description="Ensemble contracted Schrodinger solvers.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run an experiment config"),
                            ("oracle", "exact diagonalization only")):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("config", help="JSON experiment config")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--output-dir", help="override the config output_path")
        if name == "run":
            s.add_argument("--algorithm", choices=ALGORITHMS, help="override the config algorithm")
    v = sub.add_parser("validate", help="parse an FCIDUMP file and report its header")
    v.add_argument("fcidump")
    return p


def _load(args):
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir is not None:
        overrides["output_path"] = args.output_dir
    if getattr(args, "algorithm", None) is not None:
        overrides["algorithm"] = args.algorithm
    return replace(config, **overrides) if overrides else config


def _cmd_run(args) -> int:
    config = _load(args)
    bundle = run_experiment(config)
    out = write_bundle(bundle, config.output_path)
    for p in bundle.points:
        status = "error: " + p.error if p.error else ("converged" if p.converged else "not converged")
        print(f"{p.label}: max |dE| = {p.max_abs_delta:.3e} Ha, {p.iterations} iterations, {status}")
    print(f"results written to {out}")
    return EXIT_OK if bundle.converged else EXIT_CONVERGENCE


def _cmd_oracle(args) -> int:
    config = _load(args)
    result = oracle(config)
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    (out / "oracle.json").write_text(json.dumps(result, indent=2) + "\n")
    for p in result["points"]:
        print(p["label"], " ".join(f"{e:.10f}" for e in p["eigenvalues"][:8]))
    return EXIT_OK


def _cmd_validate(args) -> int:
    ints = read_fcidump(args.fcidump)
    ints.check_symmetry()
    print(f"NORB={ints.n_spatial} NELEC={ints.n_electrons} MS2={ints.ms2} "
          f"E_nuc={ints.e_nuc:.12f} max|h|={np.abs(ints.h_core).max():.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "oracle": _cmd_oracle, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except FCIDumpParseError as exc:
        print(f"cqe: FCIDUMP parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, CapacityError, FileNotFoundError) as exc:
        print(f"cqe: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
