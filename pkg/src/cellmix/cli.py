"""Command line front end: one subcommand per experiment kind.

Exit codes: 0 when every recorded assertion passed, 2 when at least one
failed (each failure is listed on stdout), 3 for configuration problems
(bad keys, out-of-range values, schedules below the budget floor).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    BudgetUnbounded,
    CellmixError,
    ConfigError,
    TauBelowFloor,
    TrappingNotReached,
    WitnessNotFound,
)
from .harness import (
    ExperimentConfig,
    decay_report,
    emit_outputs,
    run_diagnostics,
    run_mincost_experiment,
    run_scaling_experiment,
    run_universality_experiment,
    upper_bound_report,
)

_COMMANDS = {
    "decay": ("decay", decay_report),
    "upper-bound": ("upper_bound", upper_bound_report),
    "scaling": ("scaling", run_scaling_experiment),
    "mincost": ("mincost", run_mincost_experiment),
    "universality": ("universality", run_universality_experiment),
    "diagnose": ("diagnostics", run_diagnostics),
}

# errors that mean "the configuration asked for something the theory or the
# grid cannot support" (exit 3) versus "the experiment ran and a scientific
# assertion failed" (exit 2)
_CONFIG_ERRORS = (ConfigError, TauBelowFloor)
_ASSERTION_ERRORS = (BudgetUnbounded, WitnessNotFound, TrappingNotReached)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellmix",
        description=(
            "Numerical laboratory for cellular mixing flows: decay exponents, "
            "scaling identities, stirring cost floors, and the trapped-ball "
            "counterexample on the unit square."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "decay": "evolve the reference cascade and fit both mixing-scale exponents",
        "upper-bound": "run the critical schedule tau = lambda^(1-s) and check envelopes",
        "scaling": "score change-of-variables budget ratios against the exact law",
        "mincost": "minimal stirring cost with stretch witnesses and the eta sweep",
        "universality": "trapped-ball counterexample and trapping-radius certification",
        "diagnose": "fast health check of blocks, spectra, and the tiling bound",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="JSON config file")
        sp.add_argument("--lambda", dest="lam", help="tiling parameter (e.g. 1/2)")
        sp.add_argument("--tau", help="time dilation (e.g. 2 or 3/2)")
        sp.add_argument("--s", type=float, help="Sobolev smoothness exponent")
        sp.add_argument("--p", type=float, help="Lebesgue exponent of the budget")
        sp.add_argument("--stages", type=int, help="number of cascade stages")
        sp.add_argument("--grid", type=int, help="cells per side of the lattice")
        sp.add_argument("--seed", type=int, help="seed for sampled pair statistics")
        sp.add_argument("--out", help="directory for CSV/JSON/SVG artifacts")
    return parser


def main(argv=None) -> int:
    # argparse exits 2 on usage errors; 2 means assertion failure here, so
    # remap malformed invocations to the configuration exit code
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else 1
        return 0 if code == 0 else 3
    kind, runner = _COMMANDS[args.command]
    try:
        mapping = {}
        if args.config is not None:
            mapping = json.loads(Path(args.config).read_text())
            if not isinstance(mapping, dict):
                raise ConfigError(f"config file must hold a JSON object, got {type(mapping).__name__}")
        config = ExperimentConfig.build(
            kind,
            mapping,
            lam=args.lam,
            tau=args.tau,
            s=args.s,
            p=args.p,
            stages=args.stages,
            grid=args.grid,
            seed=args.seed,
            out=args.out,
        )
    except _CONFIG_ERRORS as e:
        print(f"cellmix: configuration error: {e}", file=sys.stderr)
        return 3
    except (json.JSONDecodeError, OSError) as e:
        print(f"cellmix: cannot read config: {e}", file=sys.stderr)
        return 3

    try:
        results = runner(config)
    except _CONFIG_ERRORS as e:
        print(f"cellmix: configuration error: {e}", file=sys.stderr)
        return 3
    except _ASSERTION_ERRORS as e:
        print(f"FAIL {type(e).__name__}: {e}")
        return 2
    except CellmixError as e:
        print(f"cellmix: {type(e).__name__}: {e}", file=sys.stderr)
        return 3

    failures = 0
    for check in results["assertions"]:
        tag = "PASS" if check["passed"] else "FAIL"
        failures += 0 if check["passed"] else 1
        print(f"{tag} {check['name']}: {check['detail']}")
    if config.out_dir:
        for path in emit_outputs(results, config.out_dir):
            print(f"wrote {path}")
    return 0 if failures == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
