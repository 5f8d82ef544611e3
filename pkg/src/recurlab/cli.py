"""Command line entry point.

One scenario per invocation:

    recurlab <scenario> [--config FILE] [--seed N] [--samples N]
                        [--out DIR] [--threads N] [--set section.key=value]...

Flags override the corresponding config keys.  Each scenario ships a
built-in default config so it runs out of the box; --threads is accepted
for interface stability and recorded in the manifest, but the kernels
are deterministic fixed-order vector code, so it never changes results.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import SCENARIOS, ConfigError, load_config
from .runner import run_experiment

DEFAULT_CONFIGS = {
    "recurrence": """
[system]
kind = golden
[rate]
value = pow:1
[recurrence]
horizon = 100000
n_start = 50000
""",
    "hitting": """
[system]
kind = golden
grid_m = 10
towerize_delta = 0.03125
towerize_epsilon = 0.1
[rate]
value = pow:1
[hitting]
horizon = 1000
n_start = 500
y = 0.25
""",
    "perturb": """
[system]
kind = golden
grid_m = 10
[perturb]
delta = 0.03125
epsilon = 0.1
""",
    "correlations": """
[system]
kind = cat
grid_m = 8
[observable]
kind = trig
freqs = 1,0
[correlations]
horizons = 1,2,4,8,16,32,64,128
exponents = 1,2,4
""",
    "dimension": """
[dimension]
y = 0.375,0.625
grid_m = 10
r_min = 0.001953125
r_max = 0.0625
""",
    "bc": """
[system]
kind = cat
[bc]
y = 0.5,0.5
beta = 3
m = 10
horizon = 100000
""",
    "mapdist": """
[system]
kind = rotation
alpha = 0.25
[system2]
kind = rotation
alpha = 0.30
""",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recurlab",
        description="Recurrence, hitting, and perturbation experiments "
                    "for measure-preserving dynamics.",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", type=Path, help="sectioned key = value config file")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--samples", type=int, help="override run.samples")
        p.add_argument("--out", type=str, help="artifact directory (override run.out)")
        p.add_argument(
            "--threads", type=int,
            default=int(os.environ.get("RECURLAB_THREADS", "1")),
            help="worker count; affects scheduling only, never results",
        )
        p.add_argument(
            "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override any config key (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            text = Path(args.config).read_text()
        else:
            text = DEFAULT_CONFIGS[args.scenario]
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"run.seed={args.seed}")
        if args.samples is not None:
            overrides.append(f"run.samples={args.samples}")
        if args.out is not None:
            overrides.append(f"run.out={args.out}")
        overrides.append(f"run.threads={args.threads}")
        cfg = load_config(args.scenario, text, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_experiment(cfg)
    except Exception as exc:  # infeasible parameters, failed hard guarantees
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(manifest.to_bytes().decode("ascii"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
