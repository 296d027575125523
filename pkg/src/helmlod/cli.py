"""``helmlod`` command line: one subcommand per experiment.

Settings are layered: experiment preset for the chosen ``--scale``, then the
``--config`` file, then explicit flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from typing import Optional, Sequence

from .experiments import (
    EXPERIMENTS,
    SCALES,
    ConfigError,
    format_cell,
    parse_value,
    preset,
    read_config_file,
    run_experiment,
)

# flag name -> config field
_FLAGS = {
    "problem": "problem",
    "kappa_exp": "kappa_exp",
    "H": "H_exps",
    "h": "h_exp",
    "ell": "ell",
    "ell_list": "ell_list",
    "sign": "sign",
    "constraint_mode": "constraint_mode",
    "corrector": "corrector",
    "q": "q",
    "delta": "delta",
    "s": "s",
    "s_list": "s_list",
    "s_ref": "s_ref",
    "N": "N_list",
    "N_ref": "N_ref",
    "R": "R",
    "kinds": "kinds",
    "solver": "solver",
    "skip": "skip",
}


def _global_options(defaults: bool) -> argparse.ArgumentParser:
    # subparsers repeat the global flags with suppressed defaults so they may
    # appear on either side of the subcommand
    sup = {} if defaults else {"default": argparse.SUPPRESS}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, **({"default": None} if defaults else sup))
    p.add_argument("--out-dir", **({"default": None} if defaults else sup))
    p.add_argument("--scale", choices=SCALES, **({"default": None} if defaults else sup),
                   help="desk (default) or paper resolution presets")
    p.add_argument("--config", metavar="FILE", **({"default": None} if defaults else sup),
                   help="plain-text key=value file")
    p.add_argument("-v", "--verbose", action="count", **({"default": 0} if defaults else sup))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmlod",
        description="Multiscale and quasi-Monte Carlo experiments for the Helmholtz equation.",
        parents=[_global_options(True)],
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    helps = {
        "solve": "one multiscale solve with errors against the fine reference",
        "convergence-h": "errors of the multiscale and coarse FEM solutions over coarse widths H",
        "convergence-ell": "error versus oversampling layers at fixed H",
        "boundary-correction": "A,V error with and without the boundary-corrected basis",
        "qmc-rate": "expectation error versus number of Sobol / shifted-lattice points",
        "truncation-rate": "expectation error versus truncation dimension s",
        "mc-vs-qmc": "qMC and plain Monte Carlo error versus N",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(
            name, help=helps[name], parents=[_global_options(False)], allow_abbrev=False
        )
        sp.add_argument("--problem")
        sp.add_argument("--kappa-exp", help="wavenumber exponent: kappa = 2^value")
        sp.add_argument("--H", help="coarse exponent(s), comma separated: H = 2^-value")
        sp.add_argument("--h", help="fine exponent: h = 2^-value")
        sp.add_argument("--ell", help="layers: integer, 'global', 'log' or 'random'")
        sp.add_argument("--ell-list", help="comma-separated layer counts (convergence-ell)")
        sp.add_argument("--no-boundary-correction", action="store_true")
        sp.add_argument("--sign", choices=("plus", "minus"))
        sp.add_argument("--constraint-mode", choices=("one-one", "one-zero"))
        sp.add_argument("--corrector", choices=("split", "complex"))
        sp.add_argument("--q", help="decay exponent(s) of the random family")
        sp.add_argument("--delta")
        sp.add_argument("--s", help="truncation dimension")
        sp.add_argument("--s-list")
        sp.add_argument("--s-ref")
        sp.add_argument("--N", help="comma-separated point counts")
        sp.add_argument("--N-ref")
        sp.add_argument("--R", help="number of random shifts / MC replicates")
        sp.add_argument("--kinds", help="point-set kinds among sobol, lattice, mc")
        sp.add_argument("--solver", choices=("lod", "fem"))
        sp.add_argument("--skip", help="leading Sobol points to drop")
    return parser


def config_from_args(args: argparse.Namespace):
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    scale = args.scale or values.pop("scale", None) or "desk"
    values.pop("scale", None)
    problem = getattr(args, "problem", None) or values.get("problem")
    cfg = preset(args.experiment, scale, problem)
    for flag, fld in _FLAGS.items():
        raw = getattr(args, flag, None)
        if raw is not None:
            values[fld] = parse_value(fld, str(raw))
    if getattr(args, "no_boundary_correction", False):
        values["boundary_corrected"] = False
    if args.seed is not None:
        values["seed"] = args.seed
    if args.out_dir is not None:
        values["out_dir"] = args.out_dir
    values.pop("experiment", None)
    return cfg.replace(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg.validate()
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        result = run_experiment(cfg, validate=False)
    except ConfigError as exc:
        parser.error(str(exc))
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, value in result.summary.items():
        print(f"{key} = {format_cell(value)}")
    for stem in result.tables:
        print(f"wrote {cfg.out_dir}/{stem}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
