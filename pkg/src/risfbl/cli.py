"""Command-line front end.

Subcommands ``snr-cdf``, ``rate-vs-n``, ``rate-vs-d`` write CSV curves;
``validate`` runs the release checks. Exit status: 0 success, 1 a failed
check, 2 a configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, curves, validation
from .config import ConfigError, ScenarioConfig, load

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _common(p):
    p.add_argument("--config", help="scenario file (INI sections: geometry, budget, ris, fbl, simulation)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--samples", type=int, help="Monte Carlo realizations (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes; results do not depend on it")
    p.add_argument("--n-elements", type=int, help="RIS elements N")
    p.add_argument("--direct-link", choices=("on", "off"), help="keep or block the direct path")
    p.add_argument("--apply-noise-figure", action="store_true",
                   help="include the receiver noise figure in rho")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="risfbl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("snr-cdf", help="empirical and matched-Gamma SNR CDFs")
    _common(p)
    p.add_argument("--modes", type=_csv_list(str), default=list(curves.DEFAULT_CDF_MODES),
                   help="comma list of perfect, unadjusted or bit counts (default perfect,1,2,3)")
    p.add_argument("--points", type=int, default=200)

    p = sub.add_parser("rate-vs-n", help="average rate against the number of elements")
    _common(p)
    p.add_argument("--n-list", type=_csv_list(int), default=list(curves.DEFAULT_N_LIST))
    p.add_argument("--modes", type=_csv_list(str), default=list(curves.DEFAULT_RATE_MODES))

    p = sub.add_parser("rate-vs-d", help="average rate against the RIS position")
    _common(p)
    p.add_argument("--d-grid", type=_csv_list(float), default=list(curves.DEFAULT_D_GRID))
    p.add_argument("--modes", type=_csv_list(str), default=["perfect", "2"])

    p = sub.add_parser("validate", help="run the release checks")
    _common(p)
    p.add_argument("--tamper-alpha", type=float, default=1.0,
                   help="scale the matched Gamma law before the KS check (negative control)")
    return parser


def _scenario(args) -> ScenarioConfig:
    sc = load(args.config) if args.config else ScenarioConfig()
    changes = {}
    for key in ("seed", "samples", "workers", "n_elements"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if args.direct_link is not None:
        changes["direct_link"] = args.direct_link == "on"
    if args.apply_noise_figure:
        changes["apply_noise_figure"] = True
    return sc.replace(**changes) if changes else sc


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        sc = _scenario(args)
        if args.command == "snr-cdf":
            out = curves.snr_cdf(sc, args.modes, args.points)
        elif args.command == "rate-vs-n":
            out = curves.rate_vs_n(sc, args.n_list, args.modes)
        elif args.command == "rate-vs-d":
            out = curves.rate_vs_d(sc, args.d_grid, args.modes,
                                   args.n_elements if args.n_elements else 4096)
        else:
            sizes = validation.Sizes.uniform(args.samples) if args.samples else validation.Sizes()
            checks = validation.run_all(sc, sizes, args.tamper_alpha)
            _emit(validation.render_report(checks, sc, sizes), args.out)
            if args.out:
                print("\n".join(validation.summary_lines(checks)))
            return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED
    except ConfigError as exc:
        print(f"risfbl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(out.to_csv(), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
