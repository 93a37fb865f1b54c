"""``study`` command line entry point.

Exit codes: 0 on success, 1 on bad arguments, 2 on solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .cases import CASES, get_case
from .errors import ContactError, InvalidArgumentError
from .study import StudyConfig, format_report, report_header, run_study


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_levels(text: str) -> tuple:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B or a single level, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="study", description="Penalty contact convergence studies.")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    p.add_argument("--mode", choices=("h", "eps"), default="h")
    p.add_argument("--levels", type=parse_levels, default=(3, 6),
                   help="level range A..B (level L has 2**L cells per side)")
    p.add_argument("--theta", type=float, default=1.0, help="eps = C * h**theta (h mode)")
    p.add_argument("--eps-scale", type=float, default=None,
                   help="C in eps = C h^theta (h mode, default 1) or eps_0 (eps mode, default 0.1)")
    p.add_argument("--eps-steps", type=int, default=8, help="eps mode: eps_0 * 2**-k for k = 0..K")
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--ref-offset", type=int, default=2)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.mode == "eps":
            mode = "eps_study"
        else:
            mode = "patch" if args.case == "patch" else "h_study"
        scale = args.eps_scale if args.eps_scale is not None else (0.1 if args.mode == "eps" else 1.0)
        cfg = StudyConfig(case=args.case, levels=args.levels, theta=args.theta, eps_scale=scale,
                          ref_offset=args.ref_offset, nu=args.nu, out=args.out, mode=mode,
                          eps_steps=args.eps_steps)
        case = get_case(cfg.case)
    except InvalidArgumentError as exc:
        print(f"study: error: {exc}", file=sys.stderr)
        return 1
    try:
        records = run_study(cfg)
    except InvalidArgumentError as exc:
        print(f"study: error: {exc}", file=sys.stderr)
        return 1
    except ContactError as exc:
        print(f"study: solver failure: {exc}", file=sys.stderr)
        return 2
    text = format_report(records, args.format, report_header(cfg, case) if args.format == "md" else None)
    if args.out is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(args.out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"study: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
