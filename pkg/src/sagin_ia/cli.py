"""Command-line entry point: validate, simulate, dof, sweep, verify."""

import argparse
import json
import logging
import os
import sys

from . import dof, harness
from .channel import GAUSSIAN, FadingParams
from .config import SystemConfig, parse_csi, validate
from .schemes.common import InfeasibleScheme

log = logging.getLogger("sagin_ia")

LOG_ENV = "SAGIN_IA_LOG_LEVEL"

# Acceptance-level tolerances for a run to count as clean.
INTERFERENCE_TOL = 1e-8
RECOVERY_TOL = 1e-6


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(path):
    cfg = SystemConfig.load(path)
    report = validate(cfg)
    for w in report.warnings:
        log.warning(w)
    if not report.ok:
        raise ValueError("; ".join(report.errors))
    return cfg


def _fading(name):
    return GAUSSIAN if name == "gaussian" else FadingParams()


def _violations(report):
    agg = report.aggregate
    bad = []
    if not agg:
        return bad
    if agg["max_interference_residual"] > INTERFERENCE_TOL:
        bad.append(f"interference residual {agg['max_interference_residual']:.3e}")
    if agg["max_recovery_err"] > RECOVERY_TOL:
        bad.append(f"recovery error {agg['max_recovery_err']:.3e}")
    return bad


def cmd_validate(args):
    cfg = SystemConfig.load(args.config)
    report = validate(cfg)
    print(json.dumps({"ok": report.ok, "errors": report.errors, "warnings": report.warnings},
                     indent=2))
    return 0 if report.ok else 1


def cmd_simulate(args):
    cfg = _load(args.config)
    csi = parse_csi(args.csi) if args.csi else None
    report = harness.run_experiment(cfg, args.scheme, args.trials, fading=_fading(args.fading),
                                    csi=csi, workers=args.workers)
    text = report.to_json(include_timing=args.timing)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    bad = _violations(report)
    for b in bad:
        log.error(b)
    return 1 if bad else 0


def cmd_dof(args):
    scheme, point = dof.select_scheme(parse_csi(args.csi), args.ms, args.kd, args.n)
    print(json.dumps({
        "scheme": scheme,
        "regime": point.regime,
        "dof": str(point.dof),
        "dof_float": float(point.dof),
        "l": dof.ris_elements(scheme, args.kd, args.n),
    }, indent=2))
    return 0


def cmd_sweep(args):
    text = harness.figure_data(args.figure)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args):
    cfg = _load(args.config)
    schemes = [args.scheme] if args.scheme else list(harness.SCHEMES)
    out, bad = {}, []
    for scheme in schemes:
        try:
            report = harness.run_experiment(cfg, scheme, 1, fading=_fading(args.fading))
        except InfeasibleScheme as exc:
            out[scheme] = {"skipped": exc.to_dict()}
            continue
        agg = report.aggregate
        out[scheme] = {k: agg[k] for k in ("max_interference_residual", "max_ris_max_residual",
                                           "max_recovery_err")}
        bad += [f"{scheme}: {v}" for v in _violations(report)]
    print(json.dumps({"ok": not bad, "violations": bad, "schemes": out}, indent=2, sort_keys=True))
    return 1 if bad else 0


def build_parser():
    p = argparse.ArgumentParser(prog="sagin-ia", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a config file")
    s.add_argument("config")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="Monte-Carlo trials of one scheme")
    s.add_argument("--scheme", required=True, choices=harness.SCHEMES)
    s.add_argument("--config", required=True)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--fading", choices=("default", "gaussian"), default="default")
    s.add_argument("--csi", choices=("none", "inst", "moderate", "delayed"))
    s.add_argument("--timing", action="store_true", help="include wall time in the report")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("dof", help="closed-form sum DoF")
    s.add_argument("--csi", required=True, choices=("none", "inst", "moderate", "delayed"))
    s.add_argument("--kd", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--ms", type=int, required=True)
    s.set_defaults(func=cmd_dof)

    s = sub.add_parser("sweep", help="figure data as CSV")
    s.add_argument("--figure", required=True, choices=harness.FIGURES)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="single-trial residual check")
    s.add_argument("--config", required=True)
    s.add_argument("--scheme", choices=harness.SCHEMES)
    s.add_argument("--fading", choices=("default", "gaussian"), default="default")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleScheme as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": "invalid-input", "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
