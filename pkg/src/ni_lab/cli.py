"""Command line entry point: ``ni-lab regime|resonance|inflate|verify``."""

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from ._validation import ConfigurationError, DomainError, LatticeRangeError, OracleBudgetError, SmallnessError
from .harness import ExperimentConfig, run_inflation, verify_lemma_suite
from .regimes import (
    LOSS_SCHEMES,
    NI_INFINITE_LOSS,
    NI_SCHEMES,
    RegimePoint,
    as_number,
    certificate_for,
    classify,
    region_grid,
)
from .resonance import classify_Ed, resonant_1d, resonant_family

_ERRORS = (ConfigurationError, DomainError, LatticeRangeError, OracleBudgetError, SmallnessError)


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if hasattr(o, "tolist"):
        return o.tolist()
    return str(o)


def _emit(obj):
    print(json.dumps(obj, indent=2, default=_default))


def _grid(spec):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"a range is START:STOP:NUM, got {spec!r}")
    start, stop, num = parts
    start, stop, num = as_number(start), as_number(stop), int(num)
    if num < 1:
        raise ConfigurationError("grid size must be positive")
    if num == 1:
        return [start]
    return [start + i * (stop - start) / (num - 1) for i in range(num)]


def cmd_regime(args):
    if args.grid:
        if not (args.alpha_range and args.s_range):
            raise ConfigurationError("--grid needs --alpha-range and --s-range")
        grid = region_grid(_grid(args.alpha_range), _grid(args.s_range), args.d, args.gamma, args.index,
                           args.space, certify=not args.no_cert)
        text = grid.to_csv()
        if args.out:
            out = Path(args.out)
            out.write_text(text)
            out.with_suffix(".breakpoints.json").write_text(json.dumps(grid.breakpoints, default=_default, indent=2))
        else:
            sys.stdout.write(text)
        return 0
    if args.alpha is None or args.s is None:
        raise ConfigurationError("a single point needs --alpha and --s")
    pt = RegimePoint(args.d, args.gamma, args.alpha, args.index, args.s, args.space)
    verdict = classify(pt)
    out = verdict.to_dict()
    cert = None
    names = LOSS_SCHEMES if verdict.verdict == NI_INFINITE_LOSS else NI_SCHEMES
    for sch in names:
        if verdict.schemes.get(sch):
            got = certificate_for(pt, sch)
            if got:
                cert = got.to_dict()
                break
    out["certificate"] = cert
    _emit(out)
    return 0


def cmd_resonance(args):
    if args.classify:
        v = classify_Ed(args.d, args.alpha)
        _emit({"d": v.d, "alpha": v.alpha, "member": v.member, "margin": v.margin, "reason": v.reason,
               "witness": v.witness.to_dict() if v.witness is not None else None, "certificate": v.certificate})
        return 0
    if args.d == 1:
        tri = resonant_1d(args.alpha, args.a_param, args.N)
    else:
        if args.theta is None:
            raise ConfigurationError("--theta is required for d >= 2")
        tri = resonant_family(args.d, args.alpha, args.theta, args.sign, args.N)
    _emit(tri.to_dict())
    return 0


def _load_config(args):
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    overrides = {
        "sweep": [int(x) for x in args.sweep.split(",")] if args.sweep else None,
        "K": args.K,
        "m": args.m,
        "n_t": args.nt,
        "mu": args.mu,
        "seed": args.seed,
        "out": args.out,
        "T0": args.T0,
        "sigma": args.sigma,
        "scheme": args.scheme,
    }
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    if args.allow_d2:
        cfg["allow_d2"] = True
    if "nt" in cfg and "n_t" in cfg:
        cfg.pop("nt")
    if "point" not in cfg:
        raise ConfigurationError("the config needs a 'point' entry")
    return ExperimentConfig.from_dict(cfg)


def cmd_inflate(args):
    config = _load_config(args)
    run = run_inflation(config)
    if not config.out:
        sys.stdout.write(run.to_csv())
    _emit({"certificate": run.certificate.to_dict(), "summary": run.summary})
    return 0


def cmd_verify(args):
    report = verify_lemma_suite(samples=args.samples, seed=args.seed)
    _emit(report.to_dict())
    return 0 if report.passed else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="ni-lab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    rg = sub.add_parser("regime", help="classify a parameter point or a grid of (alpha, s)")
    rg.add_argument("--d", type=int, required=True)
    rg.add_argument("--gamma", required=True)
    rg.add_argument("--alpha")
    rg.add_argument("--index", required=True, help="p for FL, q for MOD; 'inf' allowed")
    rg.add_argument("--s")
    rg.add_argument("--space", choices=("FL", "MOD"), default="FL")
    rg.add_argument("--grid", action="store_true")
    rg.add_argument("--alpha-range", metavar="START:STOP:NUM")
    rg.add_argument("--s-range", metavar="START:STOP:NUM", help="use --s-range=-1:0:5 for negative starts")
    rg.add_argument("--no-cert", action="store_true")
    rg.add_argument("--out")
    rg.set_defaults(func=cmd_regime)

    rs = sub.add_parser("resonance", help="build a resonant triple or classify an exponent")
    rs.add_argument("--d", type=int, required=True)
    rs.add_argument("--alpha", type=float, required=True)
    rs.add_argument("--theta", type=float)
    rs.add_argument("--sign", type=int, default=1, choices=(1, -1))
    rs.add_argument("--N", type=float, default=1.0)
    rs.add_argument("--a-param", type=float, default=0.5)
    rs.add_argument("--classify", action="store_true")
    rs.set_defaults(func=cmd_resonance)

    inf = sub.add_parser("inflate", help="run an inflation sweep from a JSON config")
    inf.add_argument("--config")
    inf.add_argument("--sweep", help="comma separated N values")
    inf.add_argument("--K", type=int)
    inf.add_argument("--m", type=int)
    inf.add_argument("--nt", type=int)
    inf.add_argument("--mu", type=int, choices=(1, -1))
    inf.add_argument("--T0", type=float)
    inf.add_argument("--sigma", choices=("collinear", "resonant"))
    inf.add_argument("--scheme")
    inf.add_argument("--seed", type=int)
    inf.add_argument("--out")
    inf.add_argument("--allow-d2", action="store_true")
    inf.set_defaults(func=cmd_inflate)

    vf = sub.add_parser("verify", help="run the standalone lemma checks")
    vf.add_argument("--samples", type=int, default=100_000)
    vf.add_argument("--seed", type=int, default=0)
    vf.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
