"""Command-line front end.

Exit codes: 0 success, 1 config error, 2 check/verdict failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import experiments as ex
from .model import GaussianLocation, SparseBernoulli, SystemConfig

log = logging.getLogger("otaest")

SEED_ENV = "OTAEST_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--family", choices=("gaussian", "bernoulli", "sparse"))
    common.add_argument("--sigma-sq", type=float)
    common.add_argument("--B", type=float)
    common.add_argument("--m", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--P", type=float)
    common.add_argument("--sigma0-sq", type=float)
    common.add_argument("--epsilon", type=float, action="append",
                        help="privacy budget in nats; repeat for several")
    common.add_argument("--sweep-n", type=int, nargs="+")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="otaest", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("risk", parents=[common], help="closed-form risk with Monte Carlo check")
    sub.add_parser("privacy", parents=[common], help="MI / CMI bounds and exact values")
    verify = sub.add_parser("verify", parents=[common], help="brute-force oracle suite")
    verify.add_argument("--alpha-scale", type=float, default=1.0,
                        help="multiply analytic alpha (negative control)")
    sub.add_parser("scaling", parents=[common], help="robust risk vs n with log-log slope")
    sub.add_parser("calibrate", parents=[common], help="local noise variance per epsilon")
    return p


def build_config(args) -> ex.ExperimentConfig:
    """File config (if any) overridden by flags; seed: flag > env > file > 0."""
    if args.config:
        cfg = ex.load_config(args.config)
    else:
        family = args.family or "gaussian"
        raw = {"model": {"family": family}, "system": {"n": args.n or 10, "d": args.d or 2}}
        if family == "sparse":
            raw["model"]["m"] = args.m if args.m is not None else 1
        cfg = ex.config_from_dict(raw)

    model = cfg.model
    if args.family and args.family != model.family:
        raise ex.ConfigError("model.family", "flag conflicts with config file")
    if isinstance(model, GaussianLocation) and (args.sigma_sq is not None or args.B is not None):
        model = GaussianLocation(args.sigma_sq if args.sigma_sq is not None else model.sigma_sq,
                                 args.B if args.B is not None else model.B)
    if isinstance(model, SparseBernoulli) and args.m is not None:
        model = SparseBernoulli(args.m)

    s = cfg.system
    try:
        system = SystemConfig(
            n=args.n or s.n, d=args.d or s.d,
            P=args.P if args.P is not None else s.P,
            sigma0_sq=args.sigma0_sq if args.sigma0_sq is not None else s.sigma0_sq,
        )
    except ValueError as exc:
        raise ex.ConfigError("system", str(exc)) from exc

    seed = cfg.seed
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ex.ConfigError(SEED_ENV, "must be an integer") from exc
    if args.seed is not None:
        seed = args.seed

    epsilons = args.epsilon if args.epsilon else cfg.epsilons
    scheme = "robust" if args.epsilon else cfg.scheme
    return ex.ExperimentConfig(
        model=model,
        system=replace(system, master_seed=seed),
        scheme=scheme,
        epsilons=list(epsilons),
        sweep_n=args.sweep_n or cfg.sweep_n,
        trials=args.trials if args.trials is not None else cfg.trials,
        seed=seed,
        out=args.out or cfg.out,
        fmt=args.format or cfg.fmt,
        workers=args.workers or cfg.workers,
    )


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
    except ex.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO

    status = EXIT_OK
    try:
        if args.command == "risk":
            rows = ex.run_risk(cfg)
            bad = ex.risk_failures(rows)
            for r in bad:
                log.error("Monte Carlo disagrees with closed form at n=%s epsilon=%s", r["n"], r["epsilon"])
            status = EXIT_CHECK if bad else EXIT_OK
            text = ex.render(rows, cfg.fmt)
        elif args.command == "privacy":
            rows = ex.run_privacy(cfg)
            text = ex.render(rows, cfg.fmt)
        elif args.command == "calibrate":
            text = ex.render(ex.run_calibrate(cfg), cfg.fmt)
        elif args.command == "scaling":
            report = ex.run_scaling(cfg)
            status = EXIT_CHECK if ex.risk_failures(report.rows) else EXIT_OK
            text = ex.render(report.rows, cfg.fmt, report.footer, ex.scaling_summary(report))
        else:
            rows = ex.run_verify(args.alpha_scale, cfg.seed)
            status = EXIT_OK if all(r["passed"] for r in rows) else EXIT_CHECK
            text = ex.render(rows, cfg.fmt, columns=["check", "passed", "gap", "tolerance", "note"])
    except ex.VerdictFailure as exc:
        log.error("check failed: %s", exc)
        return EXIT_CHECK
    except (ex.ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG

    try:
        _emit(text, cfg.out)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
