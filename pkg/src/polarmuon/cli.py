"""Command-line interface.

Subcommands:
  run <config>                          execute one experiment config
  sweep <config> --axis A --values ...  one run per axis value
  verify <scope> [<scope> ...]          certification suites
  flops <shape spec>                    cost-model evaluation, e.g.
                                        "m=4096,n=4096,ell=256,q=5,h=1"

Exit codes: 0 success, 1 check failure, 2 config error, 3 numerical abort.
Worker count is taken from the POLARMUON_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import sys

from . import config as config_mod, runner, suites
from .errors import ConfigError, PolarmuonError
from .verify import FlopModel, flop_counts

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ABORT = 3


def _cmd_run(args) -> int:
    cfg = config_mod.load(args.config)
    report = runner.run_experiment(cfg)
    print(
        f"run: {len(cfg.seeds)} seed(s), K={cfg.optimizer.K}, "
        f"mean min grad norm = {report.mean_min_grad_norm:.6g} "
        f"(+/- {report.std_min_grad_norm:.3g}), "
        f"cumulative FLOPs per seed = {report.cum_flops}"
    )
    if report.aborted:
        print("run aborted on non-finite objective; partial CSV retained", file=sys.stderr)
        return EXIT_NUMERICAL_ABORT
    return EXIT_OK


def _parse_values(raw: list[str]):
    vals = []
    for chunk in raw:
        for v in chunk.split(","):
            v = v.strip()
            if v:
                vals.append(float(v) if "." in v else int(v))
    if not vals:
        raise ConfigError("sweep: no axis values given")
    return vals


def _cmd_sweep(args) -> int:
    cfg = config_mod.load(args.config)
    cells = runner.sweep(cfg, args.axis, _parse_values(args.values))
    failed = False
    for cell in cells:
        if cell.report is None:
            print(f"{args.axis}={cell.value}: FAILED ({cell.error})")
            failed = True
        else:
            flag = " [aborted]" if cell.report.aborted else ""
            if cell.report.aborted:
                failed = True
            print(
                f"{args.axis}={cell.value}: mean min grad norm = "
                f"{cell.report.mean_min_grad_norm:.6g}{flag}"
            )
    return EXIT_NUMERICAL_ABORT if failed else EXIT_OK


def _cmd_verify(args) -> int:
    status, results = suites.verify_suite(args.scopes, args.output_dir)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.scope}: {r.name} -- {r.detail}")
    return EXIT_OK if status == 0 else EXIT_CHECK_FAILURE


def _parse_shape_spec(spec: str) -> FlopModel:
    fields = {}
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"flops: expected key=value, got {chunk!r}")
        key, val = chunk.split("=", 1)
        try:
            fields[key.strip()] = int(val)
        except ValueError as e:
            raise ConfigError(f"flops: {key}: {e}") from e
    try:
        return FlopModel(
            m=fields.pop("m"),
            n=fields.pop("n"),
            ell=fields.pop("ell"),
            q=fields.pop("q"),
            h=fields.pop("h", 0),
        )
    except KeyError as e:
        raise ConfigError(f"flops: missing field {e}") from e


def _cmd_flops(args) -> int:
    model = _parse_shape_spec(args.shape)
    full, rand, ratio = flop_counts(model)
    print(f"full-space polar FLOPs:  {full}")
    print(f"randomized polar FLOPs:  {rand}")
    print(f"reduction ratio:         {ratio:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarmuon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one config axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True, choices=runner.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, nargs="+")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run certification suites")
    p_verify.add_argument("scopes", nargs="+", choices=sorted(suites.SCOPES))
    p_verify.add_argument("--output-dir", default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_flops = sub.add_parser("flops", help="evaluate the FLOP cost model")
    p_flops.add_argument("shape", help='e.g. "m=4096,n=4096,ell=256,q=5,h=1"')
    p_flops.set_defaults(func=_cmd_flops)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except PolarmuonError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
