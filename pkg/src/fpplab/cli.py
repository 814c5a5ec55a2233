"""Command line front end: ``fpplab run | verify | beta1``."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

from .config import OUTPUT_SECTION, ConfigError, RunConfig, load_config
from .experiments import PlanError, ReplicationError, run_plan
from .suites import SUITES
from .theory import ConditionViolation, model_constants, require_conditions, tail_check

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_CONDITION = 3
EXIT_ENGINE = 4

OUT_ENV = "FPP_OUT_DIR"
TABLE_NAME = "table.csv"
SUMMARY_NAME = "summary.ini"


def resolve_out_dir(flag: str | None, cfg: RunConfig) -> str:
    """Flag, then config ``[run] out``, then ``$FPP_OUT_DIR``, then ``./fpp_out``."""
    return flag or cfg.out or os.environ.get(OUT_ENV) or "fpp_out"


def _constants_block(cfg: RunConfig) -> list[str]:
    return [f"{k} = {v!r}" for k, v in model_constants(cfg.model).as_items()]


def render_outputs(cfg: RunConfig, report) -> tuple[str, str]:
    digest = cfg.digest()
    header = [f"# seed = {cfg.seed}", f"# config_hash = {digest}"]
    header += [f"# constants.{k} = {v!r}" for k, v in report.constants.as_items()]
    table = "\n".join(header) + "\n" + report.to_csv()
    # the echoed config comes first so the summary itself is a valid config
    lines = [cfg.to_text(runtime=False).rstrip("\n"), "", f"[{OUTPUT_SECTION}]", f"config_hash = {digest}"]
    lines += [f"{k} = {v}" for k, v in report.summary_items()]
    return table, "\n".join(lines) + "\n"


def _write_atomic(out_dir: str, files: dict[str, str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, final in staged:
            for p in (tmp, final):
                if os.path.exists(p):
                    os.remove(p)
        raise


def cmd_run(args) -> int:
    cfg = load_config(args.config).with_overrides(args.seed, args.workers)
    out_dir = resolve_out_dir(args.out, cfg)
    report = run_plan(cfg.plan)
    table, summary = render_outputs(cfg, report)
    _write_atomic(out_dir, {TABLE_NAME: table, SUMMARY_NAME: summary})
    print("\n".join(_constants_block(cfg)))
    print(f"wrote {os.path.join(out_dir, TABLE_NAME)} and {os.path.join(out_dir, SUMMARY_NAME)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = SUITES[args.suite]()
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def cmd_beta1(args) -> int:
    cfg = load_config(args.config).with_overrides(args.seed)
    for line in require_conditions(cfg.model).lines():
        print(line)
    consts = model_constants(cfg.model)
    for k, v in consts.as_items():
        print(f"{k} = {v!r}")
    ok = True
    for m in (10, 20):
        tc = tail_check(cfg.model, consts.beta1, m, args.samples, cfg.seed)
        ok &= tc.passed
        print(f"tail check m={m}: frequency {tc.frequency!r} vs bound {tc.bound!r} "
              f"(+3 SE {3 * tc.se!r}), empirical beta {tc.empirical_beta!r}: "
              f"{'pass' if tc.passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpplab", description="First passage percolation laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment plan and write table + summary")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, help="overrides [run] seed")
    run.add_argument("--workers", type=int, help="worker threads (does not change results)")
    run.add_argument("--out", help=f"output directory (default: config, ${OUT_ENV}, ./fpp_out)")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run an exact verification suite")
    ver.add_argument("suite", choices=sorted(SUITES))
    ver.set_defaults(func=cmd_verify)

    b1 = sub.add_parser("beta1", help="print model constants and the Chernoff tail check")
    b1.add_argument("--config", required=True)
    b1.add_argument("--seed", type=int)
    b1.add_argument("--samples", type=int, default=10_000)
    b1.set_defaults(func=cmd_beta1)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConditionViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except (ConfigError, PlanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReplicationError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
