"""Command line interface.

    ccp detect   --input data.csv --t-train 120 --out report/
    ccp simulate --scenario 1b --reps 20 --eps-train 0.04,0.08 --out runs/
    ccp evaluate --records runs/ --q 0.05 --out tables/

Exit codes: 0 success, 2 input error, 3 fit failure, 4 internal
invariant violation.
"""

import argparse
import json
import logging
import os
import sys

from .errors import FitError, InputError, InvariantError
from .evaluation import RunRecord
from .pipeline import SIM_T_TRAIN, SIM_T_WASH, DetectConfig, detect, run_simulation
from .report import write_evaluation, write_report
from .series import load_csv
from .simgen import T_TOTAL, scenario_ids

logger = logging.getLogger("ccp")

_CONFIG_KEYS = {
    "t_train": int,
    "t_wash": int,
    "eps_train": float,
    "r_ensemble": int,
    "b_count": int,
    "nu": float,
    "kappa": float,
    "q": float,
    "seed": int,
    "statistic_exponent": float,
}


def _read_config_file(path):
    """Flat key-value file: one `key = value` per line, # comments."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}: line {i}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise InputError(f"{path}: line {i}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val.strip())
        except ValueError as exc:
            raise InputError(f"{path}: line {i}: bad value for {key}") from exc
    return values


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CCP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"CCP_THREADS must be an integer, got {env!r}") from exc
    return 1


def cmd_detect(args):
    settings = _read_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    if "t_train" not in settings:
        raise InputError("--t-train is required (flag or config file)")
    try:
        config = DetectConfig(**settings)
    except TypeError as exc:
        raise InputError(str(exc)) from exc
    series = load_csv(args.input)
    report = detect(series, config, threads=_threads(args))
    write_report(report, args.out)
    print(
        f"tau_hat={report.tau_hat} k={report.k:.6f} p={report.p:.4f} "
        f"block_length={report.block_length} n={report.hyperparams.n} "
        f"alpha={report.hyperparams.alpha:.4g} out={args.out}"
    )
    return 0


def _record_path(out_dir, scenario_id, rep, eps):
    return os.path.join(out_dir, f"{scenario_id}_rep{rep:04d}_eps{eps:g}.json")


def cmd_simulate(args):
    eps_values = []
    for tok in args.eps_train.split(","):
        tok = tok.strip()
        if tok:
            eps_values.append(float(tok))
    if not eps_values:
        raise InputError("--eps-train must list at least one value")
    os.makedirs(args.out, exist_ok=True)
    threads = _threads(args)
    done = 0
    skipped = 0
    for rep in range(args.reps):
        for eps in eps_values:
            path = _record_path(args.out, args.scenario, rep, eps)
            if os.path.exists(path):
                skipped += 1
                continue
            record = run_simulation(
                args.scenario,
                rep,
                eps,
                seed=args.seed,
                r_ensemble=args.r_ensemble,
                b_count=args.b_count,
                t_wash=args.t_wash,
                t_train=args.t_train,
                t_total=args.t_total,
                threads=threads,
            )
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")
            done += 1
            logger.info("wrote %s", path)
    print(f"completed {done} runs ({skipped} already present) in {args.out}")
    return 0


def _load_records(records_dir):
    if not os.path.isdir(records_dir):
        raise InputError(f"{records_dir} is not a directory")
    records = []
    for name in sorted(os.listdir(records_dir)):
        if not name.endswith(".json"):
            continue
        path = os.path.join(records_dir, name)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                records.append(RunRecord.from_json(fh.read()))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise InputError(f"cannot parse record {path}: {exc}") from exc
    if not records:
        raise InputError(f"no .json records found in {records_dir}")
    return records


def cmd_evaluate(args):
    records = _load_records(args.records)
    write_evaluation(records, args.q, args.out)
    print(f"evaluated {len(records)} records into {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ccp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="detect a change point in a CSV series")
    p_detect.add_argument("--input", required=True, help="CSV series, one row per time point")
    p_detect.add_argument("--out", required=True, help="output directory for the report")
    p_detect.add_argument("--config", help="flat key-value settings file (flags override)")
    p_detect.add_argument("--t-train", dest="t_train", type=int)
    p_detect.add_argument("--t-wash", dest="t_wash", type=int)
    p_detect.add_argument("--eps-train", dest="eps_train", type=float)
    p_detect.add_argument("--r-ensemble", dest="r_ensemble", type=int)
    p_detect.add_argument("--b-count", dest="b_count", type=int)
    p_detect.add_argument("--nu", type=float)
    p_detect.add_argument("--kappa", type=float)
    p_detect.add_argument("--q", type=float)
    p_detect.add_argument("--seed", type=int)
    p_detect.add_argument("--statistic-exponent", dest="statistic_exponent", type=float)
    p_detect.add_argument("--threads", type=int)
    p_detect.set_defaults(func=cmd_detect)

    p_sim = sub.add_parser("simulate", help="run the simulation protocol for one scenario")
    p_sim.add_argument("--scenario", required=True, choices=scenario_ids())
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--eps-train", dest="eps_train", required=True, help="comma-separated list")
    p_sim.add_argument("--seed", type=int, default=7)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--r-ensemble", dest="r_ensemble", type=int, default=100)
    p_sim.add_argument("--b-count", dest="b_count", type=int, default=240)
    p_sim.add_argument("--t-wash", dest="t_wash", type=int, default=SIM_T_WASH)
    p_sim.add_argument("--t-train", dest="t_train", type=int, default=SIM_T_TRAIN)
    p_sim.add_argument("--t-total", dest="t_total", type=int, default=T_TOTAL)
    p_sim.add_argument("--threads", type=int)
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="summarize simulation records into tables")
    p_eval.add_argument("--records", required=True, help="directory of run record JSON files")
    p_eval.add_argument("--q", type=float, default=0.05)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
