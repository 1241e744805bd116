"""Command-line pipeline: collect -> train -> simulate -> compare.

Every command writes its outputs plus a ``manifest.json`` into ``--out``.
Exit codes: 0 success, 1 usage error, 2 data/config error, 3 simulation
abort.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, elm, plots, storage
from .config import load_config, scenario_identity
from .errors import ConfigError, InvalidDataError, InvalidInputError, SimulationAbort
from .sim import collect_training_data, compute_metrics, run_closed_loop, split_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ABORT = 0, 1, 2, 3
MPC_ONLY, COMPENSATED = "mpc_only", "compensated"

log = logging.getLogger("elmpc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _landmarks(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="elmpc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_help):
        p.add_argument("--config", type=Path, help="YAML config merged over the packaged defaults")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, required=True, help=out_help)

    p = sub.add_parser("collect", help="run MPC-only scenarios and write the training dataset")
    common(p, "output directory (dataset.csv, manifest.json)")

    p = sub.add_parser("train", help="fit the error estimator on a dataset")
    p.add_argument("dataset", type=Path)
    common(p, "output directory (model.npz, metrics.json, manifest.json)")

    p = sub.add_parser("simulate", help="run the configured scenario closed loop")
    common(p, "output directory (log.csv, log.npz, metrics.json, manifest.json)")
    p.add_argument("--mode", choices=(MPC_ONLY, COMPENSATED), default=MPC_ONLY)
    p.add_argument("--model", type=Path, help="trained estimator (required for --mode compensated)")
    p.add_argument("--landmarks", type=_landmarks, help="comma-separated X positions, e.g. 80,100")

    p = sub.add_parser("compare", help="compare a baseline log with a candidate log")
    p.add_argument("baseline", type=Path, help="baseline log.csv (with manifest.json beside it)")
    p.add_argument("candidate", type=Path, help="candidate log.csv (with manifest.json beside it)")
    p.add_argument("--out", type=Path, required=True, help="output directory for report and plots")
    p.add_argument("--landmarks", type=_landmarks)
    return parser


def _manifest(args, command, config_seed, inputs, outputs, **extra):
    m = {
        "command": command,
        "tool_version": __version__,
        "config_paths": [str(args.config)] if getattr(args, "config", None) else [],
        "seeds": {"seed": config_seed},
        "output_dir": str(args.out),
        "inputs": {str(p): storage.sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: storage.sha256_file(p) for p in outputs},
    }
    if getattr(args, "config", None):
        m["inputs"][str(args.config)] = storage.sha256_file(args.config)
    m.update(extra)
    storage.write_json(args.out / "manifest.json", m)


def cmd_collect(args):
    cfg = load_config(args.config, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    data, logs = collect_training_data(cfg.collect_scenarios, cfg.mpc, cfg.vehicle, cfg.n_samples, cfg.plant_dt)
    path = args.out / "dataset.csv"
    storage.write_dataset_csv(path, data)
    per = {slog.scenario: len(slog) for slog in logs}
    _manifest(args, "collect", cfg.seed, [], [path], samples=len(data), per_scenario=per)
    print(f"wrote {len(data)} samples to {path}")
    for name, n in per.items():
        print(f"  {name}: {n}")
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args.config, args.seed)
    data = storage.read_dataset_csv(args.dataset)
    if len(data) <= cfg.n_test:
        raise InvalidDataError(f"{args.dataset}: {len(data)} samples, need more than n_test={cfg.n_test}")
    train, test = split_dataset(data, cfg.n_test, cfg.seed)
    model = elm.train(elm.init_elm(cfg.train), train, cfg.train.C)
    args.out.mkdir(parents=True, exist_ok=True)
    model_path = args.out / "model.npz"
    elm.save_model(model, model_path)
    report = {"n_train": len(train), "n_test": len(test), "test": elm.evaluate(model, test),
              "train": elm.evaluate(model, train)}
    metrics_path = args.out / "metrics.json"
    storage.write_json(metrics_path, report)
    _manifest(args, "train", cfg.seed, [args.dataset], [model_path, metrics_path])
    t = report["test"]
    print(f"split: {len(train)} train / {len(test)} test")
    print(f"test rmse={t['rmse']:.6g} m  max_abs_error={t['max_abs_error']:.6g} m  r2={t['r2']:.6g}")
    return EXIT_OK


def cmd_simulate(args):
    if args.mode == COMPENSATED and args.model is None:
        raise UsageError("--mode compensated requires --model")
    cfg = load_config(args.config, args.seed)
    landmarks = args.landmarks if args.landmarks is not None else cfg.landmarks
    model = pid = None
    inputs = []
    if args.mode == COMPENSATED:
        try:
            model = elm.load_model(args.model)
        except OSError as exc:
            raise InvalidDataError(f"{args.model}: cannot read model: {exc.strerror or exc}") from None
        pid = cfg.pid
        inputs.append(args.model)
    scenario = cfg.simulate_scenario
    args.out.mkdir(parents=True, exist_ok=True)
    abort = None
    try:
        slog = run_closed_loop(scenario, cfg.mpc, cfg.vehicle, pid, model, cfg.plant_dt)
    except SimulationAbort as exc:
        abort, slog = str(exc), exc.log
    csv_path, npz_path = args.out / "log.csv", args.out / "log.npz"
    storage.write_log_csv(csv_path, slog)
    storage.write_log_npz(npz_path, slog)
    outputs = [csv_path, npz_path]
    identity = scenario_identity(scenario, cfg.vehicle, cfg.plant_dt)
    if len(slog):
        metrics = compute_metrics(slog, landmarks=landmarks).as_dict()
        metrics_path = args.out / "metrics.json"
        storage.write_json(metrics_path, metrics)
        outputs.append(metrics_path)
        _print_metrics({args.mode: metrics})
    _manifest(args, "simulate", cfg.seed, inputs, outputs, mode=args.mode, scenario=identity,
              scenario_hash=storage.canonical_hash(identity), aborted=abort)
    if abort:
        print(f"simulation aborted: {abort}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _read_run(log_path):
    manifest_path = log_path.parent / "manifest.json"
    if not manifest_path.exists():
        raise InvalidDataError(f"{log_path}: no manifest.json beside the log; cannot verify scenario identity")
    manifest = storage.read_json(manifest_path)
    if "scenario_hash" not in manifest:
        raise InvalidDataError(f"{manifest_path}: not a simulate manifest")
    slog = storage.read_log_csv(log_path, manifest["scenario"]["name"], manifest.get("mode", ""))
    return slog, manifest


def cmd_compare(args):
    base, base_m = _read_run(args.baseline)
    cand, cand_m = _read_run(args.candidate)
    if base_m["scenario_hash"] != cand_m["scenario_hash"]:
        raise InvalidDataError(
            "logs come from different scenarios (scenario hashes "
            f"{base_m['scenario_hash'][:12]} vs {cand_m['scenario_hash'][:12]}); refusing to compare")
    landmarks = args.landmarks if args.landmarks is not None else tuple(_default_landmarks())
    b = compute_metrics(base, landmarks=landmarks)
    c = compute_metrics(cand, baseline=base, landmarks=landmarks)
    report = {"baseline": b.as_dict(), "candidate": c.as_dict(), "reduction_percent": c.reduction,
              "scenario_hash": base_m["scenario_hash"]}
    args.out.mkdir(parents=True, exist_ok=True)
    report_path = args.out / "report.json"
    storage.write_json(report_path, report)
    table = plots.comparison_table(base, cand)
    csv_path = args.out / "comparison.csv"
    plots.write_comparison_csv(csv_path, table)
    figures = plots.write_plots(args.out, table)
    _print_metrics({"baseline": b.as_dict(), "candidate": c.as_dict()}, c.reduction)
    _manifest(args, "compare", None, [args.baseline, args.candidate], [report_path, csv_path, *figures],
              scenario_hash=base_m["scenario_hash"])
    return EXIT_OK


def _default_landmarks():
    return load_config().landmarks


def _print_metrics(runs, reduction=None):
    keys = ("rms_lateral", "max_lateral", "rms_heading", "max_heading", "max_abs_u")
    names = list(runs)
    print(f"{'metric':<16}" + "".join(f"{n:>16}" for n in names) + ("   reduction %" if reduction else ""))
    for k in keys:
        row = f"{k:<16}" + "".join(f"{runs[n][k]:>16.6g}" for n in names)
        if reduction:
            row += f"{reduction[k]:>14.2f}" if reduction[k] is not None else f"{'n/a':>14}"
        print(row)
    for xl in runs[names[0]]["landmarks"]:
        vals = [runs[n]["landmarks"][xl] for n in names]
        row = f"{'lat@X=' + xl:<16}" + "".join(f"{v:>16.6g}" if v is not None else f"{'absent':>16}" for v in vals)
        if reduction:
            r = reduction.get(f"landmark_{float(xl):g}")
            row += f"{r:>14.2f}" if r is not None else f"{'n/a':>14}"
        print(row)


COMMANDS = {"collect": cmd_collect, "train": cmd_train, "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"elmpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InvalidDataError, InvalidInputError) as exc:
        print(f"elmpc: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SimulationAbort as exc:
        print(f"elmpc: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
