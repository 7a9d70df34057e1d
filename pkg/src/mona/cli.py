"""Command-line entry point: ``mona run|bench|check|inspect``.

Exit codes: 0 success, 1 validation failure, 2 check failure, 3 I/O failure.
Outputs go under ``$MONA_OUTPUT_ROOT`` when set, else the config's
``output_dir``, in a subdirectory named after the experiment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, checkpoint, suite
from .analysis import FAIL, PASS, CheckResult
from .config import ExperimentConfig, OptimizerBlock, load_config
from .optimizers import Optimizer, ParamGroup, ParamKind
from .records import LemmaTracker, RunRecord, format_value, records_to_csv, summarize_traces
from .orthogonalize import NsConfig
from .toynet import DIVERGENCE_LOSS, final_eval_loss, train_with_state

EXIT_OK, EXIT_INVALID, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3
OUTPUT_ROOT_ENV = "MONA_OUTPUT_ROOT"


def output_dir(cfg: ExperimentConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return Path(root if root else cfg.output_dir) / cfg.name


# --- single runs ----------------------------------------------------------------

def train_landscape(cfg: ExperimentConfig, block: OptimizerBlock, seed: int):
    """Optimize a landscape task; the single parameter is always a matrix."""
    task = cfg.task
    landscape = task.landscape()
    oracle = task.oracle(seed)
    group = ParamGroup("w", task.initial_point(seed), kind=ParamKind.MATRIX)
    opt = Optimizer(block.algorithm, [group], block.config)
    tracked = ["w"] if block.algorithm != "adamw" else []
    alpha = 0.0 if block.algorithm == "muon" else block.config.accel_alpha
    tracker = LemmaTracker(alpha, block.config.momentum) if tracked else None
    records = []
    for k in range(1, cfg.steps + 1):
        t0 = time.perf_counter_ns()
        loss, _ = landscape.loss_and_grad(group.weights)
        if not np.isfinite(loss) or abs(loss) > DIVERGENCE_LOSS:
            records.append(RunRecord(step=k, train_loss=loss, status="diverged"))
            break
        grad = oracle(group.weights, k - 1)
        t1 = time.perf_counter_ns()
        traces = opt.step({"w": grad})
        t2 = time.perf_counter_ns()
        row = summarize_traces(traces, tracked, tracker)
        rec = RunRecord(step=k, train_loss=loss, inner_ns=t2 - t1, iter_ns=t2 - t0, **row)
        if k % cfg.eval_every == 0 or k == cfg.steps:
            rec.eval_loss = landscape.loss_and_grad(group.weights)[0]
        records.append(rec)
    return records, opt


def run_cell(cfg: ExperimentConfig, block: OptimizerBlock, seed: int):
    if cfg.task.kind == "teacher_student":
        return train_with_state(cfg.task.teacher_student(), block.algorithm, block.config,
                                cfg.steps, cfg.eval_every, seed)
    return train_landscape(cfg, block, seed)


# --- experiment -------------------------------------------------------------------

@dataclass
class ExperimentResult:
    directory: Path
    summary: dict
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        """True when every invariant check passed; the loss ordering is reported only."""
        return all(c.ok for c in self.checks if c.name != "optimizer_ordering")


def _timing_csv(records) -> str:
    return records_to_csv(records, ("step", "inner_ns", "iter_ns"))


def _verify(cfg: ExperimentConfig, runs: dict) -> list[CheckResult]:
    checks = []
    for block in cfg.optimizers:
        if block.algorithm == "adamw":
            continue
        alpha = 0.0 if block.algorithm == "muon" else block.config.accel_alpha
        violations, steps = [], 0
        for seed in cfg.seeds:
            rep = analysis.check_lemma_bounds(runs[block.label, seed], block.config, alpha=alpha)
            violations += rep.violations
            steps += rep.steps_checked
        detail = f"first: {violations[0]}" if violations else ""
        checks.append(CheckResult(f"lemma_bounds[{block.label}]", FAIL if violations else PASS,
                                  {"steps": steps, "violations": len(violations)}, detail))
        if block.algorithm != "muon":
            status = FAIL if alpha > 0 else PASS
            checks.append(CheckResult(f"alpha_regime[{block.label}]", status, {"alpha": alpha},
                                      "positive alpha lies outside the analyzed regime" if alpha > 0 else ""))
        bad = sum(not r.fallback_ok for seed in cfg.seeds for r in runs[block.label, seed])
        checks.append(CheckResult(f"vector_fallback[{block.label}]", FAIL if bad else PASS,
                                  {"bad_steps": bad}))
    return checks


def _ordering(cfg: ExperimentConfig, means: dict) -> CheckResult | None:
    by_algo = {b.algorithm: means[b.label] for b in cfg.optimizers}
    pairs = [("mona", "muon"), ("adamw_acc", "adamw")]
    present = [(a, b) for a, b in pairs if a in by_algo and b in by_algo]
    if not present:
        return None
    ok = all(by_algo[a] <= by_algo[b] for a, b in present)
    ranking = " < ".join(sorted(by_algo, key=by_algo.get))
    nums = {f"mean_{k}": v for k, v in by_algo.items()}
    if "muon" in by_algo and "adamw_acc" in by_algo:
        nums["cross_family_holds"] = by_algo["muon"] <= by_algo["adamw_acc"]
    return CheckResult("optimizer_ordering", PASS if ok else FAIL, nums, f"ranking: {ranking}")


def run_experiment(cfg: ExperimentConfig, out: Path | None = None, log=None) -> ExperimentResult:
    out = out or output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.json").write_text(json.dumps(cfg.resolved(), indent=2) + "\n")
    runs, finals = {}, {}
    for block in cfg.optimizers:
        for seed in cfg.seeds:
            records, opt = run_cell(cfg, block, seed)
            stem = f"{block.label}_seed{seed}"
            (out / f"{stem}.csv").write_text(records_to_csv(records))
            (out / f"{stem}.timing.csv").write_text(_timing_csv(records))
            meta = {"experiment": cfg.name, "label": block.label, "seed": seed,
                    "optimizer": checkpoint.optimizer_meta(opt)}
            checkpoint.save(out / f"{stem}.ckpt", meta, checkpoint.optimizer_buffers(opt))
            runs[block.label, seed] = records
            finals[block.label, seed] = final_eval_loss(records)
            if log:
                log(f"{stem}: final eval loss {format_value(finals[block.label, seed])}"
                    f" ({records[-1].status})")
    summary = {"experiment": cfg.name, "steps": cfg.steps, "seeds": list(cfg.seeds), "optimizers": {}}
    means = {}
    for block in cfg.optimizers:
        vals = np.array([finals[block.label, s] for s in cfg.seeds])
        diverged = int(sum(runs[block.label, s][-1].status != "ok" for s in cfg.seeds))
        means[block.label] = float(vals.mean())
        summary["optimizers"][block.label] = {
            "algorithm": block.algorithm, "mean_final_eval_loss": format_value(float(vals.mean())),
            "std_final_eval_loss": format_value(float(vals.std())),
            "final_eval_loss": [format_value(float(v)) for v in vals], "diverged": diverged,
        }
    summary["ranking"] = sorted(means, key=means.get)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    checks = _verify(cfg, runs)
    order = _ordering(cfg, means)
    if order is not None:
        checks.append(order)
    (out / "report.json").write_text(analysis.report_json(checks))
    (out / "report.txt").write_text(analysis.report_text(checks))
    return ExperimentResult(out, summary, checks)


# --- benchmarks ---------------------------------------------------------------------

def bench_from_config(cfg: ExperimentConfig) -> suite.BenchReport:
    b = cfg.bench
    shape = tuple(b.get("shape", (1024, 1024)))
    steps = int(b.get("steps", os.environ.get("MONA_BENCH_STEPS", 1000)))
    warmup = int(b.get("warmup", 5))
    ns = cfg.optimizers[0].config.ns
    return suite.bench_overhead(shape, steps, warmup, ns=ns)


def bench_text(rep: suite.BenchReport) -> str:
    lines = [f"shape {rep.shape[0]}x{rep.shape[1]}, {rep.steps} timed steps (medians)"]
    for arm in rep.inner_median_ns:
        lines.append(f"  {arm:13s} inner {rep.inner_median_ns[arm] / 1e6:9.3f} ms"
                     f"   iteration {rep.iter_median_ns[arm] / 1e6:9.3f} ms")
    lines.append(f"  inner-step overhead MONA vs Muon   {100 * rep.inner_overhead:+.2f}%"
                 f"   (control {100 * rep.control_inner:+.2f}%)")
    lines.append(f"  iteration overhead MONA vs Muon    {100 * rep.iter_overhead:+.2f}%"
                 f"   (control {100 * rep.control_iter:+.2f}%, band {100 * rep.noise_band:.2f}%)")
    return "\n".join(lines) + "\n"


# --- argument handling ----------------------------------------------------------------

def _perturbed_ns(scale: float) -> NsConfig:
    base = NsConfig()
    return NsConfig(base.steps, base.coeff_a * scale, base.coeff_b * scale, base.coeff_c * scale)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, log=lambda m: print(m, flush=True))
    print(analysis.report_text(result.checks), end="")
    print(f"wrote {result.directory}")
    return EXIT_OK if result.ok else EXIT_CHECK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    if args.steps is not None:
        cfg = replace(cfg, bench={**cfg.bench, "steps": args.steps})
    rep = bench_from_config(cfg)
    text = bench_text(rep)
    print(text, end="")
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.txt").write_text(text)
    (out / "bench.json").write_text(json.dumps(rep.__dict__, indent=2, default=list) + "\n")
    return EXIT_OK


def cmd_check(args) -> int:
    ns = _perturbed_ns(args.ns_scale) if args.ns_scale != 1.0 else NsConfig()
    results = suite.run_suite(args.only or None, quick=args.quick, ns=ns, alpha=args.alpha,
                              progress=lambda r: print(r.line(), flush=True))
    if args.report:
        Path(args.report).write_text(analysis.report_json(results))
    failed = [r.name for r in results if not r.ok]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_inspect(args) -> int:
    ckpt = checkpoint.load(args.checkpoint)
    print(json.dumps(ckpt.config, sort_keys=True))
    print(checkpoint.inspect(ckpt), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mona", description="MONA optimizer experiments and checks")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a paired-seed experiment from a JSON config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    b = sub.add_parser("bench", help="time MONA against Muon on one matrix")
    b.add_argument("config")
    b.add_argument("--steps", type=int, default=None, help="override the number of timed steps")
    b.set_defaults(func=cmd_bench)
    c = sub.add_parser("check", help="run the verification suite on fresh fixtures")
    c.add_argument("--quick", action="store_true", help="smaller fixtures; skip ordering and timing")
    c.add_argument("--only", nargs="*", choices=list(suite.CHECKS), help="run only these checks")
    c.add_argument("--report", help="also write the JSON report here")
    c.add_argument("--alpha", type=float, default=None, help="override the acceleration coefficient")
    c.add_argument("--ns-scale", type=float, default=1.0,
                   help="scale all Newton-Schulz coefficients (mutation testing)")
    c.set_defaults(func=cmd_check)
    i = sub.add_parser("inspect", help="list the buffers stored in a checkpoint")
    i.add_argument("checkpoint")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which would read as a check failure here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
