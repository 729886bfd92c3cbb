"""Command-line entry point.

Every command reads its inputs from and writes its artifacts into one run
directory (``--out``, default ``run``)::

    RUN/
      synth/production.csv              synthetic export
      ingest/canonical.csv              parsed, sorted, missing marked NA
      stats/summary.csv, missing.csv, correlation.csv, summary-<well>.csv
      preprocess/header.json, train.npz, test.npz
      train/<model>/model.bin, history.csv, train.log
      eval/<model>/metrics.json, trace.csv;  eval/comparison.csv, eval/complexity.txt
      sweep-seqlen/, sweep-arch/        sweep.csv, sweep.json, point-NN-<label>/

Each stage directory also holds ``manifest.json`` (command, resolved config,
input and output SHA-256). Manifests carry no timestamps, so rerunning a
command with the same config reproduces every file byte for byte. A stage
that already has a manifest is only overwritten with ``--force``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import shutil
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericError, PrerequisiteError, VolvecastError
from .evaluation import MetricsReport, comparison_table, evaluate
from .experiments import SEQLEN_DEFAULT, model_complexity, run_arch_sweep, run_seqlen_sweep
from .ingest import (
    ATTRIBUTES,
    correlation_matrix,
    missing_audit,
    parse_production_csv,
    read_canonical,
    summarize,
    well_summary,
    write_canonical,
    write_corr_matrix,
    write_stats_report,
)
from .models import FAMILIES, PUBLISHED_LADDER, PUBLISHED_PARAM_COUNTS, FINAL_VARIANT, TrainConfig, build_model, load_model, parse_variant, train
from .preprocess import FIT_SCOPES, POLICIES, curate, load_curated, save_curated
from .synth import generate_csv

log = logging.getLogger("volvecast")


@dataclass
class RunConfig:
    input: str | None = None
    out: str = "run"
    features: str = "table"
    seq_len: int = 5
    model: str = "lstm"
    variant: str = "final"
    seed: int = 0
    epochs: int = 200
    lr: float = 0.001
    batch_size: int = 32
    ratio: float = 0.70
    fit_scope: str = "per_well"
    lengths: tuple = SEQLEN_DEFAULT
    workers: int = 1
    wells: int = 5
    days: int = 800
    injectors: int = 1
    force: bool = False

    def validate(self):
        if not 1 <= self.seq_len <= 365:
            raise ConfigError(f"seq_len must be in [1, 365], got {self.seq_len}")
        if any(not 1 <= int(L) <= 365 for L in self.lengths) or not self.lengths:
            raise ConfigError(f"sweep lengths must be a non-empty list in [1, 365], got {list(self.lengths)}")
        if self.features not in POLICIES:
            raise ConfigError(f"unknown feature policy {self.features!r}; expected one of {sorted(POLICIES)}")
        if self.model not in FAMILIES:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {FAMILIES}")
        if self.fit_scope not in FIT_SCOPES:
            raise ConfigError(f"unknown fit scope {self.fit_scope!r}; expected one of {FIT_SCOPES}")
        if not 0 < self.ratio < 1:
            raise ConfigError(f"ratio must be in (0, 1), got {self.ratio}")
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0 or self.workers < 1:
            raise ConfigError("epochs, batch_size and workers must be >= 1 and lr > 0")
        if self.wells < 1 or self.days < 30:
            raise ConfigError("synth needs wells >= 1 and days >= 30")
        self.variant = str(parse_variant(self.variant))
        return self

    @property
    def train_config(self):
        return TrainConfig(lr=self.lr, epochs=self.epochs, batch_size=self.batch_size, seed=self.seed)

    @property
    def model_config(self):
        return build_model(self.model, self.variant, self.train_config)

    def to_dict(self):
        d = asdict(self)
        d["lengths"] = list(self.lengths)
        d.pop("force")
        return d


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config file {path}: unknown keys {unknown}")
    return data


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = {}
    if args.config:
        values.update(load_config(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v is not False:
            values[f.name] = v
    if "lengths" in values:
        values["lengths"] = tuple(int(x) for x in values["lengths"])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


# --------------------------------------------------------------------------
# run-directory plumbing
# --------------------------------------------------------------------------


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _tree_hashes(directory, root):
    directory = Path(directory)
    return {
        str(p.relative_to(root)): sha256(p)
        for p in sorted(directory.rglob("*"))
        if p.is_file() and p.name not in ("manifest.json",) and p.suffix != ".log"
    }


def stage_dir(cfg: RunConfig, *parts):
    d = Path(cfg.out, *parts)
    if (d / "manifest.json").exists():
        if not cfg.force:
            raise ConfigError(f"{d} already holds a finished run; pass --force to overwrite")
        shutil.rmtree(d)
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_manifest(cfg: RunConfig, directory, command, inputs=()):
    root = Path(cfg.out)
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": _tree_hashes(directory, root),
    }
    (Path(directory) / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _require(path, command):
    path = Path(path)
    if not path.exists():
        raise PrerequisiteError(str(path), command)
    return path


def canonical_path(cfg):
    return Path(cfg.out, "ingest", "canonical.csv")


def curated_dir(cfg):
    return Path(cfg.out, "preprocess")


def _load_series(cfg):
    path = _require(canonical_path(cfg), "ingest")
    return read_canonical(path), path


def _load_dataset(cfg):
    d = curated_dir(cfg)
    _require(d / "header.json", "preprocess")
    return load_curated(d)


def _safe(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_synth(cfg: RunConfig):
    d = stage_dir(cfg, "synth")
    path = d / "production.csv"
    path.write_text(generate_csv(seed=cfg.seed, wells=cfg.wells, days=cfg.days, injectors=cfg.injectors))
    write_manifest(cfg, d, "synth")
    print(f"wrote {path}")
    return path


def cmd_ingest(cfg: RunConfig):
    src = cfg.input
    if src is None:
        default = Path(cfg.out, "synth", "production.csv")
        if not default.exists():
            raise ConfigError("no input CSV; pass --input or run `volvecast synth` first")
        src = default
    src = Path(src)
    if not src.exists():
        raise ConfigError(f"input file {src} not found")
    series = parse_production_csv(src)
    d = stage_dir(cfg, "ingest")
    with open(d / "canonical.csv", "w", newline="") as fh:
        write_canonical(series, fh)
    write_manifest(cfg, d, "ingest", [src])
    producers = sum(s.is_producer for s in series)
    print(f"ingested {sum(len(s) for s in series)} records from {len(series)} wells ({producers} producers)")
    return series


def cmd_stats(cfg: RunConfig):
    series, src = _load_series(cfg)
    d = stage_dir(cfg, "stats")
    producers = [s for s in series if s.is_producer]
    if producers:
        merged = np.vstack([s.values for s in producers])
        with open(d / "summary.csv", "w", newline="") as fh:
            write_stats_report(summarize(merged, ATTRIBUTES), fh)
        with open(d / "correlation.csv", "w", newline="") as fh:
            write_corr_matrix(correlation_matrix(producers), fh)
    for s in series:
        with open(d / f"summary-{_safe(s.well_code)}.csv", "w", newline="") as fh:
            write_stats_report(well_summary(s), fh)
    with open(d / "missing.csv", "w", newline="") as fh:
        fh.write("well,type," + ",".join(ATTRIBUTES) + "\n")
        for s in series:
            audit = missing_audit(s)
            fh.write(f"{s.well_code},{s.well_type.value}," + ",".join(str(audit[a].missing) for a in ATTRIBUTES) + "\n")
    write_manifest(cfg, d, "stats", [src])
    print(f"wrote statistics for {len(series)} wells to {d}")


def cmd_preprocess(cfg: RunConfig):
    series, src = _load_series(cfg)
    dataset = curate(series, seq_len=cfg.seq_len, policy=cfg.features, ratio=cfg.ratio, fit_scope=cfg.fit_scope, seed=cfg.seed)
    d = stage_dir(cfg, "preprocess")
    save_curated(dataset, d)
    write_manifest(cfg, d, "preprocess", [src])
    m = dataset.manifest
    print(f"curated {m.train_total} training and {m.test_total} test samples; features {list(dataset.features.inputs)}")
    return dataset


def cmd_train(cfg: RunConfig):
    dataset = _load_dataset(cfg)
    config = cfg.model_config
    d = stage_dir(cfg, "train", config.name)
    with open(d / "train.log", "w") as logfh:

        def progress(epoch, history):
            logfh.write(f"epoch {epoch} loss {history.losses[-1]:.6g} ({history.epoch_seconds[-1]:.2f}s)\n")
            logfh.flush()
            log.info("epoch %d loss %.6g", epoch, history.losses[-1])

        model, history = train(config, dataset.train.windows, dataset.train.targets, callback=progress)
    shape = dataset.train.windows.shape[1:]
    n_params, flops = model_complexity(config, shape)
    extra = {"model": config.to_dict(), "seq_len": dataset.seq_len, "features": list(dataset.features.inputs)}
    model.save(d / "model.bin", extra)
    with open(d / "history.csv", "w", newline="") as fh:
        history.write_csv(fh)
    write_manifest(cfg, d, "train", [curated_dir(cfg) / n for n in ("header.json", "train.npz")])
    print(f"trained {config.name}: {n_params} parameters, {flops} FLOPs per sample, final loss {history.losses[-1]:.6g}")
    return model, history


def complexity_report(input_shape) -> str:
    """Closed-form parameter and FLOP counts for the final models, beside the
    published figures with any mismatch flagged."""
    lines = [f"input shape {tuple(input_shape)}", "model  params  published  flag      flops  published  flag"]
    for family in ("cnn", "lstm"):
        config = build_model(family, "final")
        n_params, flops = model_complexity(config, input_shape)
        pub_p = PUBLISHED_PARAM_COUNTS[family]
        pub_f = PUBLISHED_LADDER[(family, FINAL_VARIANT[family])][0]
        flag_p = "ok" if n_params == pub_p else "MISMATCH"
        flag_f = "ok" if flops == pub_f else "MISMATCH"
        lines.append(f"{family:<5}{n_params:>8}  {pub_p:>9}  {flag_p:<8}{flops:>9}  {pub_f:>9}  {flag_f}")
    cnn_f = model_complexity(build_model("cnn", "final"), input_shape)[1]
    lstm_f = model_complexity(build_model("lstm", "final"), input_shape)[1]
    lines.append(f"lstm/cnn FLOP ratio {lstm_f / cnn_f:.4f}")
    return "\n".join(lines) + "\n"


def cmd_eval(cfg: RunConfig):
    dataset = _load_dataset(cfg)
    config = cfg.model_config
    ckpt = _require(Path(cfg.out, "train", config.name, "model.bin"), f"train --model {cfg.model} --variant {cfg.variant}")
    model = load_model(ckpt)
    shape = dataset.test.windows.shape[1:]
    if tuple(model.input_shape) != tuple(shape):
        raise ConfigError(f"checkpoint expects input {tuple(model.input_shape)} but the curated dataset has {tuple(shape)}; rerun train")
    n_params, flops = model_complexity(config, shape)
    report, trace = evaluate(model, dataset.test, dataset.scalers, config.name, n_params, flops)
    d = stage_dir(cfg, "eval", config.name)
    (d / "metrics.json").write_text(report.to_json() + "\n")
    with open(d / "trace.csv", "w", newline="") as fh:
        trace.write_csv(fh)
    write_manifest(cfg, d, "eval", [ckpt, curated_dir(cfg) / "test.npz"])
    _refresh_comparison(cfg, shape)
    g = report.global_row
    print(f"{config.name}: global MAE {g.mae:.4f}  R2 {g.r2:.4f}  over {g.n} test samples")
    return report


def _refresh_comparison(cfg, shape):
    root = Path(cfg.out, "eval")
    reports = [MetricsReport.from_dict(json.loads(p.read_text())) for p in sorted(root.glob("*/metrics.json"))]
    order = {f: i for i, f in enumerate(FAMILIES)}
    reports.sort(key=lambda r: (order.get(r.model.split("-")[0], 9), r.model))
    with open(root / "comparison.csv", "w", newline="") as fh:
        comparison_table(reports, fh, baseline="linreg-final")
    (root / "complexity.txt").write_text(complexity_report(shape))


def _print_sweep(result):
    for r in result.rows:
        if r.ok:
            print(f"  {r.label:<8} MAE {r.mae:10.4f}  R2 {r.r2:7.4f}  FLOPs {r.flops}")
        else:
            print(f"  {r.label:<8} FAILED {r.error}")
    best = result.optimum
    print(f"optimum: {best.label if best else 'none (every point failed)'}")


def _write_sweep(d, result):
    (d / "sweep.json").write_text(result.to_json() + "\n")
    with open(d / "sweep.csv", "w", newline="") as fh:
        result.write_csv(fh)


def cmd_sweep_seqlen(cfg: RunConfig):
    series, src = _load_series(cfg)
    d = stage_dir(cfg, "sweep-seqlen")
    result = run_seqlen_sweep(
        series,
        lengths=cfg.lengths,
        family=cfg.model,
        variant=parse_variant(cfg.variant),
        train_cfg=cfg.train_config,
        seed=cfg.seed,
        policy=cfg.features,
        ratio=cfg.ratio,
        fit_scope=cfg.fit_scope,
        workers=cfg.workers,
        out=d,
    )
    _write_sweep(d, result)
    write_manifest(cfg, d, "sweep-seqlen", [src])
    _print_sweep(result)
    return result


def cmd_sweep_arch(cfg: RunConfig):
    dataset = _load_dataset(cfg)
    d = stage_dir(cfg, "sweep-arch")
    result = run_arch_sweep(dataset, cfg.train_config, seed=cfg.seed, workers=cfg.workers, out=d)
    _write_sweep(d, result)
    write_manifest(cfg, d, "sweep-arch", [curated_dir(cfg) / n for n in ("header.json", "train.npz", "test.npz")])
    _print_sweep(result)
    return result


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-seqlen": cmd_sweep_seqlen,
    "sweep-arch": cmd_sweep_arch,
}

HELP = {
    "synth": "write a seeded synthetic production export",
    "ingest": "parse a production CSV into the canonical dataset",
    "stats": "summary statistics, missing counts and correlations",
    "preprocess": "impute, scale, window and split into curated train/test sets",
    "train": "train one model on the curated training set",
    "eval": "score a trained model per well and globally",
    "sweep-seqlen": "re-curate and score the model at several sequence lengths",
    "sweep-arch": "train and score all ten ladder architectures",
}


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file with RunConfig keys; flags win on conflict")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--out", help="run directory (default: run)")
    shared.add_argument("--seq-len", dest="seq_len", type=int)
    shared.add_argument("--model", choices=FAMILIES)
    shared.add_argument("--variant", help="1-5 or final")
    shared.add_argument("--features", choices=sorted(POLICIES))
    shared.add_argument("--workers", type=int)
    shared.add_argument("--force", action="store_true", help="overwrite an existing stage directory")
    shared.add_argument("--epochs", type=int)
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="volvecast", description="Daily oil-production forecasting pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[shared], help=HELP[name])
        if name == "ingest":
            p.add_argument("--input", help="production CSV (default: RUN/synth/production.csv)")
        if name == "synth":
            p.add_argument("--wells", type=int)
            p.add_argument("--days", type=int)
            p.add_argument("--injectors", type=int)
        if name == "sweep-seqlen":
            p.add_argument("--lengths", type=int, nargs="+", help="sequence lengths (default 3-8)")
        if name in ("preprocess", "sweep-seqlen"):
            p.add_argument("--ratio", type=float)
            p.add_argument("--fit-scope", dest="fit_scope", choices=FIT_SCOPES)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except VolvecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NumericError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
