"""``svrec`` command line: generate, degrade, train, sweep, activations, report.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 missing artifact (corpus, model, clip).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import synth
from .bof.features import StipParams
from .bof.recognizer import BofConfig, bof_path, load_bof, save_bof, train_bof
from .evaluation import OperatingPoint, SweepGrid, emit_report, run_sweep
from .neural.checkpoint import CheckpointError, deep_path, load_model, save_model
from .neural.inference import dump_activations
from .neural.network import NetworkConfig
from .neural.training import TrainSpec, train
from .scalability import ScalabilityCombo, apply_combo
from .store import BundleError
from .video import SvrFormatError, load_raw, save_raw

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MISSING = 0, 2, 3, 4

log = logging.getLogger("svrec")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    seed: int
    corpus_dir: Path
    models_dir: Path
    reports_dir: Path
    generator: synth.GeneratorSpec
    grid: SweepGrid
    train: TrainSpec
    bof: BofConfig
    network: NetworkConfig
    jobs: int = 1
    raw: dict = field(default_factory=dict)


def _section(doc: dict, name: str, seed: int) -> dict:
    d = dict(doc.get(name, {}))
    if not isinstance(d, dict):
        raise ValueError(f"section {name!r} must be an object")
    d.setdefault("seed", seed)
    return d


def parse_config(doc: dict, base: Path = Path(".")) -> RunConfig:
    """Build a RunConfig from its JSON form; relative paths resolve against ``base``."""
    if "seed" not in doc:
        raise ValueError("config must set a global 'seed'")
    seed = int(doc["seed"])
    paths = doc.get("paths", {})

    def path(key, default):
        p = Path(paths.get(key, default))
        return p if p.is_absolute() else base / p

    gen = synth.GeneratorSpec.from_dict(_section(doc, "generator", seed))
    gen.validate()
    grid = SweepGrid.from_dict(doc.get("grid", {}))
    tspec = TrainSpec.from_dict(_section(doc, "train", seed))
    tspec.validate()
    bof_doc = _section(doc, "bof", seed)
    if "stip" in bof_doc:
        StipParams.from_dict(bof_doc["stip"])
    bof = BofConfig.from_dict(bof_doc)
    net_doc = _section(doc, "network", seed)
    net_doc.setdefault("outputs", gen.class_count)
    network = NetworkConfig.from_dict(net_doc)
    network.validate()
    if network.outputs != gen.class_count:
        raise ValueError(f"network outputs {network.outputs} != class_count {gen.class_count}")
    jobs = int(doc.get("jobs", 1))
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    return RunConfig(seed, path("corpus", "corpus"), path("models", "models"), path("reports", "reports"),
                     gen, grid, tspec, bof, network, jobs, doc)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise CliError(EXIT_USAGE, f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_USAGE, f"cannot parse config {path}: {exc}") from exc
    try:
        return parse_config(doc, path.parent)
    except (TypeError, ValueError, KeyError) as exc:
        raise CliError(EXIT_USAGE, f"invalid config {path}: {exc}") from exc


# --------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    try:
        manifest = synth.write_dataset(cfg.generator, cfg.corpus_dir)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write corpus to {cfg.corpus_dir}: {exc}") from exc
    print(f"wrote {len(manifest['samples'])} samples to {cfg.corpus_dir}")
    return EXIT_OK


def cmd_degrade(args) -> int:
    try:
        combo = ScalabilityCombo(args.qp, args.scale, args.keep)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    src = Path(args.input)
    if not src.is_file():
        raise CliError(EXIT_MISSING, f"input clip not found: {src}")
    try:
        clip = load_raw(src)
    except SvrFormatError as exc:
        raise CliError(EXIT_IO, f"{src}: {exc}") from exc
    out = apply_combo(clip, combo)
    dst = Path(args.output)
    record = {
        "input": str(src),
        "output": str(dst),
        "combo": combo.as_dict(),
        "width": out.clip.width,
        "height": out.clip.height,
        "frames": out.clip.n_frames,
        "fps": str(out.clip.fps),
        "bitrate_bps": out.bitrate_bps,
        "psnr_db": None if out.lossless else out.psnr_db,
    }
    try:
        save_raw(out.clip, dst)
        dst.with_suffix(".json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {dst}: {exc}") from exc
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def _load_split(cfg: RunConfig, split: str):
    if not (cfg.corpus_dir / "manifest.json").is_file():
        raise CliError(EXIT_MISSING, f"no corpus at {cfg.corpus_dir} (run 'generate' first)")
    try:
        samples = synth.load_dataset(cfg.corpus_dir, split)
    except (OSError, SvrFormatError) as exc:
        raise CliError(EXIT_IO, f"cannot read corpus {cfg.corpus_dir}: {exc}") from exc
    if not samples:
        raise CliError(EXIT_MISSING, f"corpus {cfg.corpus_dir} has no {split} samples")
    return samples


def _train_one(cfg: RunConfig, samples, model: str, group: str) -> Path:
    cfg.models_dir.mkdir(parents=True, exist_ok=True)
    if model == "bof":
        m = train_bof(samples, group, cfg.bof)
        path = bof_path(cfg.models_dir, group)
        save_bof(m, path)
        train_log = {"group": group, "descriptors": m.meta["descriptors"],
                     "kmedoids_cost": m.codebook.cost_history,
                     "smo_iterations": [mc.iterations for mc in m.machines]}
    else:
        net, tlog = train(samples, cfg.network, cfg.train, group)
        path = deep_path(cfg.models_dir, group)
        save_model(net, path, {"group": group, "train": cfg.train.to_dict()})
        train_log = {"group": group, "losses": tlog.losses, "windows": tlog.windows}
    path.with_suffix(".log.json").write_text(json.dumps(train_log, sort_keys=True) + "\n")
    log.info("trained %s model for %s -> %s", model, group, path)
    return path


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    samples = _load_split(cfg, "train")
    groups = samples[0].groups
    if args.view_group is not None and args.view_group not in groups:
        raise CliError(EXIT_USAGE, f"unknown view group {args.view_group!r}; corpus has {groups}")
    models = ["bof", "deep"] if args.model == "all" else [args.model]
    try:
        for model in models:
            for g in [args.view_group] if args.view_group else groups:
                print(_train_one(cfg, samples, model, g))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write models to {cfg.models_dir}: {exc}") from exc
    return EXIT_OK


def _load_models(cfg: RunConfig, groups):
    bof, deep = {}, {}
    for g in groups:
        bp, dp = bof_path(cfg.models_dir, g), deep_path(cfg.models_dir, g)
        for p in (bp, dp):
            if not p.is_file():
                raise CliError(EXIT_MISSING, f"missing model {p} (run 'train' first)")
        try:
            bof[g] = load_bof(bp)
            deep[g] = load_model(dp)
        except (BundleError, OSError) as exc:
            raise CliError(EXIT_MISSING, f"unusable model for group {g}: {exc}") from exc
    return bof, deep


def _point_to_dict(p: OperatingPoint) -> dict:
    return {"combo": p.combo.as_dict(), "bitrate_bps": p.bitrate_bps, "accuracy": p.accuracy,
            "clip_count": p.clip_count, "dl_vote_no_idle": p.dl_vote_no_idle,
            "dl_frame_accuracy": p.dl_frame_accuracy}


def _point_from_dict(d: dict) -> OperatingPoint:
    c = d["combo"]
    return OperatingPoint(ScalabilityCombo(c["qp"], c["scale"], c["keep"]), d["bitrate_bps"], d["accuracy"],
                          d["clip_count"], d["dl_vote_no_idle"], d["dl_frame_accuracy"])


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    samples = _load_split(cfg, "test")
    bof, deep = _load_models(cfg, samples[0].groups)
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    points = run_sweep(samples, bof, deep, cfg.grid, jobs=jobs)
    try:
        files = emit_report(points, cfg.reports_dir)
        (cfg.reports_dir / "points.json").write_text(
            # insertion order carries the view-group column order used by reports
            json.dumps([_point_to_dict(p) for p in points], indent=1) + "\n"
        )
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write reports to {cfg.reports_dir}: {exc}") from exc
    for f in files.values():
        print(f)
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    src = cfg.reports_dir / "points.json"
    if not src.is_file():
        raise CliError(EXIT_MISSING, f"no sweep results at {src} (run 'sweep' first)")
    points = [_point_from_dict(d) for d in json.loads(src.read_text())]
    try:
        files = emit_report(points, Path(args.out) if args.out else cfg.reports_dir)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write report: {exc}") from exc
    for f in files.values():
        print(f)
    return EXIT_OK


def cmd_activations(args) -> int:
    model_p, clip_p = Path(args.model), Path(args.clip)
    for p in (model_p, clip_p):
        if not p.is_file():
            raise CliError(EXIT_MISSING, f"not found: {p}")
    try:
        model = load_model(model_p)
        clip = load_raw(clip_p)
    except (CheckpointError, BundleError, SvrFormatError) as exc:
        raise CliError(EXIT_MISSING, f"unusable input: {exc}") from exc
    try:
        dump_activations(model, clip, args.out)
    except ValueError as exc:
        raise CliError(EXIT_MISSING, f"model and clip do not fit together: {exc}") from exc
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {exc}") from exc
    print(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svrec", description="Scalable-video activity recognition experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render the synthetic corpus")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("degrade", help="apply one scalability combination to a clip")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--qp", type=int, default=0)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--keep", type=int, default=1)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train", help="train recognizers on the clean training split")
    p.add_argument("--config", required=True)
    p.add_argument("--model", choices=("bof", "deep", "all"), default="all")
    p.add_argument("--view-group", default=None, help="train one group only (default: every group)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="evaluate both recognizers over the scalability grid")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("activations", help="dump full4 / rnn7 / output activations of one clip")
    p.add_argument("--model", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_activations)

    p = sub.add_parser("report", help="re-emit reports from saved sweep results")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return ap


def _setup_logging() -> None:
    level = os.environ.get("SVREC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"svrec: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
