"""Command-line entry point: ``artifact <subcommand> ...``.

Every subcommand accepts ``--config``, ``--seed`` and ``--threads``. Results
go to stdout as JSON; failures print one JSON object on stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, save_config
from .degradation import Psf, corrupt
from .detection_eval import dataset_from_sidecars, evaluate, write_pr_csv
from .geometry import Frame
from .io import (DetectionSidecar, emit_report, list_frames, parse_sidecar, read_frame,
                 write_frame, write_sidecar)
from .metrics import compute_metrics
from .pipeline import plan_restoration, process_video, restore_frame
from .scoring import quality_score
from .simulate import simulate_corpus
from .synthetic import smooth_texture_composite


class CliError(Exception):
    """Usage or input problem reported as a JSON error line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    cfg.__post_init__()
    return cfg


def _filtered(dets, cfg: RunConfig) -> list:
    return [d for d in dets if d.confidence >= cfg.confidence_threshold]


def cmd_score(args, cfg: RunConfig) -> dict:
    sidecar = parse_sidecar(args.sidecar)
    ids = [args.frame_id] if args.frame_id else list(sidecar.frames)
    out = []
    for fid in ids:
        if fid not in sidecar.frames:
            raise CliError(f"frame id {fid!r} not in sidecar")
        rep = quality_score(_filtered(sidecar.detections(fid), cfg), cfg.quality)
        out.append({"frame_id": fid, "qs": rep.qs, "disposition": rep.disposition.value})
    return {"frames": out}


def cmd_eval_detect(args, cfg: RunConfig) -> dict:
    gt = parse_sidecar(args.ground_truth)
    pred = parse_sidecar(args.predictions)
    result = evaluate(dataset_from_sidecars(gt.frames, pred.frames))
    if args.pr_dir:
        pr_dir = Path(args.pr_dir)
        pr_dir.mkdir(parents=True, exist_ok=True)
        for thr, curves in result.pr_curves.items():
            for label, curve in curves.items():
                write_pr_csv(curve, pr_dir / f"pr_{label.name}_iou{round(thr * 100)}.csv")
    return result.to_dict()


def _write_manifest(path: Path, cfg: RunConfig, records: list) -> None:
    path.write_text(_dump({"config": cfg.to_dict(), "frames": records}) + "\n")


def cmd_simulate(args, cfg: RunConfig) -> dict:
    out = Path(args.out)
    clean_dir, corrupt_dir = out / "clean", out / "corrupt"
    clean_dir.mkdir(parents=True, exist_ok=True)
    corrupt_dir.mkdir(parents=True, exist_ok=True)
    records = []
    if args.mode == "corpus":
        corpus = simulate_corpus(args.n_frames, size=args.size, seed=cfg.seed)
        sidecar = DetectionSidecar({})
        for cf in corpus:
            write_frame(cf.clean, clean_dir / f"{cf.frame_id}.png", args.bit_depth)
            write_frame(cf.corrupted, corrupt_dir / f"{cf.frame_id}.png", args.bit_depth)
            sidecar.frames[cf.frame_id] = cf.detections
            records.append({"frame_id": cf.frame_id, "label": cf.label, "kind": cf.kind,
                            "psf": cf.psf.to_list() if cf.psf is not None else None})
        write_sidecar(sidecar, out / "sidecar.json")
    else:
        rng = np.random.default_rng(cfg.seed)
        for i in range(args.n_frames):
            fid = f"{i:05d}"
            frame_seed = int(rng.integers(0, 2 ** 31))
            clean = Frame(smooth_texture_composite(args.size, seed=frame_seed), index=i)
            bad = corrupt(clean, cfg.degradation, frame_seed)
            write_frame(clean, clean_dir / f"{fid}.png", args.bit_depth)
            write_frame(bad, corrupt_dir / f"{fid}.png", args.bit_depth)
            psf = cfg.degradation.psf
            records.append({"frame_id": fid, "seed": frame_seed,
                            "psf": psf.to_list() if psf is not None else None})
    _write_manifest(out / "manifest.json", cfg, records)
    return {"frames": len(records), "out": str(out)}


def _load_psf(path) -> Psf:
    data = json.loads(Path(path).read_text())
    return Psf(np.array(data["psf"] if isinstance(data, dict) else data, dtype=np.float64))


def _manifest_psfs(path) -> dict:
    data = json.loads(Path(path).read_text())
    return {r["frame_id"]: Psf(np.array(r["psf"], dtype=np.float64))
            for r in data.get("frames", []) if r.get("psf") is not None}


def cmd_restore(args, cfg: RunConfig) -> dict:
    frame = read_frame(args.frame)
    sidecar = parse_sidecar(args.sidecar)
    fid = args.frame_id or Path(args.frame).stem
    if fid not in sidecar.frames:
        raise CliError(f"frame id {fid!r} not in sidecar")
    dets = _filtered(sidecar.detections(fid), cfg)
    plan = plan_restoration(dets, frame.dims, cfg)
    psf = _load_psf(args.psf) if args.psf else None
    restored, flog = restore_frame(frame, plan, cfg, psf, fid)
    flog.qs = quality_score(dets, cfg.quality).qs
    if restored is not None:
        write_frame(restored, args.out)
    row = flog.to_row()
    return {k: row[k] for k in ("frame_id", "qs", "disposition", "stages", "warnings", "reason")}


def cmd_pipeline(args, cfg: RunConfig) -> dict:
    paths = list_frames(args.frames)
    sidecar = parse_sidecar(args.sidecar)
    out = Path(args.out)
    frames_out = out / "frames"
    frames_out.mkdir(parents=True, exist_ok=True)
    by_id = {p.stem: p for p in paths}
    sources = {fid: (lambda p=p, i=i: read_frame(p, i)) for i, (fid, p) in enumerate(by_id.items())}
    ground_truth = None
    if args.ground_truth:
        gt_dir = Path(args.ground_truth)
        ground_truth = {fid: read_frame(gt_dir / p.name) for fid, p in by_id.items()
                        if (gt_dir / p.name).exists()}
    psfs = _manifest_psfs(args.manifest) if args.manifest else None
    report, logs, outputs = process_video(sources, sidecar.frames, cfg, ground_truth, psfs,
                                          threads=cfg.threads)
    for (fid, src), flog, frame in zip(by_id.items(), logs, outputs):
        if frame is None:
            continue
        if flog.disposition.value == "keep":
            shutil.copyfile(src, frames_out / src.name)
        else:
            write_frame(frame, frames_out / src.name)
    emit_report(report, logs, out / "report.json", out / "frame_log.csv")
    save_config(cfg, out / "config.json")
    return report.to_dict()


def cmd_metrics(args, cfg: RunConfig) -> dict:
    ref, test = read_frame(args.reference), read_frame(args.test)
    if ref.pixels.shape != test.pixels.shape:
        raise CliError(f"shape mismatch: {ref.pixels.shape} vs {test.pixels.shape}")
    return compute_metrics(ref, test).to_dict()


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads (overrides config)")

    parser = _Parser(prog="artifact", description="Endoscopic frame triage and restoration.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", parents=[common], help="quality score per sidecar frame")
    p.add_argument("sidecar")
    p.add_argument("--frame-id")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval-detect", parents=[common], help="mAP and PR curves")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--pr-dir", help="directory for recall,precision CSV files")
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("simulate", parents=[common], help="paired clean/corrupt frames")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("pairs", "corpus"), default="pairs",
                   help="pairs: config degradation on synthetic frames; corpus: labelled video")
    p.add_argument("--n-frames", type=int, default=10)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("restore", parents=[common], help="restore one frame from its detections")
    p.add_argument("frame")
    p.add_argument("--sidecar", required=True)
    p.add_argument("--frame-id", help="sidecar id (default: file stem)")
    p.add_argument("--psf", help="JSON kernel for deblurring")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("pipeline", parents=[common], help="triage and restore a frame directory")
    p.add_argument("--frames", required=True)
    p.add_argument("--sidecar", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ground-truth", help="directory of clean frames with matching names")
    p.add_argument("--manifest", help="simulator manifest supplying known blur kernels")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", parents=[common], help="PSNR, SSIM, VIF and RECO")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        result = args.func(args, cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(_dump(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
