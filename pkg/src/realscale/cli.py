"""Command-line pipeline: poses, volumes, synthetic corpora, train/predict,
evaluation, baselines, and energy conversion.

Exit codes are stable: 0 on success, 2 for validation or usage errors, 1 for
internal failures. Every command that writes somewhere also drops a
``run.json`` next to its output with the resolved configuration, seed and
wall time, so runs are auditable; all other outputs are byte-stable for
equal inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import camrig, corpus, evaluation, geometry, nutrition, scalereg
from .corpus import ManifestError
from .embedding import EmbeddingFormatError, read_embeddings
from .geometry import MeshParseError
from .scalereg import CheckpointError, TrainConfig

_USAGE_ERRORS = (
    ValueError,
    KeyError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    MeshParseError,
    ManifestError,
    EmbeddingFormatError,
    CheckpointError,
)


def _info(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _mode_key(mode: str) -> str:
    return mode.replace("-", "_")


def _write_run_log(args, out_dir: Path, started: float) -> None:
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func",)
    }
    log = {
        "command": args.command,
        "config": config,
        "seed": config.get("seed"),
        "wall_time_s": time.time() - started,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(log, fh, indent=2)
        fh.write("\n")


def _load_split(args, manifest):
    train_ids, test_ids = corpus.stratified_split(
        manifest, args.test_fraction, args.split_seed
    )
    return train_ids, test_ids


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_poses(args) -> Path | None:
    polar = _parse_floats(args.polar)
    if args.radius_mult is not None:
        if args.mesh is None:
            raise ValueError("--radius-mult needs --mesh to measure")
        _, r = geometry.bounding_sphere(geometry.load_mesh(args.mesh))
        radius = args.radius_mult * r
    else:
        radius = args.radius
    poses = camrig.generate_rig(polar, args.count, radius)
    camrig.export_rig(poses, args.out)
    _info(args, f"wrote {len(poses)} poses to {args.out}")
    return Path(args.out).parent


def cmd_volume(args) -> None:
    mesh = geometry.load_mesh(args.mesh)
    print(f"{geometry.signed_volume(mesh):.6f} mL")
    return None


def cmd_rescale(args) -> Path | None:
    mesh = geometry.load_mesh(args.mesh)
    if args.factor is not None:
        factor = args.factor
    else:
        predictions = evaluation.load_predictions(args.prediction)
        if args.item is not None:
            matches = [p for p in predictions if p.item_id == args.item]
            if not matches:
                raise ValueError(f"no prediction for item {args.item!r}")
            factor = matches[0].v_scale_hat
        elif len(predictions) == 1:
            factor = predictions[0].v_scale_hat
        else:
            raise ValueError(
                f"{args.prediction} holds {len(predictions)} predictions; "
                "use --item to pick one"
            )
    scaled = geometry.rescale_mesh(mesh, factor)
    geometry.save_mesh(scaled, args.out)
    _info(args, f"rescaled by {factor} -> {args.out}")
    return Path(args.out).parent


def cmd_gen_synthetic(args) -> Path:
    try:
        categories = int(args.categories)
    except ValueError:
        categories = [c for c in args.categories.split(",") if c]
    manifest = corpus.generate_synthetic_corpus(
        n_items=args.n,
        categories=categories,
        volume_range_ml=(args.vmin, args.vmax),
        noise_sigma=args.sigma,
        views_per_frame=args.views,
        frames_per_item=args.frames,
        seed=args.seed,
        out_dir=args.out,
        dim=args.dim,
    )
    _info(
        args,
        f"generated {len(manifest.items)} items "
        f"({len(manifest.categories())} categories, dim {manifest.dim}) in {args.out}",
    )
    return Path(args.out)


def cmd_train(args) -> Path:
    manifest = corpus.load_manifest(args.manifest)
    mode = _mode_key(args.mode)
    input_embs: list = []
    render_embs: list = []
    if mode in ("pair", "input_only"):
        if not args.input_emb:
            raise ValueError(f"mode {args.mode} needs --input-emb")
        input_embs = read_embeddings(args.input_emb)
    if mode in ("pair", "render_only"):
        if not args.render_emb:
            raise ValueError(f"mode {args.mode} needs --render-emb")
    if args.render_emb:
        # input-only also accepts renders: they only set the per-frame row count
        render_embs = read_embeddings(args.render_emb)

    train_ids, _ = _load_split(args, manifest)
    features, targets = corpus.assemble_features(
        manifest,
        train_ids,
        input_embs,
        render_embs,
        mode,
        k_train_frames=args.k_frames,
        seed=args.split_seed,
    )
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        base_lr=args.lr,
        lr_decay=args.lr_decay,
        lr_step_epochs=args.lr_step,
        seed=args.seed,
        mode=mode,
    )
    hidden = tuple(_parse_ints(args.hidden))
    _info(
        args,
        f"training {mode} on {len(targets)} pairs (dim {features.shape[1]}), "
        f"{cfg.epochs} epochs, batch {cfg.batch_size}, lr {cfg.base_lr} "
        f"(x{cfg.lr_decay} every {cfg.lr_step_epochs}), hidden {list(hidden)}",
    )
    params, history = scalereg.train(features, targets, cfg, hidden_dims=hidden)
    scalereg.save_checkpoint(params, cfg, history, args.out)
    final = history[-1] if history else float("nan")
    _info(args, f"final training loss {final:.6f} -> {args.out}")
    return Path(args.out).parent


def cmd_predict(args) -> Path:
    if args.m < 1:
        raise ValueError(f"--m must be >= 1, got {args.m}")
    params, cfg, _ = scalereg.load_checkpoint(args.ckpt)
    manifest = corpus.load_manifest(args.manifest)
    if params.mode != "render_only" and not args.input_emb:
        raise ValueError(f"mode {params.mode} needs --input-emb")
    if params.mode != "input_only" and not args.render_emb:
        raise ValueError(f"mode {params.mode} needs --render-emb")
    input_embs = read_embeddings(args.input_emb) if args.input_emb else []
    render_embs = (
        read_embeddings(args.render_emb) if params.mode != "input_only" else []
    )
    inputs_by_id = {e.id: e for e in input_embs}
    renders = corpus.group_renders_by_frame(render_embs) if render_embs else {}

    train_ids, test_ids = _load_split(args, manifest)
    ids = {"test": test_ids, "train": train_ids, "all": sorted(train_ids + test_ids)}[
        args.split
    ]
    predictions = []
    for item_id in ids:
        item = manifest.item(item_id)
        frame = corpus.select_frames(
            item, "inference", seed=args.seed, random_inference=args.random_frame
        )[0]
        key = f"{item_id}/{frame}"
        input_emb = inputs_by_id.get(key)
        if input_emb is None and params.mode != "render_only":
            raise ValueError(f"missing input embedding for {key!r}")
        frame_renders = renders.get(key, [])
        v_hat = scalereg.predict_item(params, input_emb, frame_renders, args.m)
        predictions.append(
            evaluation.Prediction(
                item_id=item_id,
                v_scale_hat=v_hat,
                est_volume_ml=evaluation.volume_from_scale(
                    v_hat, item.recon_volume_ml
                ),
                m_views_used=0 if params.mode == "input_only" else args.m,
            )
        )
    evaluation.save_predictions(predictions, args.out)
    _info(args, f"predicted {len(predictions)} items ({args.split}) -> {args.out}")
    return Path(args.out).parent


def cmd_evaluate(args) -> Path:
    manifest = corpus.load_manifest(args.manifest)
    predictions = evaluation.load_predictions(args.predictions)
    ids = [p.item_id for p in predictions]
    report = evaluation.evaluate(predictions, manifest, ids, method=args.method)
    evaluation.save_report(report, args.out)
    if args.scatter:
        evaluation.export_scatter(predictions, manifest, args.scatter)
    _info(
        args,
        f"{report.method}: n={report.n} mae={report.mae_ml:.3f} mL "
        f"mape={report.mape_pct:.2f}% r={report.pearson_r:.4f} "
        f"r2={report.r2:.4f} cos={report.cosine:.4f}",
    )
    return Path(args.out).parent


def cmd_baseline(args) -> Path:
    manifest = corpus.load_manifest(args.manifest)
    train_ids, test_ids = _load_split(args, manifest)
    train_items = [manifest.item(i) for i in train_ids]
    if args.method == "dataset-mean":
        predictor = evaluation.baseline_mean([it.gt_volume_ml for it in train_items])
    else:
        predictor = evaluation.baseline_category_mean(train_items)
    predictions = evaluation.baseline_predictions(manifest, test_ids, predictor)
    evaluation.save_predictions(predictions, args.out)
    _info(args, f"{args.method} baseline over {len(predictions)} items -> {args.out}")
    return Path(args.out).parent


def cmd_energy(args) -> Path:
    manifest = corpus.load_manifest(args.manifest)
    predictions = evaluation.load_predictions(args.predictions)
    table = nutrition.load_density_table(args.table)
    report = nutrition.energy_report(predictions, manifest, table, method=args.method)
    evaluation.save_report(report, args.out)
    _info(
        args,
        f"{report.method}: n={report.n} mae={report.mae_ml:.3f} kcal "
        f"mape={report.mape_pct:.2f}%",
    )
    return Path(args.out).parent


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realscale",
        description="Real-scale recovery for single-view 3D reconstructions.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress info output")
    # accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--quiet", action="store_true", default=argparse.SUPPRESS,
        help="suppress info output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("poses", help="generate a spherical camera rig")
    p.add_argument("--polar", default="-45,0,45", help="comma-separated polar degrees")
    p.add_argument("--count", type=int, default=75)
    p.add_argument("--radius", type=float, default=2.5)
    p.add_argument("--radius-mult", type=float, default=None)
    p.add_argument("--mesh", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_poses)

    p = add_parser("volume", help="print a mesh's signed volume in mL")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_volume)

    p = add_parser("rescale", help="apply a volume scale factor to a mesh")
    p.add_argument("--mesh", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--factor", type=float, default=None)
    group.add_argument("--prediction", default=None, help="predictions JSON file")
    p.add_argument("--item", default=None, help="item id within --prediction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rescale)

    p = add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, default=250)
    p.add_argument("--categories", default="4", help="count or comma-separated names")
    p.add_argument("--vmin", type=float, default=5.0)
    p.add_argument("--vmax", type=float, default=1500.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--views", type=int, default=75)
    p.add_argument("--frames", type=int, default=3)
    p.add_argument("--dim", type=int, default=corpus.DEFAULT_CORPUS_DIM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = add_parser("train", help="train the scale regressor")
    p.add_argument("--manifest", required=True)
    p.add_argument("--input-emb", default=None)
    p.add_argument("--render-emb", default=None)
    p.add_argument("--mode", choices=("pair", "input-only", "render-only"),
                   default="pair")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--lr-decay", type=float, default=0.7)
    p.add_argument("--lr-step", type=int, default=10)
    p.add_argument("--hidden", default="512,128")
    p.add_argument("--k-frames", type=int, default=corpus.DEFAULT_TRAIN_FRAMES)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = add_parser("predict", help="predict per-item scale factors")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--input-emb", default=None)
    p.add_argument("--render-emb", default=None)
    p.add_argument("--m", type=int, default=75, help="views averaged per item")
    p.add_argument("--split", choices=("test", "train", "all"), default="test")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--random-frame", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = add_parser("evaluate", help="score predictions against a manifest")
    p.add_argument("--predictions", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", default="realscale")
    p.add_argument("--scatter", default=None, help="also write a scatter CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = add_parser("baseline", help="mean-volume baseline predictions")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("dataset-mean", "category-mean"),
                   default="dataset-mean")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = add_parser("energy", help="convert predicted volumes to kcal")
    p.add_argument("--predictions", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--table", required=True, help="density table JSON")
    p.add_argument("--method", default="realscale")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_energy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        run_dir = args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1
    if run_dir is not None:
        _write_run_log(args, run_dir, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
