"""Dataset manifests, splits, frame sampling, and synthetic corpus generation.

A corpus directory looks like:

    manifest.json          dataset name, embedding dim, seed, item records
    meshes/<item>.obj      canonically normalized "reconstructions"
    embeddings/input.emb   EMB1, one record per (item, frame)
    embeddings/render.emb  EMB1, one record per (item, frame, view)
    poses.json             the camera rig used for the render embeddings

The synthetic generator builds a desk-scale corpus with known ground truth:
each item is a procedural mesh (shape family chosen by category) scaled to a
log-uniform ground-truth volume, and its "reconstruction" is the same mesh
normalized to the unit bounding sphere, i.e. geometrically perfect but with
the absolute scale erased. Cached reconstruction volumes are computed from
the mesh file as written, so they match a reload exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

import numpy as np

from . import geometry
from .camrig import DEFAULT_POLAR_DEG, export_rig, generate_rig
from .embedding import (
    Embedding,
    synthetic_encode_input,
    synthetic_encode_render,
    write_embeddings,
)
from .geometry import TriangleMesh
from .scalereg import compute_scale_target
from .rng import fnv1a64

DEFAULT_TRAIN_FRAMES = 10
DEFAULT_CORPUS_DIM = 64

# category name -> shape family; extra categories cycle through the families
DEFAULT_CATEGORY_POOL = (
    ("bread", "cube"),
    ("apple", "icosphere"),
    ("cucumber", "cylinder"),
    ("potato", "blob"),
    ("cracker_box", "cube"),
    ("orange", "icosphere"),
    ("zucchini", "cylinder"),
    ("croissant", "blob"),
)
SHAPE_FAMILIES = ("cube", "icosphere", "cylinder", "blob")


class ManifestError(ValueError):
    """Raised when a manifest violates its schema; message names the field."""


@dataclass
class ItemRecord:
    item_id: str
    category: str
    gt_volume_ml: float
    recon_mesh_path: str
    recon_volume_ml: float
    frames: list[str]

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "category": self.category,
            "gt_volume_ml": self.gt_volume_ml,
            "recon_mesh_path": self.recon_mesh_path,
            "recon_volume_ml": self.recon_volume_ml,
            "frames": list(self.frames),
        }


@dataclass
class Manifest:
    dataset_name: str
    dim: int
    seed: int
    items: list[ItemRecord]
    base_dir: Path | None = field(default=None, compare=False)

    def item(self, item_id: str) -> ItemRecord:
        record = self._index().get(item_id)
        if record is None:
            raise KeyError(f"unknown item_id {item_id!r}")
        return record

    def _index(self) -> dict[str, ItemRecord]:
        if not hasattr(self, "_by_id") or len(self._by_id) != len(self.items):
            self._by_id = {it.item_id: it for it in self.items}
        return self._by_id

    def mesh_path(self, item: ItemRecord) -> Path:
        path = Path(item.recon_mesh_path)
        if path.is_absolute() or self.base_dir is None:
            return path
        return self.base_dir / path

    def categories(self) -> list[str]:
        return sorted({it.category for it in self.items})


def _validate_manifest(manifest: Manifest) -> None:
    if not manifest.items:
        raise ManifestError("items: manifest must contain at least one item")
    if manifest.dim < 1:
        raise ManifestError(f"dim: must be >= 1, got {manifest.dim}")
    seen: set[str] = set()
    for i, item in enumerate(manifest.items):
        where = f"items[{i}]"
        if not item.item_id:
            raise ManifestError(f"{where}.item_id: must be non-empty")
        if item.item_id in seen:
            raise ManifestError(f"{where}.item_id: duplicate id {item.item_id!r}")
        seen.add(item.item_id)
        if not (item.gt_volume_ml > 0):
            raise ManifestError(
                f"{where}.gt_volume_ml: must be positive, got {item.gt_volume_ml}"
            )
        if not item.frames:
            raise ManifestError(f"{where}.frames: must list at least one frame")


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    _validate_manifest(manifest)
    doc = {
        "dataset_name": manifest.dataset_name,
        "dim": manifest.dim,
        "seed": manifest.seed,
        "items": [item.to_dict() for item in manifest.items],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON: {exc}") from exc
    try:
        items = [
            ItemRecord(
                item_id=str(rec["item_id"]),
                category=str(rec["category"]),
                gt_volume_ml=float(rec["gt_volume_ml"]),
                recon_mesh_path=str(rec["recon_mesh_path"]),
                recon_volume_ml=float(rec["recon_volume_ml"]),
                frames=[str(f) for f in rec["frames"]],
            )
            for rec in doc["items"]
        ]
        manifest = Manifest(
            dataset_name=str(doc["dataset_name"]),
            dim=int(doc["dim"]),
            seed=int(doc["seed"]),
            items=items,
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise ManifestError(f"missing field {exc.args[0]!r}") from exc
    _validate_manifest(manifest)
    return manifest


def stratified_split(
    manifest: Manifest, test_fraction: float, seed: int
) -> tuple[list[str], list[str]]:
    """Per-category split: every category with >= 2 items lands on both sides.

    Per category, round(test_fraction * n) items go to test (clamped to
    [1, n-1]); singleton categories go entirely to train. Deterministic per
    seed; item order within the manifest does not matter.
    """
    if not (0 < test_fraction < 1):
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_category: dict[str, list[str]] = {}
    for item in manifest.items:
        by_category.setdefault(item.category, []).append(item.item_id)
    rng = np.random.default_rng([seed, 2])
    train: list[str] = []
    test: list[str] = []
    for category in sorted(by_category):
        ids = sorted(by_category[category])
        if len(ids) == 1:
            train.extend(ids)
            continue
        n_test = math.floor(test_fraction * len(ids) + 0.5)
        n_test = min(len(ids) - 1, max(1, n_test))
        order = rng.permutation(len(ids))
        test.extend(ids[i] for i in order[:n_test])
        train.extend(ids[i] for i in order[n_test:])
    return sorted(train), sorted(test)


def select_frames(
    item: ItemRecord,
    phase: str,
    k_train: int = DEFAULT_TRAIN_FRAMES,
    seed: int = 0,
    random_inference: bool = False,
) -> list[str]:
    """Training samples up to k_train frames; inference uses one frame.

    Inference defaults to the first frame for reproducibility; pass
    ``random_inference=True`` for a seeded random choice instead.
    """
    if phase not in ("train", "inference"):
        raise ValueError(f"phase must be 'train' or 'inference', got {phase!r}")
    if k_train < 1:
        raise ValueError("k_train must be >= 1")
    rng = np.random.default_rng([seed, fnv1a64(item.item_id)])
    if phase == "train":
        k = min(k_train, len(item.frames))
        picked = rng.choice(len(item.frames), size=k, replace=False)
        return [item.frames[i] for i in sorted(picked)]
    if random_inference:
        return [item.frames[int(rng.integers(len(item.frames)))]]
    return [item.frames[0]]


# ---------------------------------------------------------------------------
# synthetic corpus generation
# ---------------------------------------------------------------------------


def _resolve_categories(categories) -> list[tuple[str, str]]:
    if isinstance(categories, int):
        if categories < 1:
            raise ValueError("need at least one category")
        out = []
        for i in range(categories):
            if i < len(DEFAULT_CATEGORY_POOL):
                out.append(DEFAULT_CATEGORY_POOL[i])
            else:
                out.append((f"category_{i}", SHAPE_FAMILIES[i % len(SHAPE_FAMILIES)]))
        return out
    names = list(categories)
    if not names:
        raise ValueError("need at least one category")
    return [(str(n), SHAPE_FAMILIES[i % len(SHAPE_FAMILIES)]) for i, n in enumerate(names)]


def _item_mesh(family: str, rng: np.random.Generator, blob_seed: int) -> TriangleMesh:
    """Base mesh for one item with per-item shape jitter.

    Boxes/spheres/cylinders vary through axis stretches that bounding-box
    extents capture; blobs instead vary through their radial perturbation
    amplitude, which moves the volume-to-bounding-sphere ratio a lot while
    leaving the bounding box almost unchanged -- that is what makes rendered
    views genuinely informative for them.
    """
    if family == "cube":
        mesh = geometry.generate_primitive("cube", edge=1.0)
        stretch = np.exp(rng.uniform(np.log(0.6), np.log(1.4), size=3))
    elif family == "icosphere":
        mesh = geometry.generate_primitive("icosphere", radius=1.0, subdivisions=2)
        stretch = np.exp(rng.uniform(np.log(0.9), np.log(1.1), size=3))
    elif family == "cylinder":
        height = float(np.exp(rng.uniform(np.log(1.0), np.log(6.0))))
        mesh = geometry.generate_primitive(
            "cylinder", radius=1.0, height=height, segments=48
        )
        stretch = np.exp(rng.uniform(np.log(0.85), np.log(1.15), size=3))
    elif family == "blob":
        amplitude = float(rng.uniform(0.08, 0.42))
        mesh = geometry.generate_primitive(
            "blob", seed=blob_seed, radius=1.0, subdivisions=3, amplitude=amplitude
        )
        stretch = np.exp(rng.uniform(np.log(0.96), np.log(1.04), size=3))
    else:
        raise ValueError(f"unknown shape family {family!r}")
    return TriangleMesh(mesh.vertices * stretch, mesh.faces)


def generate_synthetic_corpus(
    n_items: int,
    categories,
    volume_range_ml: tuple[float, float],
    noise_sigma: float,
    views_per_frame: int,
    frames_per_item: int,
    seed: int,
    out_dir: str | Path,
    dim: int = DEFAULT_CORPUS_DIM,
) -> Manifest:
    """Generate a fully deterministic synthetic corpus under ``out_dir``.

    Categories are assigned round-robin and each category draws its volumes
    log-uniformly from its own equal-log-width band of ``volume_range_ml``;
    with equally sized categories the pooled volumes are therefore
    log-uniform over the whole range (matching the small-volume-heavy skew
    of real food corpora) while category identity still carries real volume
    signal, as it does for real food categories. See the module docstring
    for the directory layout.
    """
    cat_families = _resolve_categories(categories)
    if n_items < len(cat_families):
        raise ValueError("n_items must be at least the number of categories")
    v_lo, v_hi = volume_range_ml
    if not (0 < v_lo <= v_hi):
        raise ValueError(f"invalid volume range {volume_range_ml}")
    if frames_per_item < 1:
        raise ValueError("frames_per_item must be >= 1")

    out_dir = Path(out_dir)
    (out_dir / "meshes").mkdir(parents=True, exist_ok=True)
    (out_dir / "embeddings").mkdir(exist_ok=True)

    rig = generate_rig(DEFAULT_POLAR_DEG, views_per_frame, radius=2.5)
    export_rig(rig, out_dir / "poses.json")

    frames = [f"f{j:02d}" for j in range(frames_per_item)]
    items: list[ItemRecord] = []
    input_embs: list[Embedding] = []
    render_embs: list[Embedding] = []

    n_cat = len(cat_families)
    log_lo, log_hi = np.log(v_lo), np.log(v_hi)
    band_width = (log_hi - log_lo) / n_cat
    for i in range(n_items):
        item_id = f"item_{i:04d}"
        cat_index = i % n_cat
        category, family = cat_families[cat_index]
        rng = np.random.default_rng([seed, 1000 + i])

        band_lo = log_lo + cat_index * band_width
        gt_volume = float(np.exp(rng.uniform(band_lo, band_lo + band_width)))
        base = _item_mesh(family, rng, blob_seed=seed * 100003 + i)
        base = geometry.rescale_mesh(base, gt_volume / geometry.signed_volume(base))
        recon = geometry.normalize_to_unit_sphere(base)

        mesh_rel = str(PurePosixPath("meshes") / f"{item_id}.obj")
        mesh_abs = out_dir / mesh_rel
        geometry.save_mesh(recon, mesh_abs)
        # reload so the cached volume matches the 9-significant-digit file exactly
        stored = geometry.load_mesh(mesh_abs)
        recon_volume = geometry.signed_volume(stored)

        record = ItemRecord(
            item_id=item_id,
            category=category,
            gt_volume_ml=gt_volume,
            recon_mesh_path=mesh_rel,
            recon_volume_ml=recon_volume,
            frames=list(frames),
        )
        items.append(record)

        for frame in frames:
            input_embs.append(
                synthetic_encode_input(
                    record, frame, noise_sigma, dim, seed, mesh=stored
                )
            )
            for pose in rig:
                render_embs.append(
                    synthetic_encode_render(
                        stored, pose, dim, seed, id_prefix=f"{item_id}/{frame}"
                    )
                )

    write_embeddings(input_embs, out_dir / "embeddings" / "input.emb")
    write_embeddings(render_embs, out_dir / "embeddings" / "render.emb")

    manifest = Manifest(
        dataset_name=f"synthetic-{n_items}x{len(cat_families)}",
        dim=dim,
        seed=seed,
        items=items,
        base_dir=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# feature assembly for training
# ---------------------------------------------------------------------------


def group_renders_by_frame(render_embs: list[Embedding]) -> dict[str, list[Embedding]]:
    """Map "item/frame" -> render embeddings sorted by view index."""
    grouped: dict[str, list[tuple[int, Embedding]]] = {}
    for emb in render_embs:
        prefix, _, view = emb.id.rpartition("/")
        if not prefix:
            raise ValueError(f"render id {emb.id!r} lacks an item/frame prefix")
        grouped.setdefault(prefix, []).append((int(view), emb))
    return {
        key: [emb for _, emb in sorted(pairs, key=lambda p: p[0])]
        for key, pairs in grouped.items()
    }


def assemble_features(
    manifest: Manifest,
    item_ids: list[str],
    input_embs: list[Embedding],
    render_embs: list[Embedding],
    mode: str,
    k_train_frames: int = DEFAULT_TRAIN_FRAMES,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Build the (features, scale targets) training arrays for a mode.

    Rows enumerate (item, sampled frame, view) triples, so the loss weights
    every mode of the pairing ablation identically; input_only repeats the
    frame feature across that frame's views (or contributes a single row per
    frame when no render embeddings are supplied at all).
    """
    if mode not in ("pair", "input_only", "render_only"):
        raise ValueError(f"unknown mode {mode!r}")
    inputs_by_id = {emb.id: emb for emb in input_embs}
    renders = group_renders_by_frame(render_embs) if render_embs else {}
    rows: list[np.ndarray] = []
    targets: list[float] = []
    for item_id in item_ids:
        item = manifest.item(item_id)
        target = compute_scale_target(item.gt_volume_ml, item.recon_volume_ml)
        for frame in select_frames(item, "train", k_train_frames, seed):
            key = f"{item_id}/{frame}"
            input_emb = inputs_by_id.get(key)
            if input_emb is None and mode != "render_only":
                raise ValueError(f"missing input embedding for {key!r}")
            frame_renders = renders.get(key, [])
            if not frame_renders:
                if mode != "input_only":
                    raise ValueError(f"missing render embeddings for {key!r}")
                rows.append(input_emb.vector)
                targets.append(target)
                continue
            for render in frame_renders:
                if mode == "pair":
                    rows.append(np.concatenate([input_emb.vector, render.vector]))
                elif mode == "input_only":
                    rows.append(input_emb.vector)
                else:
                    rows.append(render.vector)
                targets.append(target)
    return np.asarray(rows, dtype=np.float64), np.asarray(targets, dtype=np.float64)
