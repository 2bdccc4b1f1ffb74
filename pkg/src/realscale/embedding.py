"""Embeddings, the EMB1 binary container, and the synthetic encoder pair.

EMB1 layout (all integers little-endian):

    bytes 0-3   magic ``EMB1``
    u32         version (currently 1)
    u32         dimension D
    u32         record count
    per record: u32 id byte-length, UTF-8 id bytes, D float32 values

Id conventions: input-frame embeddings are named ``item/frame``; rendered-view
embeddings are named ``item/frame/view_index``.

The synthetic encoders stand in for a frozen pretrained image encoder so the
pipeline runs end to end without images or model weights:

* the input-frame encoder sees absolute size -- its first component is
  log10 of the ground-truth volume perturbed by one multiplicative noise
  draw per (item, frame), components 1-3 are bounding-box extent ratios of
  the canonically normalized reconstruction, and the rest is a per-category
  signature direction plus small per-frame noise;
* the render encoder sees only the canonically normalized mesh from a view
  pose, so its features carry shape but, by construction, no absolute scale.

All synthetic randomness flows through :class:`realscale.rng.KeyedStream`
keyed by (seed, embedding id), making files reproducible bit for bit.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camrig import ViewPose, pose_to_position, pose_up_vector
from .geometry import TriangleMesh, bounding_sphere
from .rng import KeyedStream

MAGIC = b"EMB1"
VERSION = 1
DEFAULT_DIM = 768  # paired features are then 1536 long
MIN_SYNTHETIC_DIM = 8

_CATEGORY_NOISE = 0.02  # per-frame jitter on the category signature
_RENDER_NOISE = 0.05    # per-view jitter on the shape signature


class EmbeddingFormatError(ValueError):
    """Raised for malformed EMB1 files; the message carries a byte offset."""


@dataclass
class Embedding:
    id: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float32)
        if self.vector.ndim != 1:
            raise ValueError("embedding vector must be one-dimensional")
        if not np.isfinite(self.vector).all():
            raise ValueError(f"embedding {self.id!r} has non-finite components")

    @property
    def dim(self) -> int:
        return len(self.vector)


# PairedFeature is plain data: a float32 vector of length 2 * D,
# input embedding first.
PairedFeature = np.ndarray


def write_embeddings(embeddings: list[Embedding], path: str | Path) -> None:
    if not embeddings:
        raise ValueError("refusing to write an empty embedding file")
    dim = embeddings[0].dim
    for emb in embeddings:
        if emb.dim != dim:
            raise ValueError(
                f"mixed dimensions: {emb.id!r} has {emb.dim}, expected {dim}"
            )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, dim, len(embeddings)))
        for emb in embeddings:
            id_bytes = emb.id.encode("utf-8")
            fh.write(struct.pack("<I", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(emb.vector.astype("<f4").tobytes())


def read_embeddings(path: str | Path) -> list[Embedding]:
    data = Path(path).read_bytes()

    def need(offset: int, count: int, what: str) -> None:
        if offset + count > len(data):
            raise EmbeddingFormatError(
                f"truncated file: {what} at byte offset {offset} needs "
                f"{count} bytes, file has {len(data)}"
            )

    need(0, 16, "header")
    if data[:4] != MAGIC:
        raise EmbeddingFormatError(
            f"bad magic {data[:4]!r} at byte offset 0 (expected {MAGIC!r})"
        )
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise EmbeddingFormatError(
            f"unsupported version {version} at byte offset 4"
        )
    if dim == 0:
        raise EmbeddingFormatError("zero dimension at byte offset 8")
    offset = 16
    out: list[Embedding] = []
    for _ in range(count):
        need(offset, 4, "id length")
        (id_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        need(offset, id_len, "id bytes")
        try:
            emb_id = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(
                f"invalid UTF-8 id at byte offset {offset}"
            ) from exc
        offset += id_len
        need(offset, 4 * dim, "vector")
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        out.append(Embedding(emb_id, vector.copy()))
    if offset != len(data):
        raise EmbeddingFormatError(
            f"{len(data) - offset} trailing bytes at byte offset {offset}"
        )
    return out


def pair(input_emb: Embedding, render_emb: Embedding) -> PairedFeature:
    """Concatenate input features then render features; order is semantic."""
    if input_emb.dim != render_emb.dim:
        raise ValueError(
            f"dimension mismatch: input {input_emb.dim} vs render {render_emb.dim}"
        )
    return np.concatenate([input_emb.vector, render_emb.vector])


def subset_views(render_embs: list[Embedding], m: int) -> list[Embedding]:
    """Pick m views spread evenly over a view-index-sorted render list.

    Selected indices are round(j * n / m) for j = 0..m-1 (round half up);
    for m <= n consecutive indices differ by at least one, so there are no
    duplicates.
    """
    n = len(render_embs)
    if not (1 <= m <= n):
        raise ValueError(f"m must be in [1, {n}], got {m}")
    indices = [math.floor(j * n / m + 0.5) for j in range(m)]
    return [render_embs[i] for i in indices]


# ---------------------------------------------------------------------------
# synthetic encoders
# ---------------------------------------------------------------------------


def _check_dim(dim: int) -> None:
    if dim < MIN_SYNTHETIC_DIM:
        raise ValueError(f"synthetic encoders need dim >= {MIN_SYNTHETIC_DIM}, got {dim}")


def _extent_ratios(mesh: TriangleMesh) -> np.ndarray:
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    peak = extent.max()
    if peak <= 0:
        raise ValueError("mesh has zero extent")
    return extent / peak


def category_signature(category: str, dim: int, seed: int) -> np.ndarray:
    """Unit-norm signature direction for a category, stable across items."""
    stream = KeyedStream(seed, f"category:{category}")
    raw = np.array(stream.normals(dim))
    return raw / np.linalg.norm(raw)


def synthetic_encode_input(
    item,
    frame_id: str,
    noise_sigma: float,
    dim: int,
    seed: int,
    mesh: TriangleMesh | None = None,
) -> Embedding:
    """Deterministic stand-in for encoding one input frame of ``item``.

    ``item`` provides ``item_id``, ``category``, ``gt_volume_ml``, and
    ``recon_mesh_path``; pass ``mesh`` to skip re-loading the reconstruction.
    The single noise draw per (item, frame) models the monocular scale
    ambiguity of that photograph.
    """
    _check_dim(dim)
    if not (item.gt_volume_ml > 0):
        raise ValueError(f"item {item.item_id!r}: gt_volume_ml must be positive")
    if mesh is None:
        from .geometry import load_mesh

        mesh = load_mesh(item.recon_mesh_path)

    emb_id = f"{item.item_id}/{frame_id}"
    stream = KeyedStream(seed, f"input:{emb_id}")
    eps = noise_sigma * stream.next_normal() if noise_sigma > 0 else 0.0

    vector = np.zeros(dim)
    vector[0] = math.log10(item.gt_volume_ml * math.exp(eps))
    vector[1:4] = _extent_ratios(mesh)
    tail = dim - 4
    signature = category_signature(item.category, tail, seed)
    frame_noise = np.array(stream.normals(tail)) * _CATEGORY_NOISE
    vector[4:] = signature + frame_noise
    return Embedding(emb_id, vector)


def synthetic_encode_render(
    canonical_mesh: TriangleMesh,
    pose: ViewPose,
    dim: int,
    seed: int,
    id_prefix: str = "",
) -> Embedding:
    """Deterministic stand-in for encoding one rendered view.

    The mesh must already be normalized to the unit bounding sphere (radius
    within 1e-6 of 1); every feature is computed from that canonical copy, so
    the embedding is invariant to any uniform rescale applied upstream.
    Features: extents of the vertex cloud projected on the two axes
    orthogonal to the view direction, their ratio, and depth statistics along
    the view ray; the remaining components are a seeded per-view signature.
    """
    _check_dim(dim)
    _, radius = bounding_sphere(canonical_mesh)
    if abs(radius - 1.0) > 1e-6:
        raise ValueError(
            f"mesh is not canonically normalized (bounding radius {radius!r})"
        )

    direction = pose_to_position(pose)
    direction = direction / np.linalg.norm(direction)
    up = pose_up_vector(pose)
    right = np.cross(up, direction)
    right /= np.linalg.norm(right)
    screen_up = np.cross(direction, right)

    verts = canonical_mesh.vertices
    proj_u = verts @ right
    proj_v = verts @ screen_up
    depth = verts @ direction
    extent_u = float(proj_u.max() - proj_u.min())
    extent_v = float(proj_v.max() - proj_v.min())

    emb_id = f"{id_prefix}/{pose.view_index}" if id_prefix else str(pose.view_index)
    stream = KeyedStream(seed, f"render:{emb_id}")

    vector = np.zeros(dim)
    vector[0] = extent_u
    vector[1] = extent_v
    vector[2] = extent_u / extent_v if extent_v > 0 else 0.0
    vector[3] = float(depth.mean())
    vector[4] = float(depth.std())
    vector[5] = float(depth.min())
    vector[6] = float(depth.max())
    tail = dim - 7
    if tail > 0:
        vector[7:] = np.array(stream.normals(tail)) * _RENDER_NOISE
    return Embedding(emb_id, vector)
