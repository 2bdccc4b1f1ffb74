"""Triangle-mesh geometry: loading, volume, watertightness, rescaling.

Conventions used throughout the package:

* 1 model unit = 1 cm, so a signed volume of 1.0 is reported as 1 mL.
* Faces wind counter-clockwise when seen from outside; outward-oriented
  watertight meshes therefore have positive signed volume.
* The bounding sphere is centroid-based (centroid + max vertex distance),
  not minimal. That is all the camera rig and canonical normalization need.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import KeyedStream


class MeshParseError(ValueError):
    """Raised when an OBJ/PLY file cannot be parsed into a valid mesh."""


@dataclass
class TriangleMesh:
    """Vertex/face soup with triangular faces.

    vertices: (n, 3) float64 array, coordinates in centimeters.
    faces:    (m, 3) int array of indices into ``vertices``.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (n, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must have shape (m, 3)")
        if len(self.faces):
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ValueError("face index out of range")
            degenerate = (
                (self.faces[:, 0] == self.faces[:, 1])
                & (self.faces[:, 1] == self.faces[:, 2])
            )
            if degenerate.any():
                raise ValueError(
                    f"degenerate face at index {int(np.argmax(degenerate))}"
                )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.faces.copy())


def signed_volume(mesh: TriangleMesh) -> float:
    """Signed enclosed volume in mL via the divergence theorem.

    Sums (1/6) * v0 . (v1 x v2) over all faces. For watertight meshes with
    outward winding this equals the enclosed volume; open meshes return the
    raw signed sum and the caller decides what it means.
    """
    if mesh.n_faces == 0:
        return 0.0
    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->", v0, np.cross(v1, v2)) / 6.0)


def is_watertight(mesh: TriangleMesh) -> bool:
    """True iff every undirected edge is shared by exactly two opposite-winding faces.

    Equivalently: no directed edge repeats, and every directed edge's reverse
    is present. Holds for disjoint unions of closed surfaces.
    """
    if mesh.n_faces == 0:
        return False
    f = mesh.faces
    directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    counts = Counter(map(tuple, directed.tolist()))
    if any(c != 1 for c in counts.values()):
        return False
    return all((b, a) in counts for (a, b) in counts)


def rescale_mesh(mesh: TriangleMesh, v_scale: float) -> TriangleMesh:
    """Scale a mesh so its volume is multiplied by ``v_scale``.

    The linear factor applied to every vertex is the cube root of ``v_scale``;
    connectivity is untouched.
    """
    if not (v_scale > 0):
        raise ValueError(f"v_scale must be positive, got {v_scale}")
    linear = np.cbrt(v_scale)
    return TriangleMesh(mesh.vertices * linear, mesh.faces.copy())


def bounding_sphere(mesh: TriangleMesh) -> tuple[np.ndarray, float]:
    """Centroid-based bounding sphere: (vertex centroid, max distance to it)."""
    if mesh.n_vertices == 0:
        raise ValueError("empty mesh has no bounding sphere")
    center = mesh.vertices.mean(axis=0)
    radius = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    return center, radius


def normalize_to_unit_sphere(mesh: TriangleMesh) -> TriangleMesh:
    """Center the vertex centroid at the origin and scale the bounding radius to 1.

    This is the canonical-space normalization applied to reconstructed meshes
    before view rendering; it deliberately erases absolute scale.
    """
    center, radius = bounding_sphere(mesh)
    if radius <= 0:
        raise ValueError("cannot normalize a mesh with zero bounding radius")
    return TriangleMesh((mesh.vertices - center) / radius, mesh.faces.copy())


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def _triangulate(indices: list[int], line_no: int) -> list[tuple[int, int, int]]:
    if len(indices) == 3:
        return [(indices[0], indices[1], indices[2])]
    if len(indices) == 4:
        # fan around the first vertex; both triangles share the diagonal 0-2
        return [
            (indices[0], indices[1], indices[2]),
            (indices[0], indices[2], indices[3]),
        ]
    raise MeshParseError(
        f"line {line_no}: face with {len(indices)} vertices "
        "(only triangles and quads are supported)"
    )


def _load_obj(path: Path) -> TriangleMesh:
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshParseError(f"line {line_no}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise MeshParseError(f"line {line_no}: bad vertex: {exc}") from exc
            elif tag == "f":
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise MeshParseError(
                            f"line {line_no}: bad face index {token!r}"
                        ) from exc
                    if i < 0:
                        i = len(vertices) + 1 + i  # OBJ relative indexing
                    if not (1 <= i <= len(vertices)):
                        raise MeshParseError(
                            f"line {line_no}: face index {i} out of range "
                            f"(have {len(vertices)} vertices)"
                        )
                    idx.append(i - 1)
                faces.extend(_triangulate(idx, line_no))
            # other records (vn, vt, o, g, s, usemtl, ...) are ignored
    return _finish_load(vertices, faces, path)


def _load_ply(path: Path) -> TriangleMesh:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshParseError("line 1: not a PLY file")

    n_vertices = n_faces = None
    vertex_props: list[str] = []
    current_element = None
    header_end = None
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise MeshParseError(f"line {line_no}: only ASCII PLY is supported")
        elif parts[0] == "element":
            current_element = parts[1]
            if parts[1] == "vertex":
                n_vertices = int(parts[2])
            elif parts[1] == "face":
                n_faces = int(parts[2])
        elif parts[0] == "property" and current_element == "vertex":
            if parts[1] != "list":
                vertex_props.append(parts[-1])
        elif parts[0] == "end_header":
            header_end = line_no
            break
    if header_end is None or n_vertices is None or n_faces is None:
        raise MeshParseError("PLY header missing end_header or element counts")
    try:
        ix, iy, iz = (vertex_props.index(a) for a in ("x", "y", "z"))
    except ValueError:
        raise MeshParseError("PLY vertex element lacks x/y/z properties") from None

    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    body = lines[header_end:]
    if len(body) < n_vertices + n_faces:
        raise MeshParseError(
            f"PLY body truncated: expected {n_vertices + n_faces} records, "
            f"found {len(body)}"
        )
    for offset in range(n_vertices):
        line_no = header_end + 1 + offset
        parts = body[offset].split()
        try:
            vertices.append([float(parts[ix]), float(parts[iy]), float(parts[iz])])
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"line {line_no}: bad vertex record") from exc
    for offset in range(n_faces):
        line_no = header_end + 1 + n_vertices + offset
        parts = body[n_vertices + offset].split()
        try:
            count = int(parts[0])
            idx = [int(x) for x in parts[1 : 1 + count]]
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"line {line_no}: bad face record") from exc
        if len(idx) != count:
            raise MeshParseError(f"line {line_no}: face record shorter than its count")
        for i in idx:
            if not (0 <= i < n_vertices):
                raise MeshParseError(
                    f"line {line_no}: face index {i} out of range "
                    f"(have {n_vertices} vertices)"
                )
        faces.extend(_triangulate(idx, line_no))
    return _finish_load(vertices, faces, path)


def _finish_load(vertices, faces, path: Path) -> TriangleMesh:
    if not vertices or not faces:
        raise MeshParseError(f"{path.name}: no vertices or no faces")
    try:
        return TriangleMesh(np.array(vertices), np.array(faces))
    except ValueError as exc:
        raise MeshParseError(f"{path.name}: {exc}") from exc


def load_mesh(path: str | Path) -> TriangleMesh:
    """Load an ASCII OBJ or ASCII PLY mesh; quads are fan-triangulated."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return _load_ply(path)
    if suffix == ".obj":
        return _load_obj(path)
    raise MeshParseError(f"unsupported mesh format {suffix!r} (use .obj or .ply)")


def save_mesh(mesh: TriangleMesh, path: str | Path) -> None:
    """Write ASCII OBJ with 9 significant digits per coordinate."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# ---------------------------------------------------------------------------
# procedural primitives
# ---------------------------------------------------------------------------

_MAX_SUBDIVISIONS = 6


def _cube(edge: float) -> TriangleMesh:
    h = edge / 2.0
    vertices = np.array(
        [
            [-h, -h, -h],
            [h, -h, -h],
            [h, h, -h],
            [-h, h, -h],
            [-h, -h, h],
            [h, -h, h],
            [h, h, h],
            [-h, h, h],
        ]
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom (z = -h)
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # front (y = -h)
            [2, 3, 7], [2, 7, 6],  # back
            [1, 2, 6], [1, 6, 5],  # right
            [3, 0, 4], [3, 4, 7],  # left
        ]
    )
    return TriangleMesh(vertices, faces)


def _icosahedron_unit() -> tuple[list[np.ndarray], list[tuple[int, int, int]]]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return verts, faces


def _icosphere_unit(subdivisions: int) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = _icosahedron_unit()
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            cached = midpoint_cache.get(key)
            if cached is not None:
                return cached
            m = verts[a] + verts[b]
            m /= np.linalg.norm(m)
            verts.append(m)
            midpoint_cache[key] = len(verts) - 1
            return midpoint_cache[key]

        new_faces = []
        for (a, b, c) in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = new_faces
    return np.array(verts), np.array(faces)


def _icosphere(radius: float, subdivisions: int) -> TriangleMesh:
    verts, faces = _icosphere_unit(subdivisions)
    return TriangleMesh(verts * radius, faces)


def _cylinder(radius: float, height: float, segments: int) -> TriangleMesh:
    if segments < 3:
        raise ValueError(f"cylinder needs at least 3 segments, got {segments}")
    angles = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])
    z_lo, z_hi = -height / 2.0, height / 2.0
    bottom = np.column_stack([ring, np.full(segments, z_lo)])
    top = np.column_stack([ring, np.full(segments, z_hi)])
    vertices = np.vstack([bottom, top, [[0.0, 0.0, z_lo]], [[0.0, 0.0, z_hi]]])
    c_lo, c_hi = 2 * segments, 2 * segments + 1

    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([i, j, segments + j])          # side, lower triangle
        faces.append([i, segments + j, segments + i])  # side, upper triangle
        faces.append([c_lo, j, i])                  # bottom cap, faces -z
        faces.append([c_hi, segments + i, segments + j])  # top cap, faces +z
    return TriangleMesh(vertices, np.array(faces))


def _blob(radius: float, subdivisions: int, seed: int, amplitude: float) -> TriangleMesh:
    """Icosphere with a smooth, seeded radial perturbation.

    The radial field is a sum of a few low-frequency sinusoids of linear forms
    of the unit direction, so it is smooth over the sphere and identical for
    identical seeds.
    """
    if not (0 <= amplitude < 1):
        raise ValueError(f"blob amplitude must be in [0, 1), got {amplitude}")
    verts, faces = _icosphere_unit(subdivisions)
    stream = KeyedStream(seed, "blob")
    n_terms = 6
    dirs = []
    freqs = []
    phases = []
    for _ in range(n_terms):
        d = np.array([stream.next_normal() for _ in range(3)])
        dirs.append(d / np.linalg.norm(d))
        freqs.append(stream.uniform(1.0, 3.5))
        phases.append(stream.uniform(0.0, 2.0 * math.pi))
    bump = np.zeros(len(verts))
    for d, f, p in zip(dirs, freqs, phases):
        bump += np.sin(f * (verts @ d) * math.pi + p)
    bump /= n_terms
    radial = 1.0 + amplitude * bump
    return TriangleMesh(verts * radial[:, None] * radius, faces)


def generate_primitive(kind: str, seed: int = 0, **params) -> TriangleMesh:
    """Build a watertight primitive: cube, icosphere, cylinder, or blob.

    Parameters by kind (all dimensions in cm):
      cube:      edge (default 1.0)
      icosphere: radius (1.0), subdivisions (3)
      cylinder:  radius (1.0), height (2.0), segments (64)
      blob:      radius (1.0), subdivisions (3), amplitude (0.25); uses ``seed``
    """
    def positive(name, default):
        value = float(params.pop(name, default))
        if not (value > 0):
            raise ValueError(f"{kind}: {name} must be positive, got {value}")
        return value

    def subdiv(default):
        value = int(params.pop("subdivisions", default))
        if not (0 <= value <= _MAX_SUBDIVISIONS):
            raise ValueError(
                f"{kind}: subdivisions must be in [0, {_MAX_SUBDIVISIONS}], got {value}"
            )
        return value

    kind = kind.lower()
    if kind == "cube":
        mesh = _cube(positive("edge", 1.0))
    elif kind == "icosphere":
        mesh = _icosphere(positive("radius", 1.0), subdiv(3))
    elif kind == "cylinder":
        mesh = _cylinder(
            positive("radius", 1.0),
            positive("height", 2.0),
            int(params.pop("segments", 64)),
        )
    elif kind == "blob":
        mesh = _blob(
            positive("radius", 1.0),
            subdiv(3),
            seed,
            float(params.pop("amplitude", 0.25)),
        )
    else:
        raise ValueError(f"unknown primitive kind {kind!r}")
    if params:
        raise ValueError(f"{kind}: unexpected parameters {sorted(params)}")
    return mesh
