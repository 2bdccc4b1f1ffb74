import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from realscale.camrig import ViewPose, generate_rig
from realscale.corpus import ItemRecord
from realscale.embedding import (
    Embedding,
    EmbeddingFormatError,
    pair,
    read_embeddings,
    subset_views,
    synthetic_encode_input,
    synthetic_encode_render,
    write_embeddings,
)
from realscale.geometry import (
    generate_primitive,
    normalize_to_unit_sphere,
    rescale_mesh,
)


def make_item(item_id="item_0000", category="apple", gt=100.0):
    return ItemRecord(
        item_id=item_id,
        category=category,
        gt_volume_ml=gt,
        recon_mesh_path="unused.obj",
        recon_volume_ml=1.0,
        frames=["f00"],
    )


@pytest.fixture(scope="module")
def canonical_blob():
    mesh = generate_primitive("blob", seed=7, subdivisions=2, amplitude=0.25)
    return normalize_to_unit_sphere(mesh)


class TestEmb1File:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        embs = [
            Embedding(f"item_{i}/f00", rng.standard_normal(16).astype(np.float32))
            for i in range(5)
        ]
        path = tmp_path / "x.emb"
        write_embeddings(embs, path)
        back = read_embeddings(path)
        assert [e.id for e in back] == [e.id for e in embs]
        for a, b in zip(embs, back):
            assert a.vector.tobytes() == b.vector.tobytes()

    def test_file_size_arithmetic(self, tmp_path):
        embs = [Embedding(f"i{k}", np.zeros(4, dtype=np.float32)) for k in range(3)]
        path = tmp_path / "x.emb"
        write_embeddings(embs, path)
        expected = 16 + sum(4 + len(e.id.encode()) + 4 * 4 for e in embs)
        assert path.stat().st_size == expected

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.emb"
        path.write_bytes(b"XEMB" + b"\x00" * 12)
        with pytest.raises(EmbeddingFormatError, match="offset 0"):
            read_embeddings(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "x.emb"
        path.write_bytes(b"EMB1" + struct.pack("<III", 99, 4, 0))
        with pytest.raises(EmbeddingFormatError, match="version 99"):
            read_embeddings(path)

    def test_truncated_reports_offset(self, tmp_path):
        embs = [Embedding("abc", np.ones(4, dtype=np.float32))]
        path = tmp_path / "x.emb"
        write_embeddings(embs, path)
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(EmbeddingFormatError, match="offset"):
            read_embeddings(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        embs = [Embedding("abc", np.ones(4, dtype=np.float32))]
        path = tmp_path / "x.emb"
        write_embeddings(embs, path)
        path.write_bytes(path.read_bytes() + b"zz")
        with pytest.raises(EmbeddingFormatError, match="trailing"):
            read_embeddings(path)

    def test_mixed_dimension_write_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="dimension"):
            write_embeddings(
                [
                    Embedding("a", np.zeros(4, dtype=np.float32)),
                    Embedding("b", np.zeros(5, dtype=np.float32)),
                ],
                tmp_path / "x.emb",
            )

    def test_empty_write_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_embeddings([], tmp_path / "x.emb")

    @given(
        records=st.lists(
            st.tuples(
                st.text(min_size=1, max_size=20),
                st.lists(
                    st.floats(
                        min_value=-65504.0,
                        max_value=65504.0,
                        allow_nan=False,
                        width=32,
                    ),
                    min_size=3,
                    max_size=3,
                ),
            ),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, records):
        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.emb"
            embs = [
                Embedding(f"{i}:{name}", np.array(vec, dtype=np.float32))
                for i, (name, vec) in enumerate(records)
            ]
            write_embeddings(embs, path)
            back = read_embeddings(path)
            for a, b in zip(embs, back):
                assert a.id == b.id
                assert a.vector.tobytes() == b.vector.tobytes()


class TestPair:
    def test_default_pair_width(self):
        a = Embedding("a", np.zeros(768, dtype=np.float32))
        b = Embedding("b", np.zeros(768, dtype=np.float32))
        assert len(pair(a, b)) == 1536

    def test_order_is_semantic(self):
        a = Embedding("a", np.array([1.0, 2.0], dtype=np.float32))
        b = Embedding("b", np.array([3.0, 4.0], dtype=np.float32))
        assert pair(a, b).tolist() == [1.0, 2.0, 3.0, 4.0]
        assert not np.array_equal(pair(a, b), pair(b, a))

    def test_dim_mismatch(self):
        a = Embedding("a", np.zeros(768, dtype=np.float32))
        b = Embedding("b", np.zeros(512, dtype=np.float32))
        with pytest.raises(ValueError, match="mismatch"):
            pair(a, b)


class TestSubsetViews:
    def _views(self, n):
        return [Embedding(f"x/f0/{i}", np.zeros(8, dtype=np.float32)) for i in range(n)]

    def test_identity(self):
        views = self._views(75)
        assert subset_views(views, 75) == views

    def test_stride_three(self):
        views = self._views(75)
        picked = subset_views(views, 25)
        assert [int(e.id.split("/")[-1]) for e in picked] == list(range(0, 75, 3))

    def test_out_of_range(self):
        views = self._views(75)
        with pytest.raises(ValueError):
            subset_views(views, 76)
        with pytest.raises(ValueError):
            subset_views(views, 0)

    @pytest.mark.parametrize("n,m", [(75, 5), (75, 15), (75, 25), (75, 50), (10, 3), (7, 7)])
    def test_no_duplicates_and_sorted(self, n, m):
        picked = subset_views(self._views(n), m)
        indices = [int(e.id.split("/")[-1]) for e in picked]
        assert len(set(indices)) == m
        assert indices == sorted(indices)
        assert all(0 <= i < n for i in indices)


class TestSyntheticInput:
    def test_volume_component_exact_when_noiseless(self, canonical_blob):
        emb = synthetic_encode_input(
            make_item(gt=100.0), "f00", noise_sigma=0.0, dim=16, seed=0,
            mesh=canonical_blob,
        )
        assert emb.vector[0] == 2.0
        assert emb.id == "item_0000/f00"

    def test_deterministic(self, canonical_blob):
        kwargs = dict(noise_sigma=0.1, dim=16, seed=42, mesh=canonical_blob)
        a = synthetic_encode_input(make_item(), "f01", **kwargs)
        b = synthetic_encode_input(make_item(), "f01", **kwargs)
        assert a.vector.tobytes() == b.vector.tobytes()

    def test_noise_spread_matches_sigma(self, canonical_blob):
        """Monte-Carlo: std of component 0 around log10(gt) is sigma/ln(10)."""
        item = make_item(gt=250.0)
        deviations = [
            synthetic_encode_input(
                item, f"f{k}", noise_sigma=0.1, dim=8, seed=1, mesh=canonical_blob
            ).vector[0]
            - math.log10(250.0)
            for k in range(10_000)
        ]
        observed = float(np.std(deviations))
        expected = 0.1 / math.log(10.0)
        assert observed == pytest.approx(expected, rel=0.05)

    def test_nonpositive_volume_rejected(self, canonical_blob):
        with pytest.raises(ValueError):
            synthetic_encode_input(
                make_item(gt=-3.0), "f00", noise_sigma=0.0, dim=8, seed=0,
                mesh=canonical_blob,
            )

    def test_category_signature_shared_within_category(self, canonical_blob):
        a = synthetic_encode_input(
            make_item("i1", "apple"), "f00", 0.0, 32, 0, mesh=canonical_blob
        )
        b = synthetic_encode_input(
            make_item("i2", "apple"), "f00", 0.0, 32, 0, mesh=canonical_blob
        )
        c = synthetic_encode_input(
            make_item("i3", "bread"), "f00", 0.0, 32, 0, mesh=canonical_blob
        )
        # same category: signatures nearly aligned; different: nearly orthogonal
        def tail_cos(x, y):
            tx, ty = x.vector[4:], y.vector[4:]
            return float(tx @ ty / (np.linalg.norm(tx) * np.linalg.norm(ty)))

        assert tail_cos(a, b) > 0.9
        assert abs(tail_cos(a, c)) < 0.5


class TestSyntheticRender:
    def test_requires_normalized_mesh(self):
        mesh = generate_primitive("cube", edge=2.0)
        pose = ViewPose(0, 0.0, 0.0, 2.5)
        with pytest.raises(ValueError, match="normalized"):
            synthetic_encode_render(mesh, pose, 16, 0)

    def test_cube_symmetry_across_azimuth(self):
        cube = normalize_to_unit_sphere(generate_primitive("cube", edge=1.0))
        a = synthetic_encode_render(cube, ViewPose(0, 0.0, 0.0, 2.5), 16, 0)
        b = synthetic_encode_render(cube, ViewPose(0, 0.0, 90.0, 2.5), 16, 0)
        np.testing.assert_allclose(a.vector[:7], b.vector[:7], atol=1e-6)

    def test_scale_cancels_exactly(self):
        mesh = generate_primitive("blob", seed=3, subdivisions=2, amplitude=0.2)
        pose = ViewPose(5, 45.0, 72.0, 2.5)
        # 512 = 8^3: the linear factor is exact in floating point
        scaled = rescale_mesh(mesh, 512.0)
        a = synthetic_encode_render(
            normalize_to_unit_sphere(mesh), pose, 16, 9, id_prefix="x/f0"
        )
        b = synthetic_encode_render(
            normalize_to_unit_sphere(scaled), pose, 16, 9, id_prefix="x/f0"
        )
        assert a.vector.tobytes() == b.vector.tobytes()

    def test_distinct_poses_differ(self, canonical_blob):
        a = synthetic_encode_render(canonical_blob, ViewPose(0, 0.0, 0.0, 2.5), 16, 0)
        b = synthetic_encode_render(canonical_blob, ViewPose(1, 45.0, 108.0, 2.5), 16, 0)
        assert not np.allclose(a.vector[:7], b.vector[:7])

    def test_id_convention(self, canonical_blob):
        pose = generate_rig([0.0], 4, 2.5)[2]
        emb = synthetic_encode_render(canonical_blob, pose, 16, 0, id_prefix="item_9/f01")
        assert emb.id == "item_9/f01/2"


class TestEmbeddingValidation:
    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            Embedding("x", np.array([1.0, np.nan], dtype=np.float32))

    def test_small_dim_rejected_by_encoders(self, canonical_blob):
        with pytest.raises(ValueError, match="dim"):
            synthetic_encode_input(
                make_item(), "f00", 0.0, 4, 0, mesh=canonical_blob
            )
