"""realscale: recover real-world physical scale for single-view 3D reconstructions.

The package is organized as small, numpy-backed modules:

* :mod:`realscale.geometry` -- triangle meshes, signed volume, watertightness,
  rescaling, procedural primitives.
* :mod:`realscale.camrig` -- the spherical multi-view camera rig and pose export.
* :mod:`realscale.embedding` -- the EMB1 embedding container, feature pairing,
  and deterministic synthetic encoders.
* :mod:`realscale.scalereg` -- the scale-factor MLP: training, inference,
  checkpoints.
* :mod:`realscale.corpus` -- manifests, stratified splits, synthetic corpora.
* :mod:`realscale.evaluation` -- volume metrics, baselines, reports.
* :mod:`realscale.nutrition` -- volume-to-energy conversion.
* :mod:`realscale.cli` -- the ``realscale`` command-line pipeline.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    TriangleMesh,
    bounding_sphere,
    generate_primitive,
    is_watertight,
    load_mesh,
    normalize_to_unit_sphere,
    rescale_mesh,
    save_mesh,
    signed_volume,
)
from .camrig import ViewPose, generate_rig, pose_to_position  # noqa: F401
from .embedding import (  # noqa: F401
    Embedding,
    pair,
    read_embeddings,
    subset_views,
    write_embeddings,
)
from .scalereg import (  # noqa: F401
    RegressorParams,
    TrainConfig,
    compute_scale_target,
    predict_item,
    train,
)
from .corpus import (  # noqa: F401
    ItemRecord,
    Manifest,
    generate_synthetic_corpus,
    load_manifest,
    save_manifest,
    stratified_split,
)
from .evaluation import MetricsReport, Prediction, evaluate  # noqa: F401
