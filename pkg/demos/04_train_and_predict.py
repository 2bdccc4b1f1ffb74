"""Train the scale regressor on a synthetic corpus and predict test volumes.

The regressor is a small MLP over [input embedding, render embedding] pairs,
trained with a normalized L1 loss so small objects count as much as large
ones. At inference the per-view predictions of an item are averaged.

This demo uses a reduced corpus and epoch count so it finishes in under a
minute; demos/05 evaluates the predictions it writes.

Run: python demos/04_train_and_predict.py
"""

import tempfile
from pathlib import Path

from realscale.corpus import (
    assemble_features,
    generate_synthetic_corpus,
    group_renders_by_frame,
    select_frames,
    stratified_split,
)
from realscale.embedding import read_embeddings
from realscale.evaluation import Prediction, save_predictions, volume_from_scale
from realscale.scalereg import (
    TrainConfig,
    load_checkpoint,
    predict_item,
    save_checkpoint,
    train,
)

out = Path(tempfile.mkdtemp(prefix="realscale_demo_"))
manifest = generate_synthetic_corpus(
    n_items=60, categories=4, volume_range_ml=(5.0, 1500.0), noise_sigma=0.1,
    views_per_frame=15, frames_per_item=2, seed=7, out_dir=out, dim=32,
)
inputs = read_embeddings(out / "embeddings" / "input.emb")
renders = read_embeddings(out / "embeddings" / "render.emb")
train_ids, test_ids = stratified_split(manifest, 0.2, seed=0)

features, targets = assemble_features(manifest, train_ids, inputs, renders, "pair")
print(f"training on {len(targets)} (input, render) pairs of width {features.shape[1]}")

cfg = TrainConfig(epochs=120, batch_size=64, base_lr=3e-3, lr_decay=0.8,
                  lr_step_epochs=20, seed=0, mode="pair")
params, history = train(features, targets, cfg, hidden_dims=(128, 32))
print(f"loss: epoch 1 {history[0]:.3f} -> epoch {len(history)} {history[-1]:.3f}")

ckpt = out / "model.ckpt"
save_checkpoint(params, cfg, history, ckpt)
params, _, _ = load_checkpoint(ckpt)
print(f"checkpoint round trip ok ({params.parameter_count()} parameters)")

inputs_by_id = {e.id: e for e in inputs}
render_groups = group_renders_by_frame(renders)
predictions = []
for item_id in test_ids:
    item = manifest.item(item_id)
    frame = select_frames(item, "inference")[0]
    key = f"{item_id}/{frame}"
    v_hat = predict_item(params, inputs_by_id[key], render_groups[key], m=15)
    predictions.append(Prediction(
        item_id, v_hat, volume_from_scale(v_hat, item.recon_volume_ml), 15
    ))

save_predictions(predictions, out / "predictions.json")
print(f"\npredicted {len(predictions)} test items -> {out / 'predictions.json'}")
for p in predictions[:6]:
    gt = manifest.item(p.item_id).gt_volume_ml
    print(f"  {p.item_id}: estimated {p.est_volume_ml:8.1f} mL "
          f"vs true {gt:8.1f} mL ({100 * abs(p.est_volume_ml - gt) / gt:5.1f}% off)")
print(f"\ncorpus + predictions kept in {out} for demos/05_metrics_and_energy.py")
