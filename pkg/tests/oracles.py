"""Independent reference implementations used only by the tests.

Everything here is deliberately written the slow, obvious way (scalar loops,
no shared code with the package) so the tests check the library against a
second, independent realization of the same math.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# voxelization volume oracle
# ---------------------------------------------------------------------------


def _voxel_count_once(verts, faces, resolution, origin, h):
    """Count voxel centers inside the surface by +z ray-crossing parity."""
    nx = ny = nz = resolution
    xs = origin[0] + (np.arange(nx) + 0.5) * h
    ys = origin[1] + (np.arange(ny) + 0.5) * h
    cols, zhits = [], []
    for f in faces:
        t = verts[f]
        normal = np.cross(t[1] - t[0], t[2] - t[0])
        if abs(normal[2]) < 1e-15:
            continue  # vertical face: measure zero for z rays
        i0 = max(0, int(np.ceil((t[:, 0].min() - origin[0]) / h - 0.5)))
        i1 = min(nx - 1, int(np.floor((t[:, 0].max() - origin[0]) / h - 0.5)))
        j0 = max(0, int(np.ceil((t[:, 1].min() - origin[1]) / h - 0.5)))
        j1 = min(ny - 1, int(np.floor((t[:, 1].max() - origin[1]) / h - 0.5)))
        if i1 < i0 or j1 < j0:
            continue
        gx, gy = np.meshgrid(xs[i0 : i1 + 1], ys[j0 : j1 + 1], indexing="ij")
        px, py = gx.ravel(), gy.ravel()
        d = (t[1, 1] - t[2, 1]) * (t[0, 0] - t[2, 0]) + (t[2, 0] - t[1, 0]) * (
            t[0, 1] - t[2, 1]
        )
        b0 = (
            (t[1, 1] - t[2, 1]) * (px - t[2, 0])
            + (t[2, 0] - t[1, 0]) * (py - t[2, 1])
        ) / d
        b1 = (
            (t[2, 1] - t[0, 1]) * (px - t[2, 0])
            + (t[0, 0] - t[2, 0]) * (py - t[2, 1])
        ) / d
        b2 = 1.0 - b0 - b1
        inside = (b0 >= 0) & (b1 >= 0) & (b2 >= 0)
        if not inside.any():
            continue
        z = b0[inside] * t[0, 2] + b1[inside] * t[1, 2] + b2[inside] * t[2, 2]
        ii = np.repeat(np.arange(i0, i1 + 1), j1 - j0 + 1)[inside]
        jj = np.tile(np.arange(j0, j1 + 1), i1 - i0 + 1)[inside]
        cols.append(ii * ny + jj)
        zhits.append(z)
    cols = np.concatenate(cols)
    zhits = np.concatenate(zhits)
    order = np.lexsort((zhits, cols))
    cols, zhits = cols[order], zhits[order]
    _, starts, counts = np.unique(cols, return_index=True, return_counts=True)
    assert (counts % 2 == 0).all(), "odd ray-crossing parity: oracle grid grazed an edge"
    rank = np.arange(len(cols)) - np.repeat(starts, counts)
    k_in = np.ceil((zhits[rank % 2 == 0] - origin[2]) / h - 0.5)
    k_out = np.ceil((zhits[rank % 2 == 1] - origin[2]) / h - 0.5)
    return float((np.clip(k_out, 0, nz) - np.clip(k_in, 0, nz)).sum())


def voxel_volume(mesh, resolution=256, n_offsets=4, seed=0):
    """Volume estimate from counting inside voxel centers on a cubical grid.

    Averages a few seeded sub-voxel grid offsets so axis-aligned faces do not
    bias the count systematically; each pass is a plain center-parity test.
    """
    verts, faces = mesh.vertices, mesh.faces
    span = (verts.max(axis=0) - verts.min(axis=0)).max()
    h = span * 1.02 / (resolution - 2)
    rng = np.random.default_rng(seed)
    totals = []
    for _ in range(n_offsets):
        origin = verts.min(axis=0) - h - rng.uniform(0.0, 1.0, size=3) * h
        totals.append(_voxel_count_once(verts, faces, resolution, origin, h) * h**3)
    return float(np.mean(totals))


# ---------------------------------------------------------------------------
# regressor oracles
# ---------------------------------------------------------------------------


def naive_forward(params, feature):
    """Straight-line scalar reimplementation of the MLP forward pass."""
    a = [float(x) for x in feature]
    n_layers = len(params.weights)
    for layer in range(n_layers):
        w, b = params.weights[layer], params.biases[layer]
        out = []
        for j in range(w.shape[1]):
            s = b[j]
            for i in range(w.shape[0]):
                s += a[i] * w[i, j]
            out.append(s)
        if layer != n_layers - 1:
            out = [max(0.0, v) for v in out]
        a = out
    return a[0]


def naive_loss(batch):
    """Double-loop normalized L1 over an items-by-views nesting."""
    total = 0.0
    count = 0
    for item_pairs in batch:
        for v, v_hat in item_pairs:
            total += abs(v - v_hat) / v
            count += 1
    return total / count


def finite_difference_grads(params, features, targets, h=1e-5):
    """Central-difference gradients of the training loss w.r.t. every parameter."""
    from realscale.scalereg import loss, _forward_batch

    def loss_at():
        v_hat = _forward_batch(params, features)
        return loss(list(zip(targets, v_hat)))

    grad_w = [np.zeros_like(w) for w in params.weights]
    grad_b = [np.zeros_like(b) for b in params.biases]
    for layer, w in enumerate(params.weights):
        it = np.nditer(w, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = w[idx]
            w[idx] = orig + h
            up = loss_at()
            w[idx] = orig - h
            down = loss_at()
            w[idx] = orig
            grad_w[layer][idx] = (up - down) / (2 * h)
    for layer, b in enumerate(params.biases):
        for idx in range(len(b)):
            orig = b[idx]
            b[idx] = orig + h
            up = loss_at()
            b[idx] = orig - h
            down = loss_at()
            b[idx] = orig
            grad_b[layer][idx] = (up - down) / (2 * h)
    return grad_w, grad_b


def fd_check_sampled(params, features, targets, n_coords, rng, h=1e-5):
    """Compare analytic vs central-difference gradient on sampled coordinates.

    Central differences are only a valid oracle where the loss is smooth, so
    coordinates whose +-h stencil crosses a ReLU or L1 kink (any activation
    mask or residual sign changes between the two evaluations) are resampled;
    at the kinks themselves only the fixed subgradient convention applies and
    no finite-difference statement can be made.

    Returns the worst relative error over n_coords accepted coordinates,
    where the relative error of (a, f) is |a - f| / max(|a|, |f|, 1e-6).
    """
    from realscale.scalereg import backward, loss

    def forward_state():
        a = features
        masks = []
        last = len(params.weights) - 1
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            z = a @ w + b
            if i != last:
                masks.append(z > 0)
                a = np.maximum(z, 0.0)
            else:
                a = z
        v_hat = a[:, 0]
        signs = np.sign(v_hat - targets)
        return loss(list(zip(targets, v_hat))), masks, signs

    def same_branch(state_a, state_b):
        _, masks_a, signs_a = state_a
        _, masks_b, signs_b = state_b
        return all(
            np.array_equal(ma, mb) for ma, mb in zip(masks_a, masks_b)
        ) and np.array_equal(signs_a, signs_b)

    grad_w, grad_b = backward(params, list(zip(features, targets)))
    tensors = list(params.weights) + list(params.biases)
    grads = list(grad_w) + list(grad_b)
    worst = 0.0
    accepted = 0
    attempts = 0
    while accepted < n_coords:
        attempts += 1
        if attempts > 50 * n_coords:
            raise RuntimeError("could not find enough smooth coordinates")
        t = int(rng.integers(len(tensors)))
        tensor, grad = tensors[t], grads[t]
        flat = int(rng.integers(tensor.size))
        idx = np.unravel_index(flat, tensor.shape)
        orig = tensor[idx]
        tensor[idx] = orig + h
        state_up = forward_state()
        tensor[idx] = orig - h
        state_down = forward_state()
        tensor[idx] = orig
        if not same_branch(state_up, state_down):
            continue
        fd = (state_up[0] - state_down[0]) / (2 * h)
        analytic = grad[idx]
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
        worst = max(worst, rel)
        accepted += 1
    return worst


# ---------------------------------------------------------------------------
# metric oracles
# ---------------------------------------------------------------------------


def naive_mae(est, gt):
    return sum(abs(e - g) for e, g in zip(est, gt)) / len(gt)


def naive_mape(est, gt):
    return 100.0 * sum(abs(e - g) / g for e, g in zip(est, gt)) / len(gt)


def naive_pearson(est, gt):
    n = len(gt)
    me = sum(est) / n
    mg = sum(gt) / n
    num = sum((e - me) * (g - mg) for e, g in zip(est, gt))
    de = math.sqrt(sum((e - me) ** 2 for e in est))
    dg = math.sqrt(sum((g - mg) ** 2 for g in gt))
    if de == 0 or dg == 0:
        return 0.0
    return num / (de * dg)


def naive_r_squared(est, gt):
    mg = sum(gt) / len(gt)
    ss_res = sum((g - e) ** 2 for e, g in zip(est, gt))
    ss_tot = sum((g - mg) ** 2 for g in gt)
    if ss_res == 0:
        return 1.0
    if ss_tot == 0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def naive_cosine(est, gt):
    dot = sum(e * g for e, g in zip(est, gt))
    ne = math.sqrt(sum(e * e for e in est))
    ng = math.sqrt(sum(g * g for g in gt))
    return dot / (ne * ng)
