"""Policy/value network over board occupancy, numpy only.

Input is an h x w x 3 one-hot map of stone kinds. Blocks of 2x2 valid
convolution (ReLU) and 2x2 max pooling feed a dense layer with two heads:
a softmax over the board's columns and a scalar value in negative time
units. Backpropagation is written out by hand; tests compare every
gradient against central finite differences.

A pooling step follows a convolution only when the convolved map is at
least 2x2, and a block is dropped entirely when the map got too small for
its convolution, so the same code serves the full-size board and the tiny
boards used in tests. Layer structure is recoverable from parameter names
and shapes alone, which keeps the checkpoint format flat.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .game import GameState

KERNEL = 2
POOL = 2
CHANNEL_OF_KIND = {"H": 0, "R": 1, "E": 2}


class CheckpointError(Exception):
    def __init__(self, message, kind="corrupt"):
        super().__init__(message)
        self.kind = kind  # "version" | "shape" | "corrupt"


@dataclass(frozen=True)
class PolicyValue:
    p: np.ndarray  # length-width distribution over columns
    v: float       # clamped to <= 0


@dataclass
class TrainingExample:
    x: np.ndarray       # (h, w, 3) input tensor
    policy: np.ndarray  # (w,) target distribution over columns
    value: float        # target return, <= 0


def plan_blocks(height: int, width: int, requested: int) -> list[bool]:
    """Which conv blocks fit, and whether each is followed by a pool.

    Returns a pool-after flag per retained block. Blocks beyond what the
    board can absorb are dropped.
    """
    h, w = height, width
    plan: list[bool] = []
    for _ in range(requested):
        if h < KERNEL or w < KERNEL:
            break
        h, w = h - KERNEL + 1, w - KERNEL + 1
        pooled = h >= POOL and w >= POOL
        if pooled:
            h, w = h // POOL, w // POOL
        plan.append(pooled)
    return plan


def _flat_dim(height: int, width: int, filters: tuple[int, ...]) -> int:
    h, w, ch = height, width, 3
    for pooled, f in zip(plan_blocks(height, width, len(filters)), filters):
        h, w = h - KERNEL + 1, w - KERNEL + 1
        if pooled:
            h, w = h // POOL, w // POOL
        ch = f
    return h * w * ch


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    s = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def init_params(
    height: int,
    width: int,
    channels: int = 3,
    filters: tuple[int, ...] = (10, 10),
    dense_units: int = 128,
    seed: int = 0,
) -> dict[str, np.ndarray]:
    """Seeded uniform initialisation, scale sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    kept = plan_blocks(height, width, len(filters))
    in_ch = channels
    for i, f in enumerate(filters[: len(kept)]):
        fan_in = KERNEL * KERNEL * in_ch
        fan_out = KERNEL * KERNEL * f
        params[f"conv{i}_w"] = _glorot(rng, (f, KERNEL, KERNEL, in_ch), fan_in, fan_out)
        params[f"conv{i}_b"] = np.zeros(f)
        in_ch = f
    flat = _flat_dim(height, width, tuple(filters[: len(kept)]))
    params["dense_w"] = _glorot(rng, (flat, dense_units), flat, dense_units)
    params["dense_b"] = np.zeros(dense_units)
    params["policy_w"] = _glorot(rng, (dense_units, width), dense_units, width)
    params["policy_b"] = np.zeros(width)
    params["value_w"] = _glorot(rng, (dense_units, 1), dense_units, 1)
    params["value_b"] = np.zeros(1)
    return params


def _conv_layers(params: dict[str, np.ndarray]) -> list[int]:
    indices = sorted(
        int(m.group(1)) for k in params if (m := re.fullmatch(r"conv(\d+)_w", k))
    )
    if indices != list(range(len(indices))):
        raise CheckpointError("convolution layers are not contiguous", kind="shape")
    return indices


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    bsz, h, wd, _ = x.shape
    f = w.shape[0]
    oh, ow = h - KERNEL + 1, wd - KERNEL + 1
    out = np.zeros((bsz, oh, ow, f))
    for di in range(KERNEL):
        for dj in range(KERNEL):
            out += np.einsum("bhwc,fc->bhwf", x[:, di : di + oh, dj : dj + ow, :], w[:, di, dj, :])
    return out + b


def _maxpool(x: np.ndarray):
    bsz, h, w, f = x.shape
    h2, w2 = h // POOL, w // POOL
    crop = x[:, : h2 * POOL, : w2 * POOL, :]
    win = (
        crop.reshape(bsz, h2, POOL, w2, POOL, f)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(bsz, h2, w2, f, POOL * POOL)
    )
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _maxpool_backward(dout: np.ndarray, idx: np.ndarray, in_shape) -> np.ndarray:
    bsz, h, w, f = in_shape
    h2, w2 = h // POOL, w // POOL
    dwin = np.zeros((bsz, h2, w2, f, POOL * POOL))
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dcrop = (
        dwin.reshape(bsz, h2, w2, f, POOL, POOL)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(bsz, h2 * POOL, w2 * POOL, f)
    )
    dx = np.zeros(in_shape)
    dx[:, : h2 * POOL, : w2 * POOL, :] = dcrop
    return dx


def _forward_batch(params: dict[str, np.ndarray], x: np.ndarray):
    """Shared forward pass. Returns (p, raw v, cache for backprop)."""
    if x.ndim != 4:
        raise ValueError("expected a batch of rank-3 inputs")
    cache: dict = {"x": x, "blocks": []}
    a = x
    for i in _conv_layers(params):
        w, b = params[f"conv{i}_w"], params[f"conv{i}_b"]
        if a.shape[1] < KERNEL or a.shape[2] < KERNEL:
            raise CheckpointError(
                f"input {a.shape[1]}x{a.shape[2]} too small for conv{i}", kind="shape"
            )
        if a.shape[3] != w.shape[3]:
            raise CheckpointError(
                f"conv{i} expects {w.shape[3]} channels, got {a.shape[3]}", kind="shape"
            )
        z = _conv2d(a, w, b)
        relu = np.maximum(z, 0.0)
        block = {"a_in": a, "z": z}
        if relu.shape[1] >= POOL and relu.shape[2] >= POOL:
            pooled, idx = _maxpool(relu)
            block.update(relu_shape=relu.shape, idx=idx, pooled=True)
            a = pooled
        else:
            block["pooled"] = False
            a = relu
        cache["blocks"].append(block)

    flat = a.reshape(a.shape[0], -1)
    dense_w, dense_b = params["dense_w"], params["dense_b"]
    if flat.shape[1] != dense_w.shape[0]:
        raise CheckpointError(
            f"flattened size {flat.shape[1]} does not match dense layer {dense_w.shape[0]}",
            kind="shape",
        )
    z1 = flat @ dense_w + dense_b
    h1 = np.maximum(z1, 0.0)
    logits = h1 @ params["policy_w"] + params["policy_b"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    p = np.exp(log_p)
    v = (h1 @ params["value_w"] + params["value_b"])[:, 0]
    cache.update(conv_out_shape=a.shape, flat=flat, z1=z1, h1=h1, p=p, log_p=log_p, v=v)
    return p, v, cache


def forward(params: dict[str, np.ndarray], x: np.ndarray) -> PolicyValue:
    """Evaluate one input. The value is clamped to be non-positive."""
    p, v, _ = _forward_batch(params, np.asarray(x, dtype=float)[None])
    return PolicyValue(p=p[0], v=float(min(v[0], 0.0)))


def _stack(batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.stack([np.asarray(e.x, dtype=float) for e in batch])
    pis = np.stack([np.asarray(e.policy, dtype=float) for e in batch])
    zs = np.asarray([e.value for e in batch], dtype=float)
    return xs, pis, zs


def loss_components(params, batch, l2: float = 1e-4) -> tuple[float, float, float]:
    """(total loss, mean policy cross-entropy, mean value squared error)."""
    xs, pis, zs = _stack(batch)
    _, v, cache = _forward_batch(params, xs)
    ce = float(-(pis * cache["log_p"]).sum(axis=1).mean())
    mse = float(((zs - v) ** 2).mean())
    reg = l2 * sum(float((t * t).sum()) for t in params.values())
    return ce + mse + reg, ce, mse


def loss(params, batch, l2: float = 1e-4) -> float:
    return loss_components(params, batch, l2)[0]


def loss_and_gradients(params, batch, l2: float = 1e-4):
    """Analytic gradients of the combined loss for one minibatch."""
    xs, pis, zs = _stack(batch)
    p, v, cache = _forward_batch(params, xs)
    bsz = xs.shape[0]

    ce = float(-(pis * cache["log_p"]).sum(axis=1).mean())
    mse = float(((zs - v) ** 2).mean())
    reg = l2 * sum(float((t * t).sum()) for t in params.values())
    total = ce + mse + reg

    grads = {k: np.zeros_like(t) for k, t in params.items()}
    h1 = cache["h1"]

    dlogits = (p - pis) / bsz
    grads["policy_w"] = h1.T @ dlogits
    grads["policy_b"] = dlogits.sum(axis=0)
    dv = (2.0 * (v - zs) / bsz)[:, None]
    grads["value_w"] = h1.T @ dv
    grads["value_b"] = dv.sum(axis=0)

    dh1 = dlogits @ params["policy_w"].T + dv @ params["value_w"].T
    dz1 = dh1 * (cache["z1"] > 0)
    grads["dense_w"] = cache["flat"].T @ dz1
    grads["dense_b"] = dz1.sum(axis=0)

    da = (dz1 @ params["dense_w"].T).reshape(cache["conv_out_shape"])
    for i in reversed(_conv_layers(params)):
        block = cache["blocks"][i]
        if block["pooled"]:
            da = _maxpool_backward(da, block["idx"], block["relu_shape"])
        dz = da * (block["z"] > 0)
        w = params[f"conv{i}_w"]
        a_in = block["a_in"]
        oh, ow = dz.shape[1], dz.shape[2]
        dw = np.zeros_like(w)
        da_in = np.zeros_like(a_in)
        for di in range(KERNEL):
            for dj in range(KERNEL):
                patch = a_in[:, di : di + oh, dj : dj + ow, :]
                dw[:, di, dj, :] = np.einsum("bhwf,bhwc->fc", dz, patch)
                da_in[:, di : di + oh, dj : dj + ow, :] += np.einsum(
                    "bhwf,fc->bhwc", dz, w[:, di, dj, :]
                )
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = dz.sum(axis=(0, 1, 2))
        da = da_in

    for k, t in params.items():
        grads[k] = grads[k] + 2.0 * l2 * t
    return total, ce, mse, grads


def gradients(params, batch, l2: float = 1e-4) -> dict[str, np.ndarray]:
    return loss_and_gradients(params, batch, l2)[3]


def sgd_step(params, grads, lr: float, momentum: float, velocity=None):
    """Classic momentum update. Returns (new params, new velocity)."""
    if velocity is None:
        velocity = {k: np.zeros_like(t) for k, t in params.items()}
    new_params = {}
    new_velocity = {}
    for k, t in params.items():
        vel = momentum * velocity[k] - lr * grads[k]
        new_velocity[k] = vel
        new_params[k] = t + vel
    return new_params, new_velocity


def encode_state(state: GameState, height: int, width: int) -> np.ndarray:
    """One-hot kind occupancy of the stones still on the board.

    Channel 0 human-only, 1 robot-only, 2 either. Smaller boards sit in the
    bottom-left corner with zero padding above and to the right.
    """
    board = state.board
    if board.height > height or board.width > width:
        raise ValueError(
            f"board {board.height}x{board.width} exceeds the configured "
            f"input {height}x{width}"
        )
    x = np.zeros((height, width, 3))
    for stone in board.stones.values():
        ch = CHANNEL_OF_KIND[stone.kind]
        for c in range(stone.col, stone.col + stone.span):
            x[stone.row, c, ch] = 1.0
    return x


CHECKPOINT_HEADER = "HRCNET v1"
_VALUES_PER_LINE = 6


def dumps_checkpoint(params: dict[str, np.ndarray]) -> str:
    lines = [CHECKPOINT_HEADER]
    for name, tensor in params.items():
        dims = " ".join(str(d) for d in tensor.shape)
        lines.append(f"tensor {name} {dims}")
        flat = tensor.reshape(-1)
        for i in range(0, flat.size, _VALUES_PER_LINE):
            lines.append(" ".join(f"{x:.17g}" for x in flat[i : i + _VALUES_PER_LINE]))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_checkpoint(params: dict[str, np.ndarray], path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_checkpoint(params))


def loads_checkpoint(text: str) -> dict[str, np.ndarray]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CHECKPOINT_HEADER:
        raise CheckpointError(
            f"expected header {CHECKPOINT_HEADER!r}", kind="version"
        )
    params: dict[str, np.ndarray] = {}
    i = 1
    ended = False
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "end":
            ended = True
            break
        fields = line.split()
        if fields[0] != "tensor":
            raise CheckpointError(f"unexpected line {line!r}")
        if len(fields) < 3:
            raise CheckpointError("truncated tensor header")
        name = fields[1]
        if name in params:
            raise CheckpointError(f"duplicate tensor {name!r}")
        if not all(f.isdigit() and int(f) > 0 for f in fields[2:]):
            raise CheckpointError(f"tensor {name!r} has bad dimensions")
        dims = [int(f) for f in fields[2:]]
        count = 1
        for d in dims:
            count *= d
        values: list[float] = []
        while len(values) < count:
            if i >= len(lines):
                raise CheckpointError(f"tensor {name!r} payload truncated")
            try:
                values.extend(float(t) for t in lines[i].split())
            except ValueError:
                raise CheckpointError(f"tensor {name!r} has a non-numeric value") from None
            i += 1
        if len(values) != count:
            raise CheckpointError(f"tensor {name!r} payload has extra values")
        params[name] = np.asarray(values).reshape(dims)
    if not ended:
        raise CheckpointError("missing end marker")
    for rest in lines[i:]:
        if rest.strip():
            raise CheckpointError("content after the end marker")
    _validate_structure(params)
    return params


def load_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        return loads_checkpoint(fh.read())


_EXPECTED_SUFFIX = ["dense_w", "dense_b", "policy_w", "policy_b", "value_w", "value_b"]


def _validate_structure(params: dict[str, np.ndarray]) -> None:
    conv = _conv_layers(params)
    expected = [n for i in conv for n in (f"conv{i}_w", f"conv{i}_b")] + _EXPECTED_SUFFIX
    if sorted(params) != sorted(expected):
        extra = sorted(set(params) - set(expected))
        missing = sorted(set(expected) - set(params))
        raise CheckpointError(
            f"unexpected tensor set (extra {extra}, missing {missing})", kind="shape"
        )
    in_ch = None
    for i in conv:
        w, b = params[f"conv{i}_w"], params[f"conv{i}_b"]
        if w.ndim != 4 or w.shape[1] != KERNEL or w.shape[2] != KERNEL:
            raise CheckpointError(f"conv{i}_w has shape {w.shape}", kind="shape")
        if b.shape != (w.shape[0],):
            raise CheckpointError(f"conv{i}_b does not match conv{i}_w", kind="shape")
        if in_ch is not None and w.shape[3] != in_ch:
            raise CheckpointError(f"conv{i} input channels break the chain", kind="shape")
        in_ch = w.shape[0]
    dense_w, dense_b = params["dense_w"], params["dense_b"]
    units = dense_w.shape[1]
    if dense_b.shape != (units,):
        raise CheckpointError("dense bias does not match dense weights", kind="shape")
    for head in ("policy", "value"):
        w, b = params[f"{head}_w"], params[f"{head}_b"]
        if w.shape[0] != units or b.shape != (w.shape[1],):
            raise CheckpointError(f"{head} head does not match dense layer", kind="shape")
    if params["value_w"].shape[1] != 1:
        raise CheckpointError("value head must produce a scalar", kind="shape")


def network_width(params: dict[str, np.ndarray]) -> int:
    return params["policy_w"].shape[1]


class NetEvaluator:
    """Adapter giving the search (column priors, value) for a state.

    Evaluations are cached per board layout: the encoding only sees which
    stones remain and where, so states differing in clocks or remaining
    times share one forward pass.
    """

    def __init__(self, params, height: int, width: int, cache: bool = True):
        self.params = params
        self.height = height
        self.width = width
        self._cache: dict | None = {} if cache else None

    def __call__(self, state: GameState) -> tuple[np.ndarray, float]:
        key = None
        if self._cache is not None:
            key = tuple(sorted((sid, s.row) for sid, s in state.board.stones.items()))
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        out = forward(self.params, encode_state(state, self.height, self.width))
        result = (out.p, out.v)
        if self._cache is not None:
            self._cache[key] = result
        return result


class UniformEvaluator:
    """Flat priors and zero value; useful as a no-knowledge baseline."""

    def __init__(self, width: int):
        self.width = width

    def __call__(self, state: GameState) -> tuple[np.ndarray, float]:
        return np.full(self.width, 1.0 / self.width), 0.0
