"""Recurrent next-event model with exact hand-derived gradients.

The network is: a square embedding over the event vocabulary, concatenation
with the conditioning row, an input projection with ReLU, a stack of three
GRU layers (dropout after the first two at train time), and a linear output
head producing next-event logits.  Everything runs on plain numpy arrays;
gradients are reverse-mode, written out by hand, and verified against
central finite differences in the test suite.

Conventions: vectors are rows, so an affine layer is ``x @ w + b`` with ``w``
shaped (fan_in, fan_out).  Default arithmetic is float32 with loss
accumulation in float64; a float64 model (``ModelConfig(dtype="float64")``)
is used where finite-difference checks need the headroom.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_VOCAB = 240
DEFAULT_HIDDEN = 512
DEFAULT_LAYERS = 3
DEFAULT_DROPOUT = 0.3

ADAM_LR = 2e-4
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = DEFAULT_VOCAB
    hidden_size: int = DEFAULT_HIDDEN
    conditioning_dim: int = 25
    num_layers: int = DEFAULT_LAYERS
    dropout: float = DEFAULT_DROPOUT
    dtype: str = "float32"

    @property
    def np_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)

    @property
    def input_dim(self) -> int:
        """Width of the concatenated embedding + conditioning row."""
        return self.vocab_size + self.conditioning_dim


@dataclass
class GruLayerParams:
    """One GRU layer.  w_* map the layer input, u_* map the previous hidden
    state; r is the reset gate, z the update gate, h the candidate state."""

    w_r: np.ndarray
    w_z: np.ndarray
    w_h: np.ndarray
    u_r: np.ndarray
    u_z: np.ndarray
    u_h: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray


@dataclass
class ModelParams:
    """All trainable tensors.  The canonical (serialization) order is:
    embedding, fc_in_w, fc_in_b, then per layer w_r, w_z, w_h, u_r, u_z, u_h,
    b_r, b_z, b_h, then fc_out_w, fc_out_b."""

    config: ModelConfig
    embedding: np.ndarray
    fc_in_w: np.ndarray
    fc_in_b: np.ndarray
    gru: list[GruLayerParams]
    fc_out_w: np.ndarray
    fc_out_b: np.ndarray


_GRU_FIELDS = ("w_r", "w_z", "w_h", "u_r", "u_z", "u_h", "b_r", "b_z", "b_h")


def leaf_names(config: ModelConfig) -> list[str]:
    names = ["embedding", "fc_in_w", "fc_in_b"]
    for layer in range(config.num_layers):
        names.extend(f"gru{layer}_{f}" for f in _GRU_FIELDS)
    names.extend(["fc_out_w", "fc_out_b"])
    return names


def leaf_shapes(config: ModelConfig) -> list[tuple[int, ...]]:
    v, h = config.vocab_size, config.hidden_size
    shapes: list[tuple[int, ...]] = [(v, v), (config.input_dim, h), (h,)]
    for _ in range(config.num_layers):
        shapes.extend([(h, h)] * 6 + [(h,)] * 3)
    shapes.extend([(h, v), (v,)])
    return shapes


def leaf_arrays(params: ModelParams) -> list[np.ndarray]:
    arrays = [params.embedding, params.fc_in_w, params.fc_in_b]
    for layer in params.gru:
        arrays.extend(getattr(layer, f) for f in _GRU_FIELDS)
    arrays.extend([params.fc_out_w, params.fc_out_b])
    return arrays


def params_from_leaves(config: ModelConfig, arrays: Sequence[np.ndarray]) -> ModelParams:
    expected = leaf_shapes(config)
    if len(arrays) != len(expected):
        raise ValueError(f"expected {len(expected)} tensors, got {len(arrays)}")
    for arr, shape in zip(arrays, expected):
        if arr.shape != shape:
            raise ValueError(f"tensor shape {arr.shape} does not match {shape}")
    it = iter(arrays)
    embedding, fc_in_w, fc_in_b = next(it), next(it), next(it)
    gru = [
        GruLayerParams(*(next(it) for _ in _GRU_FIELDS))
        for _ in range(config.num_layers)
    ]
    fc_out_w, fc_out_b = next(it), next(it)
    return ModelParams(config, embedding, fc_in_w, fc_in_b, gru, fc_out_w, fc_out_b)


def parameter_count(config: ModelConfig) -> int:
    return sum(int(np.prod(s)) for s in leaf_shapes(config))


def zeros_like_params(params: ModelParams) -> ModelParams:
    return params_from_leaves(
        params.config, [np.zeros_like(a) for a in leaf_arrays(params)]
    )


def init_params(config: ModelConfig, rng: np.random.Generator | int) -> ModelParams:
    """Uniform init in +-1/sqrt(fan_in) per tensor, fan_in being the input
    width of the layer the tensor belongs to (row count for matrices)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    h = config.hidden_size
    fan_ins = [config.vocab_size, config.input_dim, config.input_dim]
    fan_ins += [h] * 9 * config.num_layers
    fan_ins += [h, h]
    arrays = []
    for shape, fan_in in zip(leaf_shapes(config), fan_ins):
        bound = 1.0 / np.sqrt(fan_in)
        arrays.append(rng.uniform(-bound, bound, size=shape).astype(config.np_dtype))
    return params_from_leaves(config, arrays)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Branch on sign so neither exp overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax over the last axis."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def gru_cell(x: np.ndarray, h_prev: np.ndarray, p: GruLayerParams) -> np.ndarray:
    """One GRU step.

    r = sigmoid(x w_r + h_prev u_r + b_r)
    z = sigmoid(x w_z + h_prev u_z + b_z)
    h~ = tanh(x w_h + (r * h_prev) u_h + b_h)
    h = (1 - z) * h_prev + z * h~

    Works on single rows or batches (leading axes broadcast).
    """
    r = _sigmoid(x @ p.w_r + h_prev @ p.u_r + p.b_r)
    z = _sigmoid(x @ p.w_z + h_prev @ p.u_z + p.b_z)
    h_cand = np.tanh(x @ p.w_h + (r * h_prev) @ p.u_h + p.b_h)
    return (1.0 - z) * h_prev + z * h_cand


@dataclass
class ForwardCache:
    """Activations recorded by a forward pass, as needed by backward()."""

    indices: np.ndarray          # (B, T) int
    conditioning: np.ndarray     # (B, T, C)
    relu_mask: np.ndarray        # (B, T, H) bool
    layer_inputs: list[np.ndarray]   # per layer, input after upstream dropout
    r: list[np.ndarray]
    z: list[np.ndarray]
    h_cand: list[np.ndarray]
    h: list[np.ndarray]
    dropout_masks: list[np.ndarray | None]  # per non-final layer, bool or None
    head_input: np.ndarray       # (B, T, H) input to the output head
    logits: np.ndarray           # (B, T, V)


def _as_batch(indices, conditioning, config: ModelConfig):
    idx = np.asarray(indices)
    cond = np.asarray(conditioning, dtype=config.np_dtype)
    single = idx.ndim == 1
    if single:
        idx = idx[None, :]
        cond = cond[None, ...]
    if idx.ndim != 2 or idx.size == 0:
        raise ValueError("event indices must be a non-empty 1-D or 2-D array")
    if cond.shape != (*idx.shape, config.conditioning_dim):
        raise ValueError(
            f"conditioning shape {cond.shape} does not match indices "
            f"{idx.shape} with dim {config.conditioning_dim}"
        )
    if idx.min() < 0 or idx.max() >= config.vocab_size:
        raise ValueError("event index outside the vocabulary")
    return idx, cond, single


def _coerce_rng(rng: np.random.Generator | int | None) -> np.random.Generator | None:
    if rng is None or isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def forward_cached(
    params: ModelParams,
    indices,
    conditioning,
    dropout_active: bool = False,
    rng: np.random.Generator | int | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network over (B, T) index batches; returns (B, T, V) logits
    plus the activation cache that backward() consumes.

    Hidden states start at zero for every sequence.  With dropout_active, an
    inverted-dropout mask (kept units scaled by 1/(1 - rate)) is drawn from
    ``rng`` for the outputs of each non-final GRU layer, in layer order.
    """
    config = params.config
    idx, cond, _ = _as_batch(indices, conditioning, config)
    rng = _coerce_rng(rng)
    if dropout_active and config.dropout > 0.0 and rng is None:
        raise ValueError("dropout requires an rng (pass a seed or Generator)")

    batch, steps = idx.shape
    hidden = config.hidden_size
    dtype = config.np_dtype

    embedded = params.embedding[idx]
    x0 = np.concatenate([embedded, cond], axis=2)
    pre = x0 @ params.fc_in_w + params.fc_in_b
    relu_mask = pre > 0
    x = np.where(relu_mask, pre, dtype.type(0))

    keep = 1.0 - config.dropout
    layer_inputs: list[np.ndarray] = []
    rs: list[np.ndarray] = []
    zs: list[np.ndarray] = []
    h_cands: list[np.ndarray] = []
    hs: list[np.ndarray] = []
    masks: list[np.ndarray | None] = []

    for layer_idx, layer in enumerate(params.gru):
        layer_inputs.append(x)
        # Input projections for all steps at once; only the recurrent
        # products stay inside the time loop.
        pr = x @ layer.w_r + layer.b_r
        pz = x @ layer.w_z + layer.b_z
        ph = x @ layer.w_h + layer.b_h
        r_all = np.empty((batch, steps, hidden), dtype)
        z_all = np.empty((batch, steps, hidden), dtype)
        hc_all = np.empty((batch, steps, hidden), dtype)
        h_all = np.empty((batch, steps, hidden), dtype)
        h = np.zeros((batch, hidden), dtype)
        for t in range(steps):
            r = _sigmoid(pr[:, t] + h @ layer.u_r)
            z = _sigmoid(pz[:, t] + h @ layer.u_z)
            h_cand = np.tanh(ph[:, t] + (r * h) @ layer.u_h)
            h = (1.0 - z) * h + z * h_cand
            r_all[:, t] = r
            z_all[:, t] = z
            hc_all[:, t] = h_cand
            h_all[:, t] = h
        rs.append(r_all)
        zs.append(z_all)
        h_cands.append(hc_all)
        hs.append(h_all)

        x = h_all
        if layer_idx < config.num_layers - 1:
            if dropout_active and config.dropout > 0.0:
                mask = rng.random((batch, steps, hidden)) < keep
                x = np.where(mask, x / dtype.type(keep), dtype.type(0))
                masks.append(mask)
            else:
                masks.append(None)

    logits = x @ params.fc_out_w + params.fc_out_b
    cache = ForwardCache(
        indices=idx,
        conditioning=cond,
        relu_mask=relu_mask,
        layer_inputs=layer_inputs,
        r=rs,
        z=zs,
        h_cand=h_cands,
        h=hs,
        dropout_masks=masks,
        head_input=x,
        logits=logits,
    )
    return logits, cache


def forward(
    params: ModelParams,
    indices,
    conditioning,
    dropout_active: bool = False,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Next-event logits: (T, V) for 1-D indices, (B, T, V) for a batch."""
    idx = np.asarray(indices)
    logits, _ = forward_cached(params, indices, conditioning, dropout_active, rng)
    return logits[0] if idx.ndim == 1 else logits


def cross_entropy(logits, targets) -> float:
    """Mean negative log-likelihood of targets under softmax(logits).

    Accepts (T, V) or (B, T, V) logits.  Uses max-subtracted log-sum-exp in
    float64 regardless of the model dtype.
    """
    x = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets)
    if x.ndim == 3:
        x = x.reshape(-1, x.shape[-1])
        t = t.reshape(-1)
    if x.ndim != 2 or t.shape != (x.shape[0],):
        raise ValueError(f"logits {np.shape(logits)} do not match targets {t.shape}")
    shifted = x - x.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_likelihood = shifted[np.arange(x.shape[0]), t] - log_z
    return float(-log_likelihood.mean())


def backward(params: ModelParams, cache: ForwardCache, targets) -> ModelParams:
    """Gradients of cross_entropy(forward(...), targets) w.r.t. every tensor.

    Requires the cache from forward_cached on the same inputs; reuses its
    dropout masks, so the gradient is exact for the sampled network.
    """
    config = params.config
    dtype = config.np_dtype
    idx = cache.indices
    batch, steps = idx.shape
    n = batch * steps
    hidden = config.hidden_size
    vocab = config.vocab_size

    t = np.asarray(targets).reshape(-1)
    if t.shape != (n,):
        raise ValueError(f"targets shape {np.shape(targets)} does not match {idx.shape}")

    grads = zeros_like_params(params)

    # d loss / d logits = (softmax - one_hot) / n
    d_logits = softmax(cache.logits).reshape(n, vocab)
    d_logits[np.arange(n), t] -= 1.0
    d_logits /= n
    d_logits = d_logits.astype(dtype)

    head_flat = cache.head_input.reshape(n, hidden)
    grads.fc_out_w[:] = head_flat.T @ d_logits
    grads.fc_out_b[:] = d_logits.sum(axis=0)
    dx = (d_logits @ params.fc_out_w.T).reshape(batch, steps, hidden)

    keep = 1.0 - config.dropout
    for layer_idx in reversed(range(config.num_layers)):
        layer = params.gru[layer_idx]
        layer_grads = grads.gru[layer_idx]
        if layer_idx < config.num_layers - 1:
            mask = cache.dropout_masks[layer_idx]
            if mask is not None:
                dx = np.where(mask, dx / dtype.type(keep), dtype.type(0))

        r_all = cache.r[layer_idx]
        z_all = cache.z[layer_idx]
        hc_all = cache.h_cand[layer_idx]
        h_all = cache.h[layer_idx]
        d_ar = np.empty((batch, steps, hidden), dtype)
        d_az = np.empty((batch, steps, hidden), dtype)
        d_ah = np.empty((batch, steps, hidden), dtype)

        d_carry = np.zeros((batch, hidden), dtype)
        zero_h = np.zeros((batch, hidden), dtype)
        for step in reversed(range(steps)):
            dh = dx[:, step] + d_carry
            h_prev = h_all[:, step - 1] if step > 0 else zero_h
            r = r_all[:, step]
            z = z_all[:, step]
            h_cand = hc_all[:, step]
            # h = (1 - z) h_prev + z h~
            da_z = dh * (h_cand - h_prev) * z * (1.0 - z)
            da_h = dh * z * (1.0 - h_cand * h_cand)
            dc = da_h @ layer.u_h.T  # c = r * h_prev fed through u_h
            da_r = dc * h_prev * r * (1.0 - r)
            d_carry = (
                dh * (1.0 - z)
                + dc * r
                + da_z @ layer.u_z.T
                + da_r @ layer.u_r.T
            )
            d_ar[:, step] = da_r
            d_az[:, step] = da_z
            d_ah[:, step] = da_h

        h_prev_all = np.concatenate(
            [np.zeros((batch, 1, hidden), dtype), h_all[:, :-1]], axis=1
        )
        x_flat = cache.layer_inputs[layer_idx].reshape(n, hidden)
        hp_flat = h_prev_all.reshape(n, hidden)
        c_flat = (r_all * h_prev_all).reshape(n, hidden)
        ar_flat = d_ar.reshape(n, hidden)
        az_flat = d_az.reshape(n, hidden)
        ah_flat = d_ah.reshape(n, hidden)

        layer_grads.w_r[:] = x_flat.T @ ar_flat
        layer_grads.w_z[:] = x_flat.T @ az_flat
        layer_grads.w_h[:] = x_flat.T @ ah_flat
        layer_grads.u_r[:] = hp_flat.T @ ar_flat
        layer_grads.u_z[:] = hp_flat.T @ az_flat
        layer_grads.u_h[:] = c_flat.T @ ah_flat
        layer_grads.b_r[:] = ar_flat.sum(axis=0)
        layer_grads.b_z[:] = az_flat.sum(axis=0)
        layer_grads.b_h[:] = ah_flat.sum(axis=0)

        dx = (d_ar @ layer.w_r.T + d_az @ layer.w_z.T + d_ah @ layer.w_h.T)

    d_pre = np.where(cache.relu_mask, dx, dtype.type(0))
    embedded = params.embedding[idx]
    x0_flat = np.concatenate([embedded, cache.conditioning], axis=2).reshape(n, -1)
    d_pre_flat = d_pre.reshape(n, hidden)
    grads.fc_in_w[:] = x0_flat.T @ d_pre_flat
    grads.fc_in_b[:] = d_pre_flat.sum(axis=0)
    d_x0 = d_pre_flat @ params.fc_in_w.T
    np.add.at(grads.embedding, idx.reshape(n), d_x0[:, :vocab])
    return grads


def loss_and_gradients(
    params: ModelParams,
    indices,
    conditioning,
    targets,
    dropout_active: bool = False,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, ModelParams]:
    logits, cache = forward_cached(params, indices, conditioning, dropout_active, rng)
    loss = cross_entropy(logits, targets)
    return loss, backward(params, cache, targets)


def init_hidden(params: ModelParams, batch: int | None = None) -> list[np.ndarray]:
    """Fresh zero hidden states, one per GRU layer."""
    h = params.config.hidden_size
    shape = (h,) if batch is None else (batch, h)
    return [
        np.zeros(shape, params.config.np_dtype)
        for _ in range(params.config.num_layers)
    ]


def step(
    params: ModelParams,
    hidden: list[np.ndarray],
    event_index: int,
    conditioning_row,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Single-event forward for autoregressive sampling (dropout inactive).

    Returns (logits over the vocabulary, new hidden states).
    """
    config = params.config
    if not 0 <= event_index < config.vocab_size:
        raise ValueError(f"event index {event_index} outside the vocabulary")
    row = np.asarray(conditioning_row, dtype=config.np_dtype)
    if row.shape != (config.conditioning_dim,):
        raise ValueError(f"conditioning row shape {row.shape} is wrong")
    x = np.concatenate([params.embedding[event_index], row])
    x = np.maximum(x @ params.fc_in_w + params.fc_in_b, config.np_dtype.type(0))
    new_hidden = []
    for layer, h_prev in zip(params.gru, hidden):
        x = gru_cell(x, h_prev, layer)
        new_hidden.append(x)
    return x @ params.fc_out_w + params.fc_out_b, new_hidden


@dataclass
class AdamState:
    """Adam's per-tensor moment estimates plus hyperparameters."""

    m: ModelParams
    v: ModelParams
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    step_count: int = 0


def init_adam(
    params: ModelParams,
    lr: float = ADAM_LR,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    epsilon: float = ADAM_EPSILON,
) -> AdamState:
    return AdamState(
        m=zeros_like_params(params),
        v=zeros_like_params(params),
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    params: ModelParams, grads: ModelParams, state: AdamState
) -> tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update.  Mutates params and state in place and
    returns them."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    for p, g, m, v in zip(
        leaf_arrays(params),
        leaf_arrays(grads),
        leaf_arrays(state.m),
        leaf_arrays(state.v),
    ):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        m_hat = m / correction1
        v_hat = v / correction2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state
