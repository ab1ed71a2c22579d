"""Dense numerical stack: masked BiLSTM encoder, pair-feature operator, MLP head,
cross-entropy, reverse-mode gradients, and Adam.

Everything is float64 numpy with deterministic, fixed-order reductions so a
fixed seed and input order reproduce training bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embed import SequenceEmbedding

OPERATORS = ("mii", "concat", "joint")
POOLS = ("final", "mean")


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


@dataclass
class LstmDirection:
    """One direction's cell weights; gate order along the 4H axis is i, f, g, o."""

    wx: np.ndarray  # (input_dim, 4H)
    wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)


@dataclass
class BiLstmParams:
    input_dim: int
    hidden_dim: int
    forward: LstmDirection
    backward: LstmDirection

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_dim


@dataclass
class MlpParams:
    """One ReLU hidden layer followed by a linear softmax head."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.w2.shape[1]


@dataclass
class PairClassifier:
    """BiLSTM encoder plus head; `operator` picks how the two encodings combine.

    mii    -> [p, p*r, p-r, r], head input 4 * 2H
    concat -> [p, r], head input 2 * 2H
    joint  -> one encoding of reference tokens followed by test tokens, 2H
    """

    bilstm: BiLstmParams
    mlp: MlpParams
    operator: str
    pool: str = "final"

    @property
    def num_classes(self) -> int:
        return self.mlp.num_classes

    def parameters(self) -> dict[str, np.ndarray]:
        """Live views of every trainable array, keyed stably for the optimizer."""
        return {
            "lstm_fwd_wx": self.bilstm.forward.wx,
            "lstm_fwd_wh": self.bilstm.forward.wh,
            "lstm_fwd_b": self.bilstm.forward.b,
            "lstm_bwd_wx": self.bilstm.backward.wx,
            "lstm_bwd_wh": self.bilstm.backward.wh,
            "lstm_bwd_b": self.bilstm.backward.b,
            "mlp_w1": self.mlp.w1,
            "mlp_b1": self.mlp.b1,
            "mlp_w2": self.mlp.w2,
            "mlp_b2": self.mlp.b2,
        }


def head_input_dim(operator: str, hidden_dim: int) -> int:
    if operator == "mii":
        return 4 * 2 * hidden_dim
    if operator == "concat":
        return 2 * 2 * hidden_dim
    if operator == "joint":
        return 2 * hidden_dim
    raise ValueError(f"unknown operator '{operator}'")


def _init_direction(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmDirection:
    bound = 1.0 / np.sqrt(hidden_dim)
    wx = rng.uniform(-bound, bound, size=(input_dim, 4 * hidden_dim))
    wh = rng.uniform(-bound, bound, size=(hidden_dim, 4 * hidden_dim))
    b = np.zeros(4 * hidden_dim)
    b[hidden_dim : 2 * hidden_dim] = 1.0  # forget-gate bias, the usual LSTM trick
    return LstmDirection(wx=wx, wh=wh, b=b)


def init_bilstm(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> BiLstmParams:
    return BiLstmParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        forward=_init_direction(input_dim, hidden_dim, rng),
        backward=_init_direction(input_dim, hidden_dim, rng),
    )


def init_mlp(
    input_dim: int, hidden: int, num_classes: int, rng: np.random.Generator
) -> MlpParams:
    bound = 1.0 / np.sqrt(input_dim)
    w1 = rng.uniform(-bound, bound, size=(input_dim, hidden))
    # Zero head: an untrained model emits the uniform distribution.
    return MlpParams(
        w1=w1,
        b1=np.zeros(hidden),
        w2=np.zeros((hidden, num_classes)),
        b2=np.zeros(num_classes),
    )


def init_pair_classifier(
    input_dim: int,
    hidden_dim: int,
    mlp_hidden: int,
    num_classes: int,
    operator: str,
    seed: int,
    pool: str = "final",
) -> PairClassifier:
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator '{operator}'")
    if pool not in POOLS:
        raise ValueError(f"unknown pooling mode '{pool}'")
    rng = np.random.default_rng([seed, 0xB11])
    bilstm = init_bilstm(input_dim, hidden_dim, rng)
    mlp = init_mlp(head_input_dim(operator, hidden_dim), mlp_hidden, num_classes, rng)
    return PairClassifier(bilstm=bilstm, mlp=mlp, operator=operator, pool=pool)


# ---------------------------------------------------------------------------
# masked LSTM over padded batches


def pack_batch(rows_list: Sequence[np.ndarray], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad variable-length row matrices into (B, T, dim) plus a (B, T) mask."""
    B = len(rows_list)
    T = max((r.shape[0] for r in rows_list), default=0)
    x = np.zeros((B, T, dim))
    mask = np.zeros((B, T))
    for b, rows in enumerate(rows_list):
        n = rows.shape[0]
        if n:
            x[b, :n] = rows
            mask[b, :n] = 1.0
    return x, mask


def _lstm_run(direction: LstmDirection, x: np.ndarray, mask: np.ndarray):
    """Masked LSTM over (B, T, D) in the given order; masked steps carry state.

    Returns the per-step hidden states (B, T, H), the final state (B, H), and
    the cache needed for the backward pass.
    """
    B, T, _ = x.shape
    H = direction.wh.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.zeros((B, T, H))
    steps = []
    for t in range(T):
        xt = x[:, t]
        m = mask[:, t][:, None]
        z = xt @ direction.wx + h @ direction.wh + direction.b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = sigmoid(z[:, 3 * H :])
        c_cand = f * c + i * g
        tc = np.tanh(c_cand)
        steps.append((xt, m, h, c, i, f, g, o, tc))
        c = m * c_cand + (1.0 - m) * c
        h = m * (o * tc) + (1.0 - m) * h
        hs[:, t] = h
    return hs, h, steps


def _lstm_backprop(
    direction: LstmDirection,
    steps: list,
    dh_steps: np.ndarray | None,
    dh_final: np.ndarray,
    want_dx: bool,
):
    """BPTT through the masked recurrence.

    dh_steps, when given, carries per-step external gradients (mean pooling);
    dh_final is the gradient on the state after the last step. Returns the
    weight gradients and, optionally, gradients w.r.t. the inputs.
    """
    T = len(steps)
    B, H = dh_final.shape
    dwx = np.zeros_like(direction.wx)
    dwh = np.zeros_like(direction.wh)
    db = np.zeros_like(direction.b)
    dx = np.zeros((B, T, direction.wx.shape[0])) if want_dx else None
    Dh = dh_final.copy()
    Dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        if dh_steps is not None:
            Dh = Dh + dh_steps[:, t]
        xt, m, h_prev, c_prev, i, f, g, o, tc = steps[t]
        dh_cand = m * Dh
        dc_cand = m * Dc + dh_cand * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc_cand * g * i * (1.0 - i),
                dc_cand * c_prev * f * (1.0 - f),
                dc_cand * i * (1.0 - g * g),
                dh_cand * tc * o * (1.0 - o),
            ],
            axis=1,
        )
        dwx += xt.T @ dz
        dwh += h_prev.T @ dz
        db += dz.sum(axis=0)
        if want_dx:
            dx[:, t] = dz @ direction.wx.T
        Dh = (1.0 - m) * Dh + dz @ direction.wh.T
        Dc = (1.0 - m) * Dc + dc_cand * f
    return dwx, dwh, db, dx


def _pool(hs: np.ndarray, h_final: np.ndarray, mask: np.ndarray, pool: str):
    if pool == "final":
        return h_final, None
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    pooled = (hs * mask[:, :, None]).sum(axis=1) / counts
    return pooled, counts


def _pool_backward(dout: np.ndarray, mask: np.ndarray, counts, pool: str):
    """Split the pooled-vector gradient into per-step and final-state parts."""
    if pool == "final":
        return None, dout
    dh_steps = mask[:, :, None] * (dout[:, None, :] / counts[:, None, :])
    return dh_steps, np.zeros_like(dout)


def encode_batch(params: BiLstmParams, rows_list: Sequence[np.ndarray], pool: str = "final"):
    """Encode a batch of row matrices into (B, 2H) vectors; returns a backward cache."""
    x, mask = pack_batch(rows_list, params.input_dim)
    hs_f, hf, steps_f = _lstm_run(params.forward, x, mask)
    x_rev = x[:, ::-1]
    mask_rev = mask[:, ::-1]
    hs_b, hb, steps_b = _lstm_run(params.backward, x_rev, mask_rev)
    out_f, counts_f = _pool(hs_f, hf, mask, pool)
    out_b, counts_b = _pool(hs_b, hb, mask_rev, pool)
    out = np.concatenate([out_f, out_b], axis=1)
    cache = (steps_f, steps_b, mask, mask_rev, counts_f, counts_b, pool)
    return out, cache


def encode_backward(
    params: BiLstmParams,
    cache,
    dout: np.ndarray,
    grads: dict[str, np.ndarray],
    want_dx: bool = False,
):
    """Accumulate encoder gradients into `grads`; optionally return input grads."""
    steps_f, steps_b, mask, mask_rev, counts_f, counts_b, pool = cache
    H = params.hidden_dim
    d_f, d_b = dout[:, :H], dout[:, H:]
    dh_steps_f, dh_final_f = _pool_backward(d_f, mask, counts_f, pool)
    dh_steps_b, dh_final_b = _pool_backward(d_b, mask_rev, counts_b, pool)
    dwx, dwh, db, dx_f = _lstm_backprop(params.forward, steps_f, dh_steps_f, dh_final_f, want_dx)
    grads["lstm_fwd_wx"] += dwx
    grads["lstm_fwd_wh"] += dwh
    grads["lstm_fwd_b"] += db
    dwx, dwh, db, dx_b = _lstm_backprop(params.backward, steps_b, dh_steps_b, dh_final_b, want_dx)
    grads["lstm_bwd_wx"] += dwx
    grads["lstm_bwd_wh"] += dwh
    grads["lstm_bwd_b"] += db
    if want_dx:
        return dx_f + dx_b[:, ::-1]
    return None


def bilstm_encode(
    params: BiLstmParams, e: SequenceEmbedding, pool: str = "final"
) -> np.ndarray:
    """Single-sequence encoding: concat of the two directions' pooled states.

    An empty sequence encodes to the zero vector of length 2H.
    """
    if e.dim != params.input_dim:
        raise ValueError(f"embedding dim {e.dim} does not match encoder input {params.input_dim}")
    if len(e) == 0:
        return np.zeros(params.output_dim)
    out, _ = encode_batch(params, [e.rows], pool)
    return out[0]


# ---------------------------------------------------------------------------
# pair features, head, loss


def mii(p: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Pair feature [p, p*r, p-r, r]; works on single vectors and batches."""
    if p.shape != r.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {r.shape}")
    return np.concatenate([p, p * r, p - r, r], axis=-1)


def pair_features(operator: str, p: np.ndarray, r: np.ndarray) -> np.ndarray:
    if operator == "mii":
        return mii(p, r)
    if operator == "concat":
        if p.shape != r.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {r.shape}")
        return np.concatenate([p, r], axis=-1)
    raise ValueError(f"unknown pair operator '{operator}'")


def pair_features_backward(operator: str, dq: np.ndarray, p: np.ndarray, r: np.ndarray):
    n = p.shape[-1]
    if operator == "mii":
        d1, d2, d3, d4 = dq[..., :n], dq[..., n : 2 * n], dq[..., 2 * n : 3 * n], dq[..., 3 * n :]
        dp = d1 + d2 * r + d3
        dr = d2 * p - d3 + d4
        return dp, dr
    if operator == "concat":
        return dq[..., :n], dq[..., n:]
    raise ValueError(f"unknown pair operator '{operator}'")


def mlp_forward(params: MlpParams, q: np.ndarray):
    a = q @ params.w1 + params.b1
    h = np.maximum(a, 0.0)
    logits = h @ params.w2 + params.b2
    return softmax(logits), (q, a, h)


def mlp_backward(params: MlpParams, cache, dlogits: np.ndarray, grads: dict[str, np.ndarray]):
    q, a, h = cache
    grads["mlp_w2"] += h.T @ dlogits
    grads["mlp_b2"] += dlogits.sum(axis=0)
    dh = dlogits @ params.w2.T
    da = dh * (a > 0)
    grads["mlp_w1"] += q.T @ da
    grads["mlp_b1"] += da.sum(axis=0)
    return da @ params.w1.T


def mlp_classify(params: MlpParams, q: np.ndarray) -> np.ndarray:
    """Class probabilities for a single feature vector."""
    if q.shape[-1] != params.input_dim:
        raise ValueError(f"feature length {q.shape[-1]} does not match head input {params.input_dim}")
    probs, _ = mlp_forward(params, q.reshape(1, -1))
    return probs[0]


def cross_entropy(probs: np.ndarray, label: int) -> float:
    if not 0 <= label < probs.shape[-1]:
        raise ValueError(f"label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(probs[label]))


# ---------------------------------------------------------------------------
# full pair model


def pair_forward_batch(model: PairClassifier, batch: Sequence[tuple[np.ndarray, np.ndarray]]):
    """Probabilities (B, C) for a batch of (reference_rows, test_rows) pairs."""
    if model.operator == "joint":
        joined = [np.concatenate([ref, test], axis=0) if ref.size or test.size
                  else np.zeros((0, model.bilstm.input_dim)) for ref, test in batch]
        q, enc_cache = encode_batch(model.bilstm, joined, model.pool)
        probs, head_cache = mlp_forward(model.mlp, q)
        return probs, ("joint", enc_cache, head_cache)
    refs = [ref for ref, _ in batch]
    tests = [test for _, test in batch]
    p, cache_p = encode_batch(model.bilstm, refs, model.pool)
    r, cache_r = encode_batch(model.bilstm, tests, model.pool)
    q = pair_features(model.operator, p, r)
    probs, head_cache = mlp_forward(model.mlp, q)
    return probs, (model.operator, cache_p, cache_r, p, r, head_cache)


def pair_loss_and_grads(
    model: PairClassifier,
    batch: Sequence[tuple[np.ndarray, np.ndarray]],
    labels: Sequence[int],
    want_dx: bool = False,
):
    """Summed cross-entropy over the batch and gradients for every parameter.

    With want_dx the gradients w.r.t. the two input row stacks are returned as
    padded (B, T, D) arrays (reference, test); used only when the embedding
    table is being fine-tuned.
    """
    probs, cache = pair_forward_batch(model, batch)
    B = probs.shape[0]
    idx = np.arange(B)
    labels = np.asarray(labels, dtype=np.int64)
    loss = float(-np.log(probs[idx, labels]).sum())
    dlogits = probs.copy()
    dlogits[idx, labels] -= 1.0

    grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    if cache[0] == "joint":
        _, enc_cache, head_cache = cache
        dq = mlp_backward(model.mlp, head_cache, dlogits, grads)
        dx = encode_backward(model.bilstm, enc_cache, dq, grads, want_dx)
        return loss, grads, (dx, None)
    operator, cache_p, cache_r, p, r, head_cache = cache
    dq = mlp_backward(model.mlp, head_cache, dlogits, grads)
    dp, dr = pair_features_backward(operator, dq, p, r)
    dx_ref = encode_backward(model.bilstm, cache_p, dp, grads, want_dx)
    dx_test = encode_backward(model.bilstm, cache_r, dr, grads, want_dx)
    return loss, grads, (dx_ref, dx_test)


def backward(
    model: PairClassifier,
    batch: Sequence[tuple[np.ndarray, np.ndarray, int]],
) -> dict[str, np.ndarray]:
    """Gradients of the summed loss over (reference_rows, test_rows, label) triples."""
    if not batch:
        raise ValueError("backward requires a non-empty batch")
    pairs = [(ref, test) for ref, test, _ in batch]
    labels = [label for _, _, label in batch]
    _, grads, _ = pair_loss_and_grads(model, pairs, labels)
    return grads


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            step=0,
        )


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One in-place Adam update over the shared parameter keys, in sorted order."""
    state.step += 1
    t = state.step
    for key in sorted(params):
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        m_hat = m / (1.0 - ADAM_BETA1**t)
        v_hat = v / (1.0 - ADAM_BETA2**t)
        params[key] -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return params, state
