"""Model assembly: the pair classifier and the statistical baselines, training
loops, checkpoints, and the 2x2 ablation harness."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import nn
from .align import OffsetMap, similarity
from .embed import EmbeddingTable, SequenceEmbedding, embed_sequence, gse_pool, random_table
from .errors import UnsupportedTaskError
from .kmer import KmerSequence, PairExample
from .metrics import confusion, weighted_metrics
from .seqio import VirusPair

TASKS = ("binary", "multilevel")

KINDS = (
    "dpcipi",
    "bilstm_concat",
    "nn_gse",
    "lr_sim",
    "lr_gse",
    "perceptron_sim",
    "perceptron_gse",
    "dtree_sim",
    "dtree_gse",
)


def task_classes(task: str) -> int:
    if task == "binary":
        return 2
    if task == "multilevel":
        return 4
    raise ValueError(f"unknown task '{task}'")


@dataclass(frozen=True)
class TrainConfig:
    task: str = "binary"
    k: int = 6
    embed_init: str = "pretrained"
    operator: str = "mii"
    epochs: int = 50
    batch_size: int = 10
    learning_rate: float = 0.0001
    seed: int = 0
    hidden_dim: int = 128
    mlp_hidden: int = 128
    pool: str = "final"
    train_embeddings: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task '{self.task}'")
        if self.operator not in ("mii", "concat"):
            raise ValueError(f"unknown operator '{self.operator}'")
        if self.embed_init not in ("pretrained", "random"):
            raise ValueError(f"unknown embed_init '{self.embed_init}'")
        if self.pool not in nn.POOLS:
            raise ValueError(f"unknown pool '{self.pool}'")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs must be >= 0, batch_size >= 1, learning_rate > 0")

    @property
    def num_classes(self) -> int:
        return task_classes(self.task)


@dataclass
class TrainedModel:
    kind: str
    task: str
    config: TrainConfig
    history: list[float] = field(default_factory=list)
    classifier: nn.PairClassifier | None = None
    head: nn.MlpParams | None = None
    weight: np.ndarray | None = None  # logistic / perceptron coefficients
    bias: np.ndarray | None = None
    tree: dict | None = None
    table: EmbeddingTable | None = None
    adam: nn.AdamState | None = None
    warning: str | None = None
    dim: int | None = None


# ---------------------------------------------------------------------------
# embedding helpers


def _embed_tokens(table: EmbeddingTable, tokens: Sequence[str], k: int) -> np.ndarray:
    seq = KmerSequence(strain_name="", tokens=tuple(tokens), k=k)
    return embed_sequence(table, seq).rows


def _embed_example(table: EmbeddingTable, ex: PairExample, k: int):
    return (
        _embed_tokens(table, ex.reference_tokens, k),
        _embed_tokens(table, ex.test_tokens, k),
    )


def gse_similarity(ex: PairExample, table: EmbeddingTable, k: int | None = None) -> float:
    """Cosine similarity between the pooled embeddings of the two deduplicated sides."""
    k = table.k if k is None else k
    p = gse_pool(SequenceEmbedding(rows=_embed_tokens(table, ex.reference_tokens, k), dim=table.dim))
    r = gse_pool(SequenceEmbedding(rows=_embed_tokens(table, ex.test_tokens, k), dim=table.dim))
    np_ = np.linalg.norm(p)
    nr = np.linalg.norm(r)
    if np_ == 0.0 or nr == 0.0:
        return 0.0
    return float(np.dot(p, r) / (np_ * nr))


def sim_feature(pair: VirusPair, offsets: OffsetMap) -> float:
    return similarity(pair.reference, pair.test, offsets)


# ---------------------------------------------------------------------------
# neural trainers


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng([seed, 1009, epoch]).permutation(n)


def _train_pair_model(
    examples: Sequence[PairExample],
    table: EmbeddingTable,
    cfg: TrainConfig,
    kind: str,
    operator: str,
) -> TrainedModel:
    if not examples:
        raise ValueError("cannot train on an empty example list")
    labels = np.array([ex.label(cfg.task) for ex in examples], dtype=np.int64)
    classifier = nn.init_pair_classifier(
        input_dim=table.dim,
        hidden_dim=cfg.hidden_dim,
        mlp_hidden=cfg.mlp_hidden,
        num_classes=cfg.num_classes,
        operator=operator,
        seed=cfg.seed,
        pool=cfg.pool,
    )
    params = classifier.parameters()
    adam = nn.AdamState.for_params(params)

    work_table = table
    emb_adam: nn.AdamState | None = None
    if cfg.train_embeddings:
        work_table = EmbeddingTable(
            k=table.k,
            dim=table.dim,
            vectors={t: v.copy() for t, v in table.vectors.items()},
            source=table.source,
        )
        emb_adam = nn.AdamState(m={}, v={}, step=0)
    else:
        cached = [_embed_example(table, ex, cfg.k) for ex in examples]

    n = len(examples)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        order = _epoch_order(cfg.seed, epoch, n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if cfg.train_embeddings:
                batch = [_embed_example(work_table, examples[i], cfg.k) for i in idx]
            else:
                batch = [cached[i] for i in idx]
            loss, grads, (dx_ref, dx_test) = nn.pair_loss_and_grads(
                classifier, batch, labels[idx], want_dx=cfg.train_embeddings
            )
            epoch_loss += loss
            scale = 1.0 / len(idx)
            for g in grads.values():
                g *= scale
            nn.adam_step(params, grads, adam, cfg.learning_rate)
            if cfg.train_embeddings:
                _apply_embedding_grads(
                    work_table, examples, idx, dx_ref, dx_test, scale, emb_adam, cfg
                )
        history.append(epoch_loss / n)
    return TrainedModel(
        kind=kind,
        task=cfg.task,
        config=cfg,
        history=history,
        classifier=classifier,
        table=work_table,
        adam=adam,
        dim=table.dim,
    )


def _apply_embedding_grads(
    table: EmbeddingTable,
    examples: Sequence[PairExample],
    idx: np.ndarray,
    dx_ref: np.ndarray,
    dx_test: np.ndarray,
    scale: float,
    emb_adam: nn.AdamState,
    cfg: TrainConfig,
) -> None:
    """Sparse Adam over only the tokens touched by this batch."""
    from .embed import embed_sequence_backward

    accum: dict[str, np.ndarray] = {}
    for row, i in enumerate(idx):
        ex = examples[i]
        n_ref = len(ex.reference_tokens)
        n_test = len(ex.test_tokens)
        if dx_test is None:
            # joint operator: one input stack covers reference then test tokens
            ref_grad = dx_ref[row, :n_ref]
            test_grad = dx_ref[row, n_ref : n_ref + n_test]
        else:
            ref_grad = dx_ref[row, :n_ref]
            test_grad = dx_test[row, :n_test]
        embed_sequence_backward(table, ex.reference_tokens, ref_grad, accum)
        embed_sequence_backward(table, ex.test_tokens, test_grad, accum)
    if not accum:
        return
    touched = {}
    grads = {}
    for tok, g in accum.items():
        if tok not in table.vectors:
            continue
        if tok not in emb_adam.m:
            emb_adam.m[tok] = np.zeros_like(table.vectors[tok])
            emb_adam.v[tok] = np.zeros_like(table.vectors[tok])
        touched[tok] = table.vectors[tok]
        grads[tok] = g * scale
    state = nn.AdamState(
        m={t: emb_adam.m[t] for t in touched},
        v={t: emb_adam.v[t] for t in touched},
        step=emb_adam.step,
    )
    nn.adam_step(touched, grads, state, cfg.learning_rate)
    emb_adam.step = state.step


def train_dpcipi(
    examples: Sequence[PairExample], table: EmbeddingTable, cfg: TrainConfig
) -> TrainedModel:
    """Shared BiLSTM over both deduplicated sides, combined by cfg.operator."""
    return _train_pair_model(examples, table, cfg, kind="dpcipi", operator=cfg.operator)


def train_bilstm_concat(
    examples: Sequence[PairExample], table: EmbeddingTable, cfg: TrainConfig
) -> TrainedModel:
    """Baseline: one BiLSTM over reference tokens followed by test tokens."""
    return _train_pair_model(examples, table, cfg, kind="bilstm_concat", operator="joint")


def _gse_features(
    examples: Sequence[PairExample], table: EmbeddingTable, k: int
) -> np.ndarray:
    rows = []
    for ex in examples:
        ref_rows, test_rows = _embed_example(table, ex, k)
        p = gse_pool(SequenceEmbedding(rows=ref_rows, dim=table.dim))
        r = gse_pool(SequenceEmbedding(rows=test_rows, dim=table.dim))
        rows.append(np.concatenate([p, r]))
    return np.stack(rows)


def train_nn_gse(
    examples: Sequence[PairExample], table: EmbeddingTable, cfg: TrainConfig
) -> TrainedModel:
    """Baseline MLP over the concatenated pooled embeddings of the two sides."""
    if not examples:
        raise ValueError("cannot train on an empty example list")
    X = _gse_features(examples, table, cfg.k)
    labels = np.array([ex.label(cfg.task) for ex in examples], dtype=np.int64)
    rng = np.random.default_rng([cfg.seed, 0x99])
    head = nn.init_mlp(X.shape[1], cfg.mlp_hidden, cfg.num_classes, rng)
    params = {"mlp_w1": head.w1, "mlp_b1": head.b1, "mlp_w2": head.w2, "mlp_b2": head.b2}
    adam = nn.AdamState.for_params(params)
    n = len(examples)
    history = []
    for epoch in range(cfg.epochs):
        order = _epoch_order(cfg.seed, epoch, n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            probs, cache = nn.mlp_forward(head, X[idx])
            batch_labels = labels[idx]
            rows = np.arange(len(idx))
            epoch_loss += float(-np.log(probs[rows, batch_labels]).sum())
            dlogits = probs.copy()
            dlogits[rows, batch_labels] -= 1.0
            grads = {k_: np.zeros_like(v) for k_, v in params.items()}
            nn.mlp_backward(head, cache, dlogits, grads)
            for g in grads.values():
                g /= len(idx)
            nn.adam_step(params, grads, adam, cfg.learning_rate)
        history.append(epoch_loss / n)
    return TrainedModel(
        kind="nn_gse",
        task=cfg.task,
        config=cfg,
        history=history,
        head=head,
        table=table,
        adam=adam,
        dim=table.dim,
    )


# ---------------------------------------------------------------------------
# statistical baselines on a scalar feature

LOGISTIC_MAX_ITERS = 10_000
LOGISTIC_TOL = 1e-9
PERCEPTRON_MAX_PASSES = 1000


def _fit_logistic_binary(x: np.ndarray, y: np.ndarray, lr: float = 1.0):
    w = 0.0
    b = 0.0
    prev = np.inf
    for _ in range(LOGISTIC_MAX_ITERS):
        z = w * x + b
        p = nn.sigmoid(z)
        eps = 1e-12
        loss = float(-(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)).mean())
        err = p - y
        w -= lr * float((err * x).mean())
        b -= lr * float(err.mean())
        if abs(prev - loss) < LOGISTIC_TOL:
            break
        prev = loss
    return w, b


def _fit_logistic(x: np.ndarray, y: np.ndarray, task: str):
    warning = None
    if len(np.unique(y)) == 1:
        warning = "degenerate training set: all labels identical"
    if task == "binary":
        w, b = _fit_logistic_binary(x, y.astype(np.float64))
        return np.array([w]), np.array([b]), warning
    # One-vs-rest over the scalar feature for the four-level task.
    C = task_classes(task)
    ws = np.zeros(C)
    bs = np.zeros(C)
    for c in range(C):
        ws[c], bs[c] = _fit_logistic_binary(x, (y == c).astype(np.float64))
    return ws, bs, warning


def train_lr_sim(
    pairs: Sequence[VirusPair], offsets: OffsetMap, task: str = "binary"
) -> TrainedModel:
    """Logistic regression on the normalized alignment distance."""
    x = np.array([sim_feature(p, offsets) for p in pairs])
    y = np.array([p.binary_label if task == "binary" else p.level_label for p in pairs])
    w, b, warning = _fit_logistic(x, y, task)
    cfg = TrainConfig(task=task)
    return TrainedModel(kind="lr_sim", task=task, config=cfg, weight=w, bias=b, warning=warning)


def train_lr_gse(
    examples: Sequence[PairExample], table: EmbeddingTable, task: str = "binary"
) -> TrainedModel:
    x = np.array([gse_similarity(ex, table) for ex in examples])
    y = np.array([ex.label(task) for ex in examples])
    w, b, warning = _fit_logistic(x, y, task)
    cfg = TrainConfig(task=task)
    return TrainedModel(
        kind="lr_gse", task=task, config=cfg, weight=w, bias=b, warning=warning, table=table
    )


def _fit_perceptron(x: np.ndarray, y01: np.ndarray):
    y = np.where(y01 > 0, 1.0, -1.0)
    w = 0.0
    b = 0.0
    for _ in range(PERCEPTRON_MAX_PASSES):
        mistakes = 0
        for xi, yi in zip(x, y):
            if yi * (w * xi + b) <= 0:
                w += yi * xi
                b += yi
                mistakes += 1
        if mistakes == 0:
            break
    return np.array([w]), np.array([b])


def train_perceptron_sim(
    pairs: Sequence[VirusPair], offsets: OffsetMap, task: str = "binary"
) -> TrainedModel:
    """Classic perceptron on the scalar similarity; binary only."""
    if task != "binary":
        raise UnsupportedTaskError("the perceptron baseline supports only the binary task")
    x = np.array([sim_feature(p, offsets) for p in pairs])
    y = np.array([p.binary_label for p in pairs])
    w, b = _fit_perceptron(x, y)
    return TrainedModel(
        kind="perceptron_sim", task=task, config=TrainConfig(task=task), weight=w, bias=b
    )


def train_perceptron_gse(
    examples: Sequence[PairExample], table: EmbeddingTable, task: str = "binary"
) -> TrainedModel:
    if task != "binary":
        raise UnsupportedTaskError("the perceptron baseline supports only the binary task")
    x = np.array([gse_similarity(ex, table) for ex in examples])
    y = np.array([ex.binary_label for ex in examples])
    w, b = _fit_perceptron(x, y)
    return TrainedModel(
        kind="perceptron_gse",
        task=task,
        config=TrainConfig(task=task),
        weight=w,
        bias=b,
        table=table,
    )


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def _build_tree(
    x: np.ndarray, y: np.ndarray, num_classes: int, depth: int, max_depth: int
) -> dict:
    counts = np.bincount(y, minlength=num_classes).astype(np.float64)
    leaf = {"probs": (counts / counts.sum()).tolist()}
    if depth >= max_depth or len(np.unique(y)) <= 1:
        return leaf
    values = np.unique(x)
    if len(values) < 2:
        return leaf
    parent_gini = _gini(counts)
    best = None
    for mid in (values[:-1] + values[1:]) / 2.0:
        left = x <= mid
        nl = left.sum()
        nr = len(x) - nl
        g = (
            nl * _gini(np.bincount(y[left], minlength=num_classes))
            + nr * _gini(np.bincount(y[~left], minlength=num_classes))
        ) / len(x)
        if best is None or g < best[0] - 1e-15:
            best = (g, mid, left)
    if best is None or best[0] >= parent_gini - 1e-12:
        return leaf
    _, threshold, left = best
    return {
        "threshold": float(threshold),
        "left": _build_tree(x[left], y[left], num_classes, depth + 1, max_depth),
        "right": _build_tree(x[~left], y[~left], num_classes, depth + 1, max_depth),
    }


def train_dtree(
    features: Sequence[float],
    labels: Sequence[int],
    num_classes: int | None = None,
    max_depth: int = 5,
    kind: str = "dtree_sim",
    task: str = "binary",
) -> TrainedModel:
    """CART with Gini impurity over a single scalar feature, depth-capped."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(y.max()) + 1 if len(y) else 2
    tree = _build_tree(x, y, num_classes, depth=0, max_depth=max_depth)
    return TrainedModel(kind=kind, task=task, config=TrainConfig(task=task), tree=tree)


def train_dtree_sim(
    pairs: Sequence[VirusPair], offsets: OffsetMap, task: str = "binary", max_depth: int = 5
) -> TrainedModel:
    x = [sim_feature(p, offsets) for p in pairs]
    y = [p.binary_label if task == "binary" else p.level_label for p in pairs]
    return train_dtree(x, y, task_classes(task), max_depth, kind="dtree_sim", task=task)


def train_dtree_gse(
    examples: Sequence[PairExample],
    table: EmbeddingTable,
    task: str = "binary",
    max_depth: int = 5,
) -> TrainedModel:
    x = [gse_similarity(ex, table) for ex in examples]
    y = [ex.label(task) for ex in examples]
    model = train_dtree(x, y, task_classes(task), max_depth, kind="dtree_gse", task=task)
    model.table = table
    return model


def tree_depth(tree: dict) -> int:
    if "probs" in tree:
        return 0
    return 1 + max(tree_depth(tree["left"]), tree_depth(tree["right"]))


# ---------------------------------------------------------------------------
# prediction


def predict(model: TrainedModel, ex: PairExample) -> np.ndarray:
    """Class probabilities for a preprocessed pair (embedding-based model kinds)."""
    if model.kind in ("dpcipi", "bilstm_concat"):
        if model.table is None:
            raise ValueError("model has no embedding table attached; load one first")
        batch = [_embed_example(model.table, ex, model.config.k)]
        probs, _ = nn.pair_forward_batch(model.classifier, batch)
        return probs[0]
    if model.kind == "nn_gse":
        if model.table is None:
            raise ValueError("model has no embedding table attached; load one first")
        X = _gse_features([ex], model.table, model.config.k)
        return nn.mlp_classify(model.head, X[0])
    if model.kind in ("lr_gse", "perceptron_gse", "dtree_gse"):
        if model.table is None:
            raise ValueError("model has no embedding table attached; load one first")
        return predict_scalar(model, gse_similarity(ex, model.table))
    raise ValueError(
        f"model kind '{model.kind}' predicts from a scalar feature; use predict_scalar"
    )


def predict_scalar(model: TrainedModel, x: float) -> np.ndarray:
    """Class probabilities from the per-pair scalar feature."""
    if model.kind in ("lr_sim", "lr_gse"):
        if model.task == "binary":
            p = float(nn.sigmoid(np.array([model.weight[0] * x + model.bias[0]]))[0])
            return np.array([1.0 - p, p])
        scores = nn.sigmoid(model.weight * x + model.bias)
        total = scores.sum()
        if total == 0:
            return np.full(len(scores), 1.0 / len(scores))
        return scores / total
    if model.kind in ("perceptron_sim", "perceptron_gse"):
        cls = 1 if model.weight[0] * x + model.bias[0] > 0 else 0
        probs = np.zeros(2)
        probs[cls] = 1.0
        return probs
    if model.kind in ("dtree_sim", "dtree_gse"):
        node = model.tree
        while "probs" not in node:
            node = node["left"] if x <= node["threshold"] else node["right"]
        return np.array(node["probs"])
    raise ValueError(f"model kind '{model.kind}' does not predict from a scalar")


def evaluate_examples(
    model: TrainedModel, examples: Sequence[PairExample], task: str | None = None
):
    """Argmax predictions and the matching labels over a pair-example list."""
    task = model.task if task is None else task
    preds = []
    labels = []
    for ex in examples:
        probs = predict(model, ex)
        preds.append(int(np.argmax(probs)))
        labels.append(ex.label(task))
    return preds, labels


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_VERSION = 1


def save_checkpoint(model: TrainedModel, path, config_hash: str = "") -> None:
    """Single-file npz container: parameter tensors plus a JSON meta record."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "task": model.task,
        "config": asdict(model.config),
        "config_hash": config_hash,
        "history": model.history,
        "warning": model.warning,
        "dim": model.dim,
        "adam_step": model.adam.step if model.adam else 0,
    }
    if model.table is not None:
        meta["table_source"] = model.table.source
        meta["table_k"] = model.table.k
        meta["table_dim"] = model.table.dim
    arrays: dict[str, np.ndarray] = {}
    if model.classifier is not None:
        meta["operator"] = model.classifier.operator
        meta["pool"] = model.classifier.pool
        meta["num_classes"] = model.classifier.num_classes
        meta["hidden_dim"] = model.classifier.bilstm.hidden_dim
        meta["input_dim"] = model.classifier.bilstm.input_dim
        for key, value in model.classifier.parameters().items():
            arrays[f"param/{key}"] = value
        if model.adam is not None:
            for key in model.adam.m:
                arrays[f"adam_m/{key}"] = model.adam.m[key]
                arrays[f"adam_v/{key}"] = model.adam.v[key]
    elif model.head is not None:
        params = {
            "mlp_w1": model.head.w1,
            "mlp_b1": model.head.b1,
            "mlp_w2": model.head.w2,
            "mlp_b2": model.head.b2,
        }
        for key, value in params.items():
            arrays[f"param/{key}"] = value
        if model.adam is not None:
            for key in model.adam.m:
                arrays[f"adam_m/{key}"] = model.adam.m[key]
                arrays[f"adam_v/{key}"] = model.adam.v[key]
    elif model.weight is not None:
        arrays["param/weight"] = model.weight
        arrays["param/bias"] = model.bias
    elif model.tree is not None:
        meta["tree"] = model.tree
    if model.config.train_embeddings and model.table is not None:
        tokens = sorted(model.table.vectors)
        meta["emb_tokens"] = tokens
        arrays["emb_matrix"] = np.stack([model.table.vectors[t] for t in tokens])
    np.savez(path, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_checkpoint(path, table: EmbeddingTable | None = None) -> TrainedModel:
    """Rebuild a TrainedModel; a random-init table is regenerated from the config.

    For pretrained embeddings pass the loaded table (or attach one later);
    fine-tuned tables ride along inside the checkpoint itself.
    """
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        arrays = {k: data[k] for k in data.files if k != "meta"}
    cfg = TrainConfig(**meta["config"])
    model = TrainedModel(
        kind=meta["kind"],
        task=meta["task"],
        config=cfg,
        history=list(meta.get("history") or []),
        warning=meta.get("warning"),
        dim=meta.get("dim"),
    )
    if "emb_tokens" in meta:
        matrix = arrays["emb_matrix"]
        model.table = EmbeddingTable(
            k=cfg.k,
            dim=matrix.shape[1],
            vectors={t: matrix[i] for i, t in enumerate(meta["emb_tokens"])},
            source="checkpoint",
        )
    elif table is not None:
        model.table = table
    else:
        source = meta.get("table_source", "")
        if source.startswith("random(") and source.endswith(")"):
            model.table = random_table(
                meta["table_k"], meta["table_dim"], int(source[len("random(") : -1])
            )

    def param(key):
        return arrays[f"param/{key}"]

    if model.kind in ("dpcipi", "bilstm_concat"):
        bilstm = nn.BiLstmParams(
            input_dim=meta["input_dim"],
            hidden_dim=meta["hidden_dim"],
            forward=nn.LstmDirection(
                wx=param("lstm_fwd_wx"), wh=param("lstm_fwd_wh"), b=param("lstm_fwd_b")
            ),
            backward=nn.LstmDirection(
                wx=param("lstm_bwd_wx"), wh=param("lstm_bwd_wh"), b=param("lstm_bwd_b")
            ),
        )
        mlp = nn.MlpParams(
            w1=param("mlp_w1"), b1=param("mlp_b1"), w2=param("mlp_w2"), b2=param("mlp_b2")
        )
        model.classifier = nn.PairClassifier(
            bilstm=bilstm, mlp=mlp, operator=meta["operator"], pool=meta["pool"]
        )
    elif model.kind == "nn_gse":
        model.head = nn.MlpParams(
            w1=param("mlp_w1"), b1=param("mlp_b1"), w2=param("mlp_w2"), b2=param("mlp_b2")
        )
    elif model.kind in ("lr_sim", "lr_gse", "perceptron_sim", "perceptron_gse"):
        model.weight = param("weight")
        model.bias = param("bias")
    elif model.kind in ("dtree_sim", "dtree_gse"):
        model.tree = meta["tree"]
    else:
        raise ValueError(f"unknown checkpoint kind '{model.kind}'")
    if any(k.startswith("adam_m/") for k in arrays):
        model.adam = nn.AdamState(
            m={k[len("adam_m/") :]: v for k, v in arrays.items() if k.startswith("adam_m/")},
            v={k[len("adam_v/") :]: v for k, v in arrays.items() if k.startswith("adam_v/")},
            step=meta.get("adam_step", 0),
        )
    return model


# ---------------------------------------------------------------------------
# ablation harness

ABLATION_GRID = (
    ("pretrained", "mii"),
    ("pretrained", "concat"),
    ("random", "mii"),
    ("random", "concat"),
)

METRIC_NAMES = ("accuracy", "weighted_precision", "weighted_recall", "weighted_f1")


@dataclass
class AblationReport:
    seed: int
    tasks: tuple[str, ...]
    cells: list[dict]
    improvements: list[dict]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tasks": list(self.tasks),
            "cells": self.cells,
            "improvements": self.improvements,
        }


def _improvement(a: float, b: float) -> dict:
    return {
        "point_diff": (a - b) * 100.0,
        "relative_percent": ((a - b) / b * 100.0) if b > 0 else None,
    }


def run_ablation(
    train_examples: Sequence[PairExample],
    test_examples: Sequence[PairExample],
    table: EmbeddingTable,
    cfg: TrainConfig,
    tasks: Sequence[str] = TASKS,
) -> AblationReport:
    """Train the {pretrained, random} x {mii, concat} grid under one seed.

    Improvement rows compare against the weaker setting both as percentage
    points and as relative percent, for each of the four weighted metrics.
    """
    cells = []
    by_key: dict[tuple, dict] = {}
    for task in tasks:
        for init, operator in ABLATION_GRID:
            cell_cfg = replace(cfg, task=task, operator=operator, embed_init=init)
            cell_table = table if init == "pretrained" else random_table(
                table.k, table.dim, cfg.seed
            )
            model = train_dpcipi(train_examples, cell_table, cell_cfg)
            preds, labels = evaluate_examples(model, test_examples)
            m = weighted_metrics(confusion(preds, labels, cell_cfg.num_classes))
            cell = {
                "task": task,
                "embed_init": init,
                "operator": operator,
                "seed": cfg.seed,
                "metrics": m,
            }
            cells.append(cell)
            by_key[(task, init, operator)] = m
    improvements = []
    for task in tasks:
        best = by_key[(task, "pretrained", "mii")]
        for label, other in (
            ("pretrained_vs_random_init", by_key[(task, "random", "mii")]),
            ("mii_vs_concat_operator", by_key[(task, "pretrained", "concat")]),
        ):
            improvements.append(
                {
                    "task": task,
                    "comparison": label,
                    "metrics": {
                        name: _improvement(best[name], other[name]) for name in METRIC_NAMES
                    },
                }
            )
    return AblationReport(seed=cfg.seed, tasks=tuple(tasks), cells=cells, improvements=improvements)
