"""Pipeline stages over a working directory: preprocess, train, evaluate,
ablate, predict. Each stage is deterministic, so unchanged inputs reproduce
byte-identical outputs."""

from __future__ import annotations

import json
from pathlib import Path

from . import models, seqio
from .align import OffsetMap, align_sequences
from .config import RunConfig
from .embed import EmbeddingTable, load_table, random_table
from .errors import InputError
from .kmer import PairExample, deduplicate_pair, read_pair_examples, segment, write_pair_examples
from .metrics import confusion, confusion_to_csv, weighted_metrics

OFFSETS_FILE = "offsets.json"
DATASET_FILE = "dataset.jsonl"
TRAIN_PAIRS_FILE = "pairs_train.jsonl"
TEST_PAIRS_FILE = "pairs_test.jsonl"
SUMMARY_FILE = "preprocess_summary.json"
CHECKPOINT_FILE = "checkpoint.npz"
HISTORY_FILE = "history.json"
METRICS_FILE = "metrics.json"
CONFUSION_FILE = "confusion.csv"
ABLATION_FILE = "ablation.json"


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require_file(path: str | None, what: str) -> Path:
    if not path:
        raise InputError(f"no {what} path configured")
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} file not found: {p}")
    return p


def _workdir(cfg: RunConfig) -> Path:
    wd = Path(cfg.resolved_workdir())
    wd.mkdir(parents=True, exist_ok=True)
    return wd


def preprocess(cfg: RunConfig) -> dict:
    """Parse inputs, align, deduplicate every pair, and write the split files."""
    fasta_path = _require_file(cfg.paths.fasta, "FASTA")
    hi_path = _require_file(cfg.paths.hi_csv, "HI CSV")
    wd = _workdir(cfg)

    sequences = seqio.parse_fasta(fasta_path.read_text(encoding="utf-8"))
    records, skipped = seqio.parse_hi_table(hi_path.read_text(encoding="utf-8"))
    pairs = seqio.build_dataset(records, sequences)
    offsets = align_sequences(sequences)
    (wd / OFFSETS_FILE).write_text(offsets.to_json() + "\n", encoding="utf-8")
    seqio.write_dataset_jsonl(wd / DATASET_FILE, pairs)

    segmented = {s.name: segment(s, cfg.k) for s in sequences}
    examples: dict[str, list[PairExample]] = {"train": [], "test": []}
    for pair in pairs:
        r_d, t_d = deduplicate_pair(
            segmented[pair.reference.name],
            segmented[pair.test.name],
            offsets,
            keep_tails=cfg.dedup_keep_tails,
        )
        examples[pair.split].append(
            PairExample(
                reference_tokens=r_d.tokens,
                test_tokens=t_d.tokens,
                binary_label=pair.binary_label,
                level_label=pair.level_label,
                split=pair.split,
            )
        )
    write_pair_examples(wd / TRAIN_PAIRS_FILE, examples["train"])
    write_pair_examples(wd / TEST_PAIRS_FILE, examples["test"])

    level_counts = [0, 0, 0, 0]
    for pair in pairs:
        level_counts[pair.level_label] += 1
    summary = {
        "pairs": len(pairs),
        "strains": len(sequences),
        "binary_counts": {
            "positive": sum(p.binary_label for p in pairs),
            "negative": sum(1 - p.binary_label for p in pairs),
        },
        "level_counts": level_counts,
        "skipped_rows": skipped,
        "train_pairs": len(examples["train"]),
        "test_pairs": len(examples["test"]),
        "template": offsets.template_name,
        "workdir": str(wd),
    }
    _write_json(wd / SUMMARY_FILE, summary)
    return summary


def _load_offsets(wd: Path) -> OffsetMap:
    path = wd / OFFSETS_FILE
    if not path.is_file():
        raise InputError(f"offsets file not found: {path}; run preprocess first")
    return OffsetMap.from_json(path.read_text(encoding="utf-8"))


def _resolve_table(cfg: RunConfig, dim_hint: int | None = None) -> EmbeddingTable:
    if cfg.embed_init == "pretrained":
        path = _require_file(cfg.paths.embedding_table, "embedding table")
        table = load_table(path)
        if table.k != cfg.k:
            raise InputError(f"embedding table k={table.k} does not match configured k={cfg.k}")
        return table
    return random_table(cfg.k, dim_hint or cfg.embedding_dim, cfg.seed)


def train(cfg: RunConfig) -> dict:
    """Train the configured model on the preprocessed training pairs."""
    wd = _workdir(cfg)
    train_path = wd / TRAIN_PAIRS_FILE
    if not train_path.is_file():
        raise InputError(f"training pairs not found: {train_path}; run preprocess first")
    examples = read_pair_examples(train_path)
    if not examples:
        raise InputError("the training split is empty")
    table = _resolve_table(cfg)
    tc = cfg.train_config()
    if cfg.model == "dpcipi":
        model = models.train_dpcipi(examples, table, tc)
    else:
        model = models.train_bilstm_concat(examples, table, tc)
    config_hash = cfg.content_hash()
    models.save_checkpoint(model, wd / CHECKPOINT_FILE, config_hash=config_hash)
    _write_json(wd / HISTORY_FILE, {"epoch_mean_loss": model.history})
    return {
        "kind": model.kind,
        "task": model.task,
        "epochs": len(model.history),
        "final_loss": model.history[-1] if model.history else None,
        "checkpoint": str(wd / CHECKPOINT_FILE),
        "config_hash": config_hash,
    }


def _load_model(cfg: RunConfig, wd: Path) -> models.TrainedModel:
    ckpt = wd / CHECKPOINT_FILE
    if not ckpt.is_file():
        raise InputError(f"checkpoint not found: {ckpt}; run train first")
    table = None
    # A fine-tuned table travels inside the checkpoint; otherwise resolve here.
    model = models.load_checkpoint(ckpt)
    if model.table is None:
        if model.config.embed_init == "pretrained":
            table = _resolve_table(cfg, dim_hint=model.dim)
            if model.dim is not None and table.dim != model.dim:
                raise InputError(
                    f"embedding table dim={table.dim} does not match checkpoint dim={model.dim}"
                )
            model.table = table
        else:
            raise InputError("checkpoint does not carry an embedding table")
    return model


def evaluate(cfg: RunConfig) -> dict:
    """Score the checkpoint on the test split; writes metrics JSON and confusion CSV."""
    wd = _workdir(cfg)
    model = _load_model(cfg, wd)
    if model.task != cfg.task:
        raise InputError(
            f"task mismatch: checkpoint was trained for '{model.task}', requested '{cfg.task}'"
        )
    test_path = wd / TEST_PAIRS_FILE
    if not test_path.is_file():
        raise InputError(f"test pairs not found: {test_path}; run preprocess first")
    examples = read_pair_examples(test_path)
    if not examples:
        raise InputError("the test split is empty")
    preds, labels = models.evaluate_examples(model, examples)
    matrix = confusion(preds, labels, models.task_classes(model.task))
    report = {
        "task": model.task,
        "model_kind": model.kind,
        "confusion": matrix.counts.tolist(),
        **weighted_metrics(matrix),
    }
    _write_json(wd / METRICS_FILE, report)
    (wd / CONFUSION_FILE).write_text(confusion_to_csv(matrix), encoding="utf-8")
    return report


def ablate(cfg: RunConfig, tasks: tuple[str, ...] = models.TASKS) -> dict:
    """Run the init/operator grid on the preprocessed pairs and write the report."""
    wd = _workdir(cfg)
    train_path = wd / TRAIN_PAIRS_FILE
    test_path = wd / TEST_PAIRS_FILE
    for p in (train_path, test_path):
        if not p.is_file():
            raise InputError(f"pair file not found: {p}; run preprocess first")
    train_examples = read_pair_examples(train_path)
    test_examples = read_pair_examples(test_path)
    if not train_examples or not test_examples:
        raise InputError("ablation requires non-empty train and test splits")
    table = _resolve_table(cfg)
    report = models.run_ablation(train_examples, test_examples, table, cfg.train_config(), tasks)
    data = report.to_dict()
    _write_json(wd / ABLATION_FILE, data)
    return data


def predict(cfg: RunConfig, reference: str, test: str) -> dict:
    """Class probabilities for one raw sequence pair against the checkpoint."""
    wd = _workdir(cfg)
    model = _load_model(cfg, wd)
    ref_seq = _sequence_from_bases("reference", reference)
    test_seq = _sequence_from_bases("test", test)
    pair_offsets = align_sequences([ref_seq, test_seq])
    r_d, t_d = deduplicate_pair(
        segment(ref_seq, model.config.k),
        segment(test_seq, model.config.k),
        pair_offsets,
        keep_tails=cfg.dedup_keep_tails,
    )
    example = PairExample(
        reference_tokens=r_d.tokens,
        test_tokens=t_d.tokens,
        binary_label=0,
        level_label=0,
        split="test",
    )
    probs = models.predict(model, example)
    return {
        "task": model.task,
        "classes": list(range(len(probs))),
        "probabilities": [float(p) for p in probs],
    }


def _sequence_from_bases(name: str, bases: str):
    normalized = bases.strip().upper()
    if not normalized:
        raise InputError(f"{name} sequence is empty")
    for ch in normalized:
        if ch not in seqio.ALPHABET:
            raise InputError(f"{name} sequence contains invalid base {ch!r}")
    return seqio.NucleotideSequence(name=name, accession="", bases=normalized)
