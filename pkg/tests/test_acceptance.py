"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -s` to see the PASS/FAIL lines.
The two dataset-dependent criteria need real inputs and are skipped unless
DPCIPI_VHID_FASTA / DPCIPI_VHID_CSV (and DPCIPI_EMBEDDING_TABLE for the
ablation ordering) point at them.
"""

import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from dpcipi import models, nn, pipeline, seqio, synthetic
from dpcipi.align import align_sequences
from dpcipi.embed import load_table, random_table
from dpcipi.kmer import KmerSequence, deduplicate_pair, padding_token
from dpcipi.align import OffsetMap
from dpcipi.metrics import ConfusionMatrix, weighted_metrics
from dpcipi.seqio import NucleotideSequence

from conftest import write_corpus_files
from oracles import brute_force_offsets, dedup_oracle, finite_difference_grads, tensor_relative_error

VHID_FASTA = os.environ.get("DPCIPI_VHID_FASTA")
VHID_CSV = os.environ.get("DPCIPI_VHID_CSV")
EMBEDDING_TABLE = os.environ.get("DPCIPI_EMBEDDING_TABLE")


@contextmanager
def criterion(name):
    try:
        yield
    except pytest.skip.Exception as exc:
        print(f"[ACCEPTANCE] {name}: SKIP ({exc})")
        raise
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def test_alignment_oracle():
    with criterion("alignment-oracle"):
        rng = np.random.default_rng(2024)
        align_time = 0.0
        for _ in range(200):
            a = "".join("ACGT"[i] for i in rng.integers(0, 4, size=rng.integers(1, 65)))
            b = "".join("ACGT"[i] for i in rng.integers(0, 4, size=rng.integers(1, 65)))
            seqs = [
                NucleotideSequence(name="a", accession="", bases=a),
                NucleotideSequence(name="b", accession="", bases=b),
            ]
            start = time.perf_counter()
            result = align_sequences(seqs)
            align_time += time.perf_counter() - start
            template_name, expected = brute_force_offsets([("a", a), ("b", b)])
            assert result.template_name == template_name
            assert result.offsets == expected
        assert align_time < 1.0, f"alignment took {align_time:.3f}s over 200 pairs"


def test_dedup_properties():
    with criterion("dedup-properties"):
        rng = np.random.default_rng(77)
        vocab = ["AAA", "AAT", "ATT", "TTT", "CCC", "GGG", "ACG", "CGT"]
        k = 3
        pad = padding_token(k)
        for _ in range(200):
            r_tokens = [vocab[i] for i in rng.integers(0, len(vocab), size=rng.integers(0, 14))]
            t_tokens = [vocab[i] for i in rng.integers(0, len(vocab), size=rng.integers(0, 14))]
            r_off, t_off = int(rng.integers(0, 5)), int(rng.integers(0, 5))
            offsets = OffsetMap("r", {"r": r_off, "t": t_off})
            r = KmerSequence("r", tuple(r_tokens), k)
            t = KmerSequence("t", tuple(t_tokens), k)
            r_d, t_d = deduplicate_pair(r, t, offsets)

            exp_r, exp_t = dedup_oracle(r_tokens, t_tokens, r_off, t_off, k)
            assert list(r_d.tokens) == exp_r
            assert list(t_d.tokens) == exp_t

            # no common locus survives when outputs are re-padded to position
            m = [pad] * r_off + r_tokens
            n = [pad] * t_off + t_tokens
            limit = min(len(m), len(n))
            surv_m = {i for i in range(len(m)) if not (i < limit and m[i] == n[i]) and m[i] != pad}
            surv_n = {i for i in range(len(n)) if not (i < limit and m[i] == n[i]) and n[i] != pad}
            for i in surv_m & surv_n:
                assert m[i] != n[i]

            # subsequence property and padding-free outputs
            def is_subsequence(sub, seq):
                it = iter(seq)
                return all(any(tok == other for other in it) for tok in sub)

            assert is_subsequence(r_d.tokens, r.tokens)
            assert is_subsequence(t_d.tokens, t.tokens)
            assert pad not in r_d.tokens and pad not in t_d.tokens

            # self-deduplication empties both sides
            a, b = deduplicate_pair(r, KmerSequence("t", tuple(r_tokens), k),
                                    OffsetMap("r", {"r": r_off, "t": r_off}))
            assert a.tokens == () and b.tokens == ()


def test_gradient_check():
    with criterion("gradient-check"):
        start = time.perf_counter()
        rng = np.random.default_rng(314)
        for trial in range(10):
            H, D = 4, 6
            C = int(rng.choice([2, 4]))
            model = nn.init_pair_classifier(D, H, 8, C, "mii", seed=trial, pool="final")
            model.mlp.w2[:] = rng.normal(scale=0.5, size=model.mlp.w2.shape)
            model.mlp.b2[:] = rng.normal(scale=0.1, size=model.mlp.b2.shape)
            batch = [
                (
                    rng.normal(size=(int(rng.integers(0, 6)), D)),
                    rng.normal(size=(int(rng.integers(1, 6)), D)),
                )
                for _ in range(2)
            ]
            labels = [int(rng.integers(C)) for _ in range(2)]
            _, grads, _ = nn.pair_loss_and_grads(model, batch, labels)

            def loss_fn():
                loss, _, _ = nn.pair_loss_and_grads(model, batch, labels)
                return loss

            fd = finite_difference_grads(loss_fn, model.parameters(), eps=1e-4)
            for key in grads:
                err = tensor_relative_error(grads[key], fd[key])
                assert err < 1e-4, f"trial {trial} {key}: relative error {err:.2e}"
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"gradient check took {elapsed:.1f}s"


def test_metrics_fixture():
    with criterion("metrics-fixture"):
        out = weighted_metrics(ConfusionMatrix(np.array([[2, 0], [1, 1]])))
        assert out["accuracy"] == pytest.approx(0.75)
        assert out["weighted_precision"] == pytest.approx(0.8333, abs=1e-4)
        assert out["weighted_recall"] == pytest.approx(0.75)
        assert out["weighted_f1"] == pytest.approx(0.7333, abs=1e-4)
        rng = np.random.default_rng(8)
        for _ in range(100):
            C = int(rng.integers(2, 6))
            counts = rng.integers(0, 25, size=(C, C))
            if counts.sum() == 0:
                counts[0, 0] = 1
            m = weighted_metrics(ConfusionMatrix(counts))
            assert m["weighted_recall"] == pytest.approx(m["accuracy"], abs=1e-12)


def test_dataset_fixtures_vhid():
    with criterion("dataset-fixtures-vhid"):
        if not (VHID_FASTA and VHID_CSV):
            pytest.skip("set DPCIPI_VHID_FASTA and DPCIPI_VHID_CSV to run")
        sequences = seqio.parse_fasta(Path(VHID_FASTA).read_text(encoding="utf-8"))
        records, skipped = seqio.parse_hi_table(Path(VHID_CSV).read_text(encoding="utf-8"))
        pairs = seqio.build_dataset(records, sequences)
        assert len(pairs) == 2472
        positives = sum(p.binary_label for p in pairs)
        assert positives == 1733
        assert len(pairs) - positives == 739
        if skipped:
            # a full conversion keeps the 7,848 combinations without titers
            assert skipped == 7848, f"skipped {skipped} empty-titer rows"
        level_counts = [0, 0, 0, 0]
        for p in pairs:
            level_counts[p.level_label] += 1
        assert sum(level_counts) == 2472
        assert level_counts[0] == 739  # the binning rule ties bin 0 to the negatives
        reported = [693, 372, 839, 568]
        if level_counts != reported:
            print(f"  note: level counts {level_counts} differ from reported {reported}")
        for p in pairs:
            if p.split == "train":
                assert seqio.strain_year(p.reference.name) < 1995
                assert seqio.strain_year(p.test.name) < 1995


def test_synthetic_end_to_end():
    with criterion("synthetic-end-to-end"):
        start = time.perf_counter()
        examples = synthetic.make_hamming_corpus(n_pairs=500, length=60, k=3, seed=42)
        train, test = synthetic.split_examples(examples)
        table = random_table(k=3, dim=16, seed=7)
        cfg = models.TrainConfig(
            task="binary",
            k=3,
            embed_init="random",
            operator="mii",
            epochs=30,
            batch_size=10,
            learning_rate=3e-3,
            seed=5,
            hidden_dim=32,
            mlp_hidden=32,
        )
        dpcipi_model = models.train_dpcipi(train, table, cfg)
        preds, labels = models.evaluate_examples(dpcipi_model, test)
        dpcipi_acc = float(np.mean(np.array(preds) == np.array(labels)))
        assert dpcipi_acc >= 0.95, f"dpcipi held-out accuracy {dpcipi_acc:.3f}"
        preds, labels = models.evaluate_examples(dpcipi_model, train)
        train_acc = float(np.mean(np.array(preds) == np.array(labels)))
        assert train_acc >= 0.99, f"dpcipi train accuracy {train_acc:.3f}"

        concat_model = models.train_bilstm_concat(train, table, cfg)
        preds, labels = models.evaluate_examples(concat_model, test)
        concat_acc = float(np.mean(np.array(preds) == np.array(labels)))
        assert concat_acc >= 0.90, f"bilstm-concat held-out accuracy {concat_acc:.3f}"
        preds, labels = models.evaluate_examples(concat_model, train)
        concat_train = float(np.mean(np.array(preds) == np.array(labels)))
        assert concat_train >= 0.95, f"bilstm-concat train accuracy {concat_train:.3f}"

        elapsed = time.perf_counter() - start
        assert elapsed < 300.0, f"end-to-end run took {elapsed:.0f}s"
        print(f"  dpcipi={dpcipi_acc:.3f} bilstm_concat={concat_acc:.3f} in {elapsed:.0f}s")


def test_ablation_ordering_vhid(tmp_path):
    with criterion("ablation-ordering-vhid"):
        if not (VHID_FASTA and VHID_CSV and EMBEDDING_TABLE):
            pytest.skip(
                "set DPCIPI_VHID_FASTA, DPCIPI_VHID_CSV and DPCIPI_EMBEDDING_TABLE to run"
            )
        from dpcipi.config import PathsConfig, RunConfig

        epochs = int(os.environ.get("DPCIPI_ABLATION_EPOCHS", "50"))
        cfg = RunConfig(
            paths=PathsConfig(
                fasta=VHID_FASTA,
                hi_csv=VHID_CSV,
                embedding_table=EMBEDDING_TABLE,
                workdir=str(tmp_path / "vhid"),
            ),
            task="binary",
            k=load_table(EMBEDDING_TABLE).k,
            epochs=epochs,
            seed=0,
        )
        pipeline.preprocess(cfg)
        report = pipeline.ablate(cfg, tasks=("binary",))
        f1 = {
            (c["embed_init"], c["operator"]): c["metrics"]["weighted_f1"]
            for c in report["cells"]
        }
        print(f"  binary weighted F1 per cell: {f1}")
        assert f1[("pretrained", "mii")] >= f1[("pretrained", "concat")]
        assert f1[("pretrained", "mii")] >= f1[("random", "mii")]


def test_determinism(tmp_path):
    with criterion("determinism"):
        fasta, csv = write_corpus_files(tmp_path, n_pairs=60, seed=9)
        workdir = tmp_path / "work"
        config = {
            "paths": {
                "fasta": str(fasta),
                "hi_csv": str(csv),
                "workdir": str(workdir),
            },
            "task": "binary",
            "k": 3,
            "embed_init": "random",
            "embedding_dim": 16,
            "epochs": 2,
            "batch_size": 10,
            "learning_rate": 3e-3,
            "seed": 5,
            "hidden_dim": 16,
            "mlp_hidden": 16,
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config), encoding="utf-8")

        tracked = [
            pipeline.OFFSETS_FILE,
            pipeline.DATASET_FILE,
            pipeline.TRAIN_PAIRS_FILE,
            pipeline.TEST_PAIRS_FILE,
            pipeline.SUMMARY_FILE,
            pipeline.CHECKPOINT_FILE,
            pipeline.HISTORY_FILE,
            pipeline.METRICS_FILE,
            pipeline.CONFUSION_FILE,
        ]

        def run_all():
            for command in ("preprocess", "train", "evaluate"):
                result = subprocess.run(
                    [sys.executable, "-m", "dpcipi.cli", command, "--config", str(config_path)],
                    capture_output=True,
                    text=True,
                )
                assert result.returncode == 0, result.stderr
            return {name: (workdir / name).read_bytes() for name in tracked}

        first = run_all()
        second = run_all()
        assert first == second
