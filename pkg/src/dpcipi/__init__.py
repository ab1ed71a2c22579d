"""Cross-immunity prediction for influenza gene sequence pairs.

The package pipeline: parse strain sequences and HI titers, align them to a
common template, deduplicate same-locus k-mers per pair, embed the survivors
with a pretrained k-mer table, encode with a BiLSTM, combine the pair with the
mutual-information inference operator, and classify the HI titer bin. The
statistical baselines, weighted metrics, and ablation harness live alongside.
"""

__version__ = "0.1.0"
