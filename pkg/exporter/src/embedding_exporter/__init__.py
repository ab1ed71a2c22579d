"""One-shot extraction of a DNA language model's static k-mer embedding table."""

__version__ = "0.1.0"

from .export import ExportManifest, canonical_kmers, export_table

__all__ = ["ExportManifest", "canonical_kmers", "export_table"]
