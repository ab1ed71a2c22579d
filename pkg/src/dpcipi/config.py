"""Run configuration shared by the service endpoints and the CLI."""

from __future__ import annotations

import hashlib
import json
import os

from pydantic import BaseModel, Field, field_validator

from .models import TrainConfig

WORKDIR_ENV = "DPCIPI_WORKDIR"


class PathsConfig(BaseModel):
    fasta: str | None = None
    hi_csv: str | None = None
    embedding_table: str | None = None
    workdir: str = "."


class RunConfig(BaseModel):
    """One JSON config drives every pipeline command; flags override fields."""

    paths: PathsConfig = Field(default_factory=PathsConfig)
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
    embedding_dim: int = 32  # used only when embed_init=random
    pool: str = "final"
    train_embeddings: bool = False
    model: str = "dpcipi"
    dedup_keep_tails: bool = True

    @field_validator("task")
    @classmethod
    def _task(cls, v):
        if v not in ("binary", "multilevel"):
            raise ValueError("task must be 'binary' or 'multilevel'")
        return v

    @field_validator("model")
    @classmethod
    def _model(cls, v):
        if v not in ("dpcipi", "bilstm_concat"):
            raise ValueError("model must be 'dpcipi' or 'bilstm_concat'")
        return v

    @field_validator("k", "batch_size", "embedding_dim", "hidden_dim", "mlp_hidden")
    @classmethod
    def _positive(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return v

    @field_validator("epochs")
    @classmethod
    def _epochs(cls, v):
        if v < 0:
            raise ValueError("epochs must be >= 0")
        return v

    def resolved_workdir(self) -> str:
        return os.environ.get(WORKDIR_ENV) or self.paths.workdir

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            task=self.task,
            k=self.k,
            embed_init=self.embed_init,
            operator=self.operator,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
            hidden_dim=self.hidden_dim,
            mlp_hidden=self.mlp_hidden,
            pool=self.pool,
            train_embeddings=self.train_embeddings,
        )

    def content_hash(self) -> str:
        canonical = json.dumps(self.model_dump(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]
