"""FastAPI service wrapping the pipeline; the CLI talks to these endpoints."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__, pipeline
from .config import RunConfig
from .errors import InputError

app = FastAPI(title="dpcipi", version=__version__)


class HealthResponse(BaseModel):
    status: str
    version: str


class BinaryCounts(BaseModel):
    positive: int
    negative: int


class PreprocessResponse(BaseModel):
    pairs: int
    strains: int
    binary_counts: BinaryCounts
    level_counts: list[int]
    skipped_rows: int
    train_pairs: int
    test_pairs: int
    template: str
    workdir: str


class TrainResponse(BaseModel):
    kind: str
    task: str
    epochs: int
    final_loss: float | None
    checkpoint: str
    config_hash: str


class EvaluateResponse(BaseModel):
    task: str
    model_kind: str
    confusion: list[list[int]]
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


class AblateRequest(BaseModel):
    config: RunConfig
    tasks: list[str] = ["binary", "multilevel"]


class PredictRequest(BaseModel):
    config: RunConfig
    reference: str
    test: str


class PredictResponse(BaseModel):
    task: str
    classes: list[int]
    probabilities: list[float]


@app.exception_handler(InputError)
async def input_error_handler(request: Request, exc: InputError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/preprocess", response_model=PreprocessResponse)
def preprocess(config: RunConfig) -> PreprocessResponse:
    return PreprocessResponse(**pipeline.preprocess(config))


@app.post("/train", response_model=TrainResponse)
def train(config: RunConfig) -> TrainResponse:
    return TrainResponse(**pipeline.train(config))


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(config: RunConfig) -> EvaluateResponse:
    return EvaluateResponse(**pipeline.evaluate(config))


@app.post("/ablate")
def ablate(request: AblateRequest) -> dict:
    return pipeline.ablate(request.config, tasks=tuple(request.tasks))


@app.post("/predict", response_model=PredictResponse)
def predict(request: PredictRequest) -> PredictResponse:
    return PredictResponse(**pipeline.predict(request.config, request.reference, request.test))
