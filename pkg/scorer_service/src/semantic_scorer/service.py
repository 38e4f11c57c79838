"""HTTP service exposing pairwise semantic similarity scoring.

JSON over HTTP: ``POST /v1/similarity`` scores ordered
(reference, candidate) pairs and echoes the scoring configuration for
provenance; ``GET /healthz`` reports load state. Bind address, port,
model id, and the batch ceiling come from the environment.
"""

from __future__ import annotations

import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .encoder import DEFAULT_MODEL_ID, load_encoder

MODEL_ID_ENV = "SCORER_MODEL_ID"
MAX_BATCH_ENV = "SCORER_MAX_BATCH"
HOST_ENV = "SCORER_HOST"
PORT_ENV = "SCORER_PORT"

DEFAULT_MAX_BATCH = 128


class SimilarityPair(BaseModel):
    reference: str = Field(min_length=1)
    candidate: str = Field(min_length=1)


class SimilarityRequest(BaseModel):
    pairs: list[SimilarityPair] = Field(min_length=1)


class SimilarityResponse(BaseModel):
    scores: list[float]
    model_id: str
    score_variant: str
    rescaled: bool


class HealthResponse(BaseModel):
    status: str
    model_id: str | None = None


def create_app(model_id: str | None = None, max_batch: int | None = None) -> FastAPI:
    """Build the service; the encoder loads during application startup."""
    configured_model = model_id or os.environ.get(MODEL_ID_ENV, DEFAULT_MODEL_ID)
    batch_limit = max_batch or int(os.environ.get(MAX_BATCH_ENV, DEFAULT_MAX_BATCH))
    state: dict = {"encoder": None, "error": None}

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        try:
            state["encoder"] = load_encoder(configured_model)
        except ValueError as exc:
            state["error"] = str(exc)
        yield
        state["encoder"] = None

    app = FastAPI(title="semantic-scorer", lifespan=lifespan)

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        encoder = state["encoder"]
        if encoder is None:
            detail = state["error"] or "model loading"
            raise HTTPException(status_code=503, detail=detail)
        return HealthResponse(status="ok", model_id=encoder.model_id)

    @app.post("/v1/similarity", response_model=SimilarityResponse)
    def similarity(request: SimilarityRequest):
        encoder = state["encoder"]
        if encoder is None:
            detail = state["error"] or "model loading"
            raise HTTPException(status_code=503, detail=detail)
        if len(request.pairs) > batch_limit:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.pairs)} exceeds the limit of {batch_limit}",
            )
        try:
            scores = encoder.score_batch(
                [(pair.reference, pair.candidate) for pair in request.pairs]
            )
        except Exception as exc:  # encoder failure is a server-side error
            raise HTTPException(status_code=500, detail=f"scoring failed: {exc}") from exc
        return SimilarityResponse(
            scores=scores,
            model_id=encoder.model_id,
            score_variant=encoder.score_variant,
            rescaled=encoder.rescaled,
        )

    return app


def main():
    import uvicorn

    uvicorn.run(
        create_app(),
        host=os.environ.get(HOST_ENV, "127.0.0.1"),
        port=int(os.environ.get(PORT_ENV, "8400")),
    )


if __name__ == "__main__":
    main()
