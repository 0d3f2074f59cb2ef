"""HTTP query service over an immutable built workspace.

Requests are stateless against the loaded snapshot; changing the workspace
on disk invalidates it (409) until the service is restarted.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .engine import EngineState, load_workspace
from .errors import ClientError, InvalidInput, PipelineError, ZfdtError


class QueryRequest(BaseModel):
    symptoms: str
    top_k: int | None = Field(default=None, ge=1)


class LocalAnswerModel(BaseModel):
    community_id: int
    category: str
    text: str
    score: float


class QueryResponse(BaseModel):
    answer: str
    global_answer: str
    local_answers: list[LocalAnswerModel]
    trace: list[dict]


class HealthResponse(BaseModel):
    status: str
    workspace_digest: str


def create_app(workspace: str | Path | None = None, state: EngineState | None = None) -> FastAPI:
    if state is None:
        if workspace is None:
            raise InvalidInput("either a workspace path or a loaded state is required")
        state = load_workspace(workspace)
    loaded_digest = state.workspace_digest()

    app = FastAPI(title="zfdt query service", version="0.1.0")

    def check_workspace() -> None:
        try:
            current = state.workspace_digest()
        except OSError:
            raise HTTPException(status_code=409, detail="workspace is no longer readable")
        if current != loaded_digest:
            raise HTTPException(status_code=409, detail="workspace changed since load")

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        check_workspace()
        return HealthResponse(status="ok", workspace_digest=loaded_digest)

    @app.post("/v1/query", response_model=QueryResponse)
    def query(request: QueryRequest) -> QueryResponse:
        check_workspace()
        if not request.symptoms.strip():
            raise HTTPException(status_code=400, detail="symptoms must be non-empty")
        try:
            result = state.query(request.symptoms, top_k=request.top_k)
        except ClientError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        except PipelineError as exc:
            status = 502 if isinstance(exc.cause, ClientError) else 500
            raise HTTPException(status_code=status, detail=str(exc))
        except InvalidInput as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ZfdtError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return QueryResponse(
            answer=result.answer,
            global_answer=result.global_answers[0].text,
            local_answers=[
                LocalAnswerModel(
                    community_id=a.community_id,
                    category=a.category.value,
                    text=a.text,
                    score=a.score,
                )
                for a in result.local_answers
            ],
            trace=result.trace,
        )

    return app
