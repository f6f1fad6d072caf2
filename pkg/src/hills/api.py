"""Read-mostly HTTP facade over one loaded study: worksheets, link review
and what-if inference, powering the browser UI.

One study per process, loaded at startup.  State lives in an immutable
snapshot (study, link set, optional net, version counter); link-status
mutations build a new snapshot under a single writer lock and swap it in
atomically, so every response reports a consistent state and carries the
version it was computed from.  GET handlers are pure reads.

JSON bodies use snake_case keys throughout; schemas are documented in
docs/json-schemas.md.  CORS is open for local development.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import defaults
from .bn import BayesNet, BnError, UnknownVariable, ZeroProbabilityEvidence, bn_from_links, bn_to_json, marginal
from .linker import LinkSet, RelationTable, UnknownLink, derive_links, set_link_status
from .model import Study
from .report import format_probability, link_report_rows, worksheet_rows


@dataclass(frozen=True)
class Snapshot:
    version: int
    study: Study | None
    relations: RelationTable | None
    linkset: LinkSet | None
    net: BayesNet | None  # CPT-complete net given at startup, if any


class StatusUpdate(BaseModel):
    status: Literal["candidate", "confirmed", "rejected"]
    direction: Optional[
        Literal["none", "higher_explains_lower", "lower_explains_higher"]
    ] = None


class QueryRequest(BaseModel):
    target: str
    evidence: dict[str, str] = {}


def create_app(
    study: Study | None,
    relations: RelationTable | None = None,
    net: BayesNet | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="hills", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    linkset = None
    if study is not None:
        relations = relations if relations is not None else defaults.default_relations()
        linkset = derive_links(study, relations)
    state_lock = threading.Lock()
    app.state.snapshot = Snapshot(1, study, relations, linkset, net)

    def snap() -> Snapshot:
        return app.state.snapshot

    def require_study(snapshot: Snapshot) -> Study:
        if snapshot.study is None:
            raise HTTPException(status_code=503, detail="no study loaded")
        return snapshot.study

    @app.get("/api/study")
    def get_study() -> dict:
        snapshot = snap()
        study_obj = require_study(snapshot)
        return {"version": snapshot.version, "study": study_obj.to_json()}

    @app.get("/api/levels/{rank}/worksheet")
    def get_worksheet(rank: int) -> dict:
        snapshot = snap()
        study_obj = require_study(snapshot)
        if not study_obj.has_level(rank):
            raise HTTPException(status_code=404, detail=f"no level with rank {rank}")
        return {
            "version": snapshot.version,
            "kind": "worksheet",
            "level_rank": rank,
            "level_name": study_obj.level(rank).name,
            "rows": worksheet_rows(study_obj, rank),
        }

    @app.get("/api/links")
    def get_links() -> dict:
        snapshot = snap()
        study_obj = require_study(snapshot)
        assert snapshot.linkset is not None
        return {
            "version": snapshot.version,
            "links": link_report_rows(study_obj, snapshot.linkset),
        }

    @app.post("/api/links/{link_id}/status")
    def post_link_status(link_id: str, update: StatusUpdate) -> dict:
        with state_lock:
            snapshot = snap()
            study_obj = require_study(snapshot)
            assert snapshot.linkset is not None
            try:
                new_linkset = set_link_status(
                    snapshot.linkset, link_id, update.status, update.direction
                )
            except UnknownLink as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            new_snapshot = replace(
                snapshot, version=snapshot.version + 1, linkset=new_linkset
            )
            app.state.snapshot = new_snapshot
        rows = link_report_rows(study_obj, new_linkset)
        row = next(r for r in rows if r["id"] == link_id)
        return {"version": new_snapshot.version, "link": row}

    @app.get("/api/bn")
    def get_bn() -> dict:
        snapshot = snap()
        study_obj = require_study(snapshot)
        if snapshot.net is not None:
            return {
                "version": snapshot.version,
                "complete": True,
                "bn": bn_to_json(snapshot.net),
            }
        assert snapshot.linkset is not None
        try:
            skeleton = bn_from_links(study_obj, snapshot.linkset)
        except BnError as exc:
            return {
                "version": snapshot.version,
                "complete": False,
                "bn": None,
                "detail": str(exc),
            }
        return {
            "version": snapshot.version,
            "complete": skeleton.is_complete,
            "bn": bn_to_json(skeleton),
        }

    @app.post("/api/bn/query")
    def post_query(query: QueryRequest) -> dict:
        snapshot = snap()
        require_study(snapshot)
        if snapshot.net is None:
            raise HTTPException(
                status_code=409,
                detail="skeleton incomplete: fill CPTs (start the service with a "
                "CPT-complete net) before querying",
            )
        try:
            posterior = marginal(snapshot.net, query.target, query.evidence)
        except ZeroProbabilityEvidence as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except (UnknownVariable, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "version": snapshot.version,
            "target": query.target,
            "evidence": dict(query.evidence),
            "posterior": posterior,
            "posterior_rendered": {
                state: format_probability(p) for state, p in posterior.items()
            },
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
