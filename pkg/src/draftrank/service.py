"""HTTP facade: card ranking plus live human-seat draft sessions.

JSON in, JSON out, lower_snake_case field names. Cards are accepted by name
or id everywhere. Sessions live in memory with an idle TTL; each session's
mutations are serialized behind a lock while the frozen model is shared.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import draft_sim
from .domain import CardCatalog
from .encoders import EmbeddingModel
from .evaluation import EmbeddingScorer
from .ingest import write_draft_log

DEFAULT_TTL = 3600.0


class RankRequest(BaseModel):
    pool: list[str | int] = []
    pack: list[str | int]


class NewDraftRequest(BaseModel):
    players: int = 8
    seed: int = 0
    human_seat: int = 0


class PickRequest(BaseModel):
    card: str | int


@dataclass
class Session:
    state: draft_sim.DraftState
    human_seat: int
    policies: list
    seed: int
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)


def checkpoint_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def create_app(model: EmbeddingModel | None, catalog: CardCatalog | None,
               checkpoint_id: str = "unsaved", session_ttl: float = DEFAULT_TTL) -> FastAPI:
    app = FastAPI(title="draftrank")
    # the advisor UI is a static page served from anywhere local
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    scorer = EmbeddingScorer(model, catalog) if model is not None else None
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def require_model():
        if scorer is None:
            raise HTTPException(status_code=503, detail="no model loaded")

    def resolve(card) -> int:
        if isinstance(card, int) or (isinstance(card, str) and card.isdigit()):
            cid = int(card)
            if cid not in catalog:
                raise HTTPException(status_code=400, detail=f"unknown card id {cid}")
            return cid
        try:
            return catalog.id_of(card)
        except KeyError:
            raise HTTPException(status_code=400, detail=f"unknown card {card!r}") from None

    def ranking_payload(pool: list[int], pack: list[int]) -> list[dict]:
        scores = scorer.score_pack(pool, pack)
        order = sorted(range(len(pack)), key=lambda i: (-scores[i], pack[i]))
        return [{"card_id": pack[i], "name": catalog.names[pack[i]],
                 "score": float(scores[i])} for i in order]

    def prune_sessions(now: float) -> None:
        stale = [sid for sid, s in sessions.items() if now - s.last_access > session_ttl]
        for sid in stale:
            del sessions[sid]

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            prune_sessions(time.monotonic())
            session = sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail="unknown session")
            session.last_access = time.monotonic()
            return session

    def state_view(session: Session) -> dict:
        state = session.state
        seat = session.human_seat
        view = {
            "session_id": None,  # filled by callers that know the id
            "round": state.round,
            "pick_number": state.pick_in_round,
            "picks_made": len(state.decisions[seat]),
            "pool": [{"card_id": c, "name": catalog.names[c]} for c in state.pools[seat]],
            "finished": state.finished,
            "checkpoint_id": checkpoint_id,
        }
        if state.finished:
            view["pack"] = []
            view["final_pools"] = [
                [{"card_id": c, "name": catalog.names[c]} for c in pool]
                for pool in state.pools
            ]
            view["transcript"] = [
                {"seat": s, "pick_number": k + 1,
                 "pack": [catalog.names[c] for c in d.pack],
                 "pool": [catalog.names[c] for c in d.pool],
                 "picked": catalog.names[d.picked_card]}
                for s in range(state.players)
                for k, d in enumerate(state.decisions[s])
            ]
        else:
            pack = draft_sim.legal_picks(state, seat)
            view["pack"] = ranking_payload(state.pools[seat], pack)
        return view

    @app.get("/health")
    def health():
        return {"status": "ok", "model_loaded": scorer is not None,
                "checkpoint_id": checkpoint_id}

    @app.post("/rank")
    def rank(req: RankRequest):
        require_model()
        if not req.pack:
            raise HTTPException(status_code=400, detail="empty pack")
        pool = [resolve(c) for c in req.pool]
        pack = [resolve(c) for c in req.pack]
        return {"ranking": ranking_payload(pool, pack), "checkpoint_id": checkpoint_id}

    @app.post("/draft/new")
    def draft_new(req: NewDraftRequest):
        require_model()
        if not 0 <= req.human_seat < req.players:
            raise HTTPException(status_code=400, detail="human_seat out of range")
        try:
            state = draft_sim.new_draft(catalog, req.players, req.seed)
        except draft_sim.DraftError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        policies = [draft_sim.GreedyScorerPolicy(scorer) for _ in range(req.players)]
        session = Session(state=state, human_seat=req.human_seat,
                          policies=policies, seed=req.seed)
        session_id = secrets.token_hex(8)
        with sessions_lock:
            prune_sessions(time.monotonic())
            sessions[session_id] = session
        view = state_view(session)
        view["session_id"] = session_id
        return view

    @app.get("/draft/{session_id}/state")
    def draft_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            view = state_view(session)
            view["session_id"] = session_id
            return view

    @app.post("/draft/{session_id}/pick")
    def draft_pick(session_id: str, req: PickRequest):
        session = get_session(session_id)
        with session.lock:
            state = session.state
            if state.finished:
                raise HTTPException(status_code=410, detail="draft finished")
            card = resolve(req.card)
            if card not in state.packs[session.human_seat].cards:
                raise HTTPException(status_code=409, detail=f"card {card} not in your pack")
            picks = []
            for seat in range(state.players):
                if seat == session.human_seat:
                    picks.append(card)
                else:
                    picks.append(session.policies[seat].choose(
                        tuple(state.pools[seat]), draft_sim.legal_picks(state, seat)))
            draft_sim.apply_picks(state, picks)
            view = state_view(session)
            view["session_id"] = session_id
            return view

    app.state.sessions = sessions  # exposed for tests
    return app


def serve(model: EmbeddingModel, catalog: CardCatalog, checkpoint_id: str,
          host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(model, catalog, checkpoint_id), host=host, port=port,
                log_level="warning")


__all__ = ["create_app", "serve", "checkpoint_digest", "write_draft_log"]
