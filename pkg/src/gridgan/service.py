"""HTTP editing service backing the explorer UI.

Sessions hold a current latent plus a bounded undo history; every response
image is a base64 PNG rendered from the session latent, and every latent is
identified by a digest so clients can assert "unchanged" without shipping
code vectors. The generator snapshot is immutable and shared; each session
serializes its edits behind a lock.
"""

from __future__ import annotations

import base64
import io
import json
import secrets
import threading
from collections import deque
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .checkpoint import load_generator
from .latent import (
    EditError,
    StructuredLatent,
    from_json,
    interpolate,
    latent_digest,
    replace,
    sample_latent,
    spatial_digest,
    style_digest,
    to_json,
)
from .structure import STYLE, CellSelection, ScaleTarget, SlotMask, StructureError
from .synthesis import Generator

__all__ = ["create_app", "HISTORY_LIMIT"]

HISTORY_LIMIT = 100


@dataclass
class Session:
    session_id: str
    latent: StructuredLatent
    history: deque = dataclass_field(default_factory=lambda: deque(maxlen=HISTORY_LIMIT))
    lock: threading.Lock = dataclass_field(default_factory=threading.Lock)


class SessionBody(BaseModel):
    seed: int | None = None


class EditBody(BaseModel):
    target: object
    op: str
    args: dict = Field(default_factory=dict)


class InterpolateBody(BaseModel):
    target: object
    other: dict
    steps: int = Field(ge=2)


def _png_b64(image: np.ndarray) -> str:
    from PIL import Image

    arr = np.clip((image + 1.0) * 127.5, 0, 255).round().astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


FULL_TARGET = object()


def _parse_target(structure, target):
    """Target grammar: 'style' | 'global' | 'full' | 'scale:k' | {'cells': [[r,c], ...]}."""
    if target == "style":
        return STYLE
    if target == "full":
        return FULL_TARGET
    if target == "global":
        try:
            return ScaleTarget(structure.global_scale_index())
        except StructureError as e:
            raise HTTPException(400, str(e))
    if isinstance(target, str) and target.startswith("scale:"):
        try:
            k = int(target.split(":", 1)[1])
        except ValueError:
            raise HTTPException(400, f"bad scale index in target {target!r}")
        if not (0 <= k < len(structure.shared_scales)):
            raise HTTPException(400, f"scale index {k} out of range")
        return ScaleTarget(k)
    if isinstance(target, dict) and "cells" in target:
        try:
            sel = CellSelection(tuple((int(r), int(c)) for r, c in target["cells"]))
            sel.validate(structure)
        except (StructureError, TypeError, ValueError) as e:
            raise HTTPException(400, f"bad cell selection: {e}")
        return sel
    raise HTTPException(400, f"unknown edit target {target!r}")


def _target_mask(structure, target) -> SlotMask:
    if target is FULL_TARGET:
        return SlotMask.full(structure)
    if isinstance(target, CellSelection):
        return SlotMask.for_cells(structure, target)
    if isinstance(target, ScaleTarget):
        return SlotMask.for_scale(target.index)
    return SlotMask.style_only()


def _target_shape(structure, target):
    if target is FULL_TARGET:
        raise HTTPException(400, "target 'full' only supports op=interp and streams")
    if isinstance(target, CellSelection):
        return (len(target.groups(structure)), structure.local_dim)
    if isinstance(target, ScaleTarget):
        s = structure.shared_scales[target.index]
        return (s.rows, s.cols, s.dim)
    return (structure.style_dim,)


def create_app(checkpoint: str | Path | Generator | None, cors: bool = False) -> FastAPI:
    """Build the service over one loaded checkpoint (or None: 503 everywhere)."""
    app = FastAPI(title="gridgan edit service")
    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    gen: Generator | None = None
    info: dict = {}
    if isinstance(checkpoint, Generator):
        gen = checkpoint
        info = {"generator_config": gen.config.to_dict(), "run": {}, "checkpoint": None}
    elif checkpoint is not None:
        loaded, bundle = load_generator(checkpoint)
        gen = loaded
        info = {
            "generator_config": gen.config.to_dict(),
            "run": bundle.run.to_dict(),
            "checkpoint": str(checkpoint),
        }

    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def require_gen() -> Generator:
        if gen is None:
            raise HTTPException(503, "no checkpoint loaded")
        return gen

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(404, f"no session {session_id}")
        return sess

    def render(latent: StructuredLatent) -> str:
        # fixed noise seed: a response image is a function of (checkpoint,
        # latent digest) alone, independent of the latent's provenance
        return _png_b64(require_gen().synthesize(latent, noise_seed=0))

    def latent_info(latent: StructuredLatent) -> dict:
        return {
            "latent_digest": latent_digest(latent),
            "spatial_digest": spatial_digest(latent),
            "style_digest": style_digest(latent),
        }

    @app.post("/session")
    def create_session(body: SessionBody | None = None):
        g = require_gen()
        seed = body.seed if body is not None and body.seed is not None else secrets.randbelow(2**31)
        latent = sample_latent(g.config.structure, seed)
        session_id = secrets.token_hex(8)
        sess = Session(session_id=session_id, latent=latent)
        with sessions_lock:
            sessions[session_id] = sess
        s = g.config.structure
        return {
            "session_id": session_id,
            "seed": seed,
            "structure": s.to_dict(),
            "image": render(latent),
            **latent_info(latent),
        }

    @app.post("/session/{session_id}/edit")
    def edit_session(session_id: str, body: EditBody):
        g = require_gen()
        sess = get_session(session_id)
        structure = g.config.structure
        target = _parse_target(structure, body.target)
        with sess.lock:
            latent = sess.latent
            try:
                if body.op == "resample":
                    seed = int(body.args.get("seed", secrets.randbelow(2**31)))
                    rng = np.random.default_rng(seed)
                    values = rng.standard_normal(_target_shape(structure, target), dtype=np.float32)
                    edited = replace(latent, target, values)
                elif body.op == "set":
                    if "values" not in body.args:
                        raise HTTPException(422, "op=set requires args.values")
                    edited = replace(latent, target, np.asarray(body.args["values"], dtype=np.float32))
                elif body.op == "interp":
                    other = _other_latent(structure, body.args)
                    t = float(body.args.get("t", 0.5))
                    edited = interpolate(latent, other, t, _target_mask(structure, target))
                else:
                    raise HTTPException(400, f"unknown op {body.op!r}")
            except EditError as e:
                raise HTTPException(422, str(e))
            sess.history.append(latent)
            sess.latent = edited
            return {"image": render(edited), **latent_info(edited)}

    def _other_latent(structure, args: dict) -> StructuredLatent:
        if "other_seed" in args:
            return sample_latent(structure, int(args["other_seed"]))
        if "other_latent" in args:
            other = args["other_latent"]
            try:
                return from_json(other if isinstance(other, str) else json.dumps(other))
            except (EditError, StructureError) as e:
                raise HTTPException(422, f"bad other latent: {e}")
        raise HTTPException(422, "interp needs args.other_seed or args.other_latent")

    @app.post("/session/{session_id}/interpolate-stream")
    def interpolate_stream(session_id: str, body: InterpolateBody):
        g = require_gen()
        sess = get_session(session_id)
        structure = g.config.structure
        target = _parse_target(structure, body.target)
        mask = _target_mask(structure, target)
        other = _other_latent(structure, body.other)
        with sess.lock:
            latent = sess.latent
            frames = []
            digests = []
            n = body.steps
            for i in range(n):
                t = i / (n - 1)
                try:
                    frame_latent = interpolate(latent, other, t, mask)
                except EditError as e:
                    raise HTTPException(422, str(e))
                frames.append(render(frame_latent))
                digests.append(latent_info(frame_latent))
            return {"frames": frames, "latents": digests, "steps": n}

    @app.get("/session/{session_id}/undo")
    def undo(session_id: str):
        require_gen()
        sess = get_session(session_id)
        with sess.lock:
            if not sess.history:
                raise HTTPException(409, "history is empty")
            sess.latent = sess.history.pop()
            return {"image": render(sess.latent), **latent_info(sess.latent)}

    @app.get("/checkpoint/info")
    def checkpoint_info():
        require_gen()
        return info

    @app.exception_handler(StructureError)
    def structure_error_handler(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app
