"""Drive the HTTP editing service from Python.

Starts the app in-process (no network needed), opens a session, applies a
few edits, streams an interpolation, and walks the undo history: the same
calls the browser explorer makes.
"""

import base64
from pathlib import Path
import tempfile

from fastapi.testclient import TestClient

from gridgan import Generator, GeneratorConfig, NoiseStructure
from gridgan.service import create_app

cfg = GeneratorConfig(structure=NoiseStructure(), output_resolution=16,
                      channels={8: 12, 16: 10}, style_start=16, mapping_depth=2)
app = create_app(Generator(cfg, init_seed=5))

out = Path(tempfile.mkdtemp(prefix="gridgan_service_"))
with TestClient(app) as client:
    session = client.post("/session", json={"seed": 7}).json()
    sid = session["session_id"]
    print("session:", sid, "grid:",
          session["structure"]["grid_h"], "x", session["structure"]["grid_w"])
    (out / "base.png").write_bytes(base64.b64decode(session["image"]))

    edited = client.post(f"/session/{sid}/edit", json={
        "target": {"cells": [[3, 3], [3, 4], [4, 3], [4, 4]]},
        "op": "resample",
        "args": {"seed": 123},
    }).json()
    print("cell edit; style digest unchanged:",
          edited["style_digest"] == session["style_digest"])
    (out / "edited.png").write_bytes(base64.b64decode(edited["image"]))

    stream = client.post(f"/session/{sid}/interpolate-stream", json={
        "target": "global",
        "other": {"other_seed": 99},
        "steps": 5,
    }).json()
    for k, frame in enumerate(stream["frames"]):
        (out / f"frame_{k}.png").write_bytes(base64.b64decode(frame))
    print("streamed", stream["steps"], "frames")

    undone = client.get(f"/session/{sid}/undo").json()
    print("undo restored base image:", undone["image"] == session["image"])

print("images under", out)
print("for the browser UI: gridgan serve --checkpoint <dir> --port 8000 --cors")
