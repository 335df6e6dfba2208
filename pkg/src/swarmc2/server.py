"""JSON-over-WebSocket console API in front of a running engine.

The engine loop owns all world state on its own thread; the socket handler
only queues client ops (`Engine.submit`) and publishes per-tick snapshots.
Clients send newline-free JSON objects; the canonical encoding (sorted keys,
compact separators) is the conformance contract for console implementations.
"""

from __future__ import annotations

import asyncio
import json
import threading

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import Engine

SNAPSHOT_PERIOD_S = 0.1
COVERAGE_EVERY_N = 10  # coverage overlay rides every Nth snapshot

CLIENT_OP_TYPES = {
    "invoke", "link", "unlink", "cancel", "sketch", "lasso", "estop", "spawn",
}


def encode_client_msg(msg: dict) -> str:
    """Canonical client message encoding; byte-stable across implementations."""
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


class EngineThread:
    """Runs the engine loop until stopped; realtime pacing lives in Engine.run."""

    def __init__(self, engine: Engine):
        self.engine = engine
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5.0)

    def _loop(self) -> None:
        while not self._stop.is_set():
            self.engine.run(1)


def build_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="swarm console api")
    app.state.engine = engine

    @app.get("/health")
    def health() -> dict:
        return {"tick": engine.tick_no, "agents": len(engine.runtimes)}

    @app.websocket("/ws")
    async def console(ws: WebSocket) -> None:
        await ws.accept()
        defs = {"type": "tactic_defs",
                "definitions": engine.tactics.definition_payload()}
        await ws.send_text(json.dumps(defs))

        async def pump_snapshots() -> None:
            sent = 0
            while True:
                sent += 1
                snap = engine.snapshot(
                    include_coverage=sent % COVERAGE_EVERY_N == 0)
                await ws.send_text(json.dumps(snap))
                await asyncio.sleep(SNAPSHOT_PERIOD_S)

        pump = asyncio.ensure_future(pump_snapshots())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    op = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "malformed JSON"}))
                    continue
                if not isinstance(op, dict) or op.get("type") not in CLIENT_OP_TYPES:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": f"unknown op {op!r}"}))
                    continue
                engine.submit(op)
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()

    return app


def serve(engine: Engine, port: int) -> None:
    import uvicorn

    runner = EngineThread(engine)
    runner.start()
    try:
        uvicorn.run(build_app(engine), host="127.0.0.1", port=port,
                    log_level="warning")
    finally:
        runner.stop()
