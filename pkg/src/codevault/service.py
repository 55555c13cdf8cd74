"""HTTP + websocket service hosting live vault sessions.

Lifecycle over plain HTTP, state push over one websocket per session,
JSONL write-through for every session's event log.  Sessions live in
memory; the log files are the durable record (replayable via the session
module).  The secret code is never serialized to clients.
"""
from __future__ import annotations

import asyncio
import json
import os
import secrets as _secrets
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .engine import EngineParams
from .classifier import ClassifierConfig
from .session import (CODE_LENGTH, CodeSession, Level, SessionConfig,
                      SessionStatus, TerminalSessionError)
from .signals import (DomainError, SignalValidationError, pattern_to_json,
                      signal_from_json)

ENV_PORT = "CODEVAULT_PORT"
ENV_LOG_DIR = "CODEVAULT_LOG_DIR"

LEVEL_COLORS = {"A": "yellow", "B": "gray"}   # level 1 only
WIRE_DECIMALS = 6


class ConfigError(ValueError):
    """Bad service configuration; the message names the file and location."""


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    secret_code: tuple[int, int, int, int] = (0, 0, 0, 0)
    log_dir: Path = Path("logs")
    engine: EngineParams = field(default_factory=EngineParams)
    seed_mode: str = "random"          # "random" | "fixed"
    base_seed: int = 0                 # used when seed_mode == "fixed"
    idle_timeout_s: float = 1800.0
    default_level: int = 5
    source: Optional[Path] = None

    def public_dict(self) -> dict:
        """Config as printable on startup — everything except the secret."""
        return {
            "port": self.port,
            "log_dir": str(self.log_dir),
            "engine": {
                "beta": self.engine.beta,
                "theta": self.engine.theta,
                "min_steps": self.engine.min_steps,
                "var_floor": self.engine.classifier.var_floor,
                "laplace_alpha": self.engine.classifier.laplace_alpha,
            },
            "seed_mode": self.seed_mode,
            "idle_timeout_s": self.idle_timeout_s,
            "default_level": self.default_level,
        }


def _engine_from_dict(doc: dict, where: str) -> EngineParams:
    base = EngineParams()
    cls = base.classifier
    cls_keys = {"var_floor", "laplace_alpha", "prob_clip", "var_shrink"}
    eng_keys = {"beta", "theta", "min_steps", "min_class_count", "transfer_clip"}
    unknown = set(doc) - cls_keys - eng_keys
    if unknown:
        raise ConfigError(f"{where}: unknown engine keys {sorted(unknown)}")
    try:
        cls = replace(cls, **{k: doc[k] for k in cls_keys & set(doc)})
        return replace(base, classifier=cls,
                       **{k: doc[k] for k in eng_keys & set(doc)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}")


def load_config(path: Optional[os.PathLike] = None,
                env: Optional[dict] = None) -> ServiceConfig:
    """Service config from a JSON file plus environment overrides.

    The environment wins for the port (CODEVAULT_PORT) and the log
    directory (CODEVAULT_LOG_DIR); everything else comes from the file.
    """
    env = os.environ if env is None else env
    cfg = ServiceConfig()
    if path is not None:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: parse error at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}")
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        known = {"port", "secret_code", "log_dir", "engine", "seed_mode",
                 "base_seed", "idle_timeout_s", "default_level"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        updates: dict = {"source": path}
        if "port" in doc:
            updates["port"] = int(doc["port"])
        if "secret_code" in doc:
            code = doc["secret_code"]
            if (not isinstance(code, list) or len(code) != CODE_LENGTH
                    or not all(isinstance(d, int) and 0 <= d <= 9 for d in code)):
                raise ConfigError(f"{path}: secret_code must be 4 digits 0-9")
            updates["secret_code"] = tuple(code)
        if "log_dir" in doc:
            updates["log_dir"] = Path(doc["log_dir"])
        if "engine" in doc:
            updates["engine"] = _engine_from_dict(doc["engine"], f"{path}: engine")
        if "seed_mode" in doc:
            if doc["seed_mode"] not in ("random", "fixed"):
                raise ConfigError(f"{path}: seed_mode must be random or fixed")
            updates["seed_mode"] = doc["seed_mode"]
        if "base_seed" in doc:
            updates["base_seed"] = int(doc["base_seed"])
        if "idle_timeout_s" in doc:
            updates["idle_timeout_s"] = float(doc["idle_timeout_s"])
        if "default_level" in doc:
            try:
                Level(int(doc["default_level"]))
            except ValueError:
                raise ConfigError(f"{path}: default_level must be 1, 4 or 5")
            updates["default_level"] = int(doc["default_level"])
        cfg = replace(cfg, **updates)
    if ENV_PORT in env:
        try:
            cfg = replace(cfg, port=int(env[ENV_PORT]))
        except ValueError:
            raise ConfigError(f"{ENV_PORT}={env[ENV_PORT]!r} is not an integer")
    if ENV_LOG_DIR in env:
        cfg = replace(cfg, log_dir=Path(env[ENV_LOG_DIR]))
    return cfg


# ---------------------------------------------------------------------------


@dataclass
class SessionRecord:
    id: str
    session: CodeSession
    created_at: float
    last_active: float
    log_path: Path
    written: int = 0
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    subscribers: list[asyncio.Queue] = field(default_factory=list)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def client_view(record: SessionRecord) -> dict:
    """The state snapshot sent to clients.  Never contains the code."""
    s = record.session
    pattern = None
    if s.current_pattern is not None:
        pattern = pattern_to_json(s.current_pattern)
        if s.config.level is Level.KNOWN_MEANINGS:
            pattern["colors"] = dict(LEVEL_COLORS)
    view = {
        "session_id": record.id,
        "level": int(s.config.level),
        "status": s.status.value,
        "step_index": s.step_index,
        "digits_accepted": len(s.accepted),
        "pattern": pattern,
    }
    if s.config.reveal_weights:
        w = s.weights_view()
        view["weights"] = ([round(float(x), WIRE_DECIMALS) for x in w]
                           if w is not None else None)
    return view


def _client_events(events) -> list[dict]:
    """Outbound event list; accepted digit values are withheld."""
    out = []
    for e in events:
        payload = dict(e.payload)
        if e.kind == "digit_accepted":
            payload.pop("digit", None)
        out.append({"kind": e.kind, "payload": payload})
    return out


class VaultService:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.records: dict[str, SessionRecord] = {}
        self._session_count = 0
        self.config.log_dir.mkdir(parents=True, exist_ok=True)

    # -- session bookkeeping ----------------------------------------------

    def _next_seed(self) -> int:
        if self.config.seed_mode == "fixed":
            return self.config.base_seed + self._session_count
        return _secrets.randbits(63)

    def create(self, level: int, reveal_weights: bool = False,
               seed: Optional[int] = None,
               code: Optional[list[int]] = None) -> SessionRecord:
        try:
            lvl = Level(int(level))
        except (ValueError, TypeError):
            raise DomainError(f"unknown level {level!r}")
        session_code = tuple(code) if code is not None else self.config.secret_code
        cfg = SessionConfig(level=lvl, code=session_code,
                            engine=self.config.engine,
                            seed=self._next_seed() if seed is None else int(seed),
                            reveal_weights=bool(reveal_weights))
        session = CodeSession(cfg)
        sid = _secrets.token_urlsafe(12)
        now = time.monotonic()
        record = SessionRecord(sid, session, now, now,
                               self.config.log_dir / f"session-{sid}.jsonl")
        self.records[sid] = record
        self._session_count += 1
        self._flush_log(record)
        return record

    def _flush_log(self, record: SessionRecord) -> None:
        log = record.session.log
        if record.written < len(log):
            with open(record.log_path, "a", encoding="utf-8") as fh:
                for rec in log[record.written:]:
                    fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            record.written = len(log)

    def expire_idle(self) -> list[str]:
        now = time.monotonic()
        expired = [sid for sid, r in self.records.items()
                   if now - r.last_active > self.config.idle_timeout_s]
        for sid in expired:
            record = self.records.pop(sid)
            record.session.log.append(
                {"t": record.session.step_index, "kind": "session_expired",
                 "payload": {}})
            self._flush_log(record)
            for q in record.subscribers:
                q.put_nowait(None)
        return expired

    async def step(self, record: SessionRecord, payload: dict) -> dict:
        async with record.lock:
            signal = signal_from_json(payload)
            result = record.session.step(signal)
            record.last_active = time.monotonic()
            self._flush_log(record)
            message = {"view": client_view(record),
                       "events": _client_events(result.events)}
            for q in record.subscribers:
                q.put_nowait(message)
            return message


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    service = VaultService(config)
    app = FastAPI(title="codevault")
    app.state.service = service

    @app.get("/api/health")
    async def health():
        service.expire_idle()
        return {"status": "ok", "sessions": len(service.records)}

    @app.post("/api/session", status_code=201)
    async def create_session(request: Request):
        service.expire_idle()
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _error(400, "malformed_json", "request body is not JSON")
        if not isinstance(body, dict) or "level" not in body:
            return _error(400, "invalid_level", "body must carry a level")
        code = body.get("code")
        if code is not None and (
                not isinstance(code, list) or len(code) != CODE_LENGTH
                or not all(isinstance(d, int) for d in code)):
            return _error(400, "invalid_code", "code must be a list of 4 digits")
        try:
            record = service.create(body["level"],
                                    bool(body.get("reveal_weights", False)),
                                    body.get("seed"), code)
        except DomainError as exc:
            kind = "invalid_code" if "code" in str(exc) else "invalid_level"
            return _error(400, kind, str(exc))
        return JSONResponse(status_code=201,
                            content={"session_id": record.id,
                                     "view": client_view(record)})

    def _lookup(session_id: str) -> Optional[SessionRecord]:
        service.expire_idle()
        return service.records.get(session_id)

    @app.get("/api/session/{session_id}")
    async def get_session(session_id: str):
        record = _lookup(session_id)
        if record is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        return client_view(record)

    @app.post("/api/session/{session_id}/signal")
    async def submit_signal(session_id: str, request: Request):
        record = _lookup(session_id)
        if record is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            return _error(400, "malformed_json", "request body is not JSON")
        try:
            return await service.step(record, payload)
        except TerminalSessionError as exc:
            return _error(409, "terminal_session", str(exc))
        except (SignalValidationError, DomainError, ValueError) as exc:
            return _error(400, "invalid_signal", str(exc))

    @app.delete("/api/session/{session_id}")
    async def delete_session(session_id: str):
        record = service.records.pop(session_id, None)
        if record is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        service._flush_log(record)
        for q in record.subscribers:
            q.put_nowait(None)
        return {"deleted": session_id}

    @app.websocket("/ws/session/{session_id}")
    async def session_socket(ws: WebSocket, session_id: str):
        record = service.records.get(session_id)
        if record is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        record.subscribers.append(queue)
        await ws.send_json({"view": client_view(record), "events": []})

        async def pump_outbound():
            while True:
                message = await queue.get()
                if message is None:
                    break
                await ws.send_json(message)

        async def pump_inbound():
            while True:
                raw = await ws.receive_text()
                try:
                    payload = json.loads(raw)
                    await service.step(record, payload)
                except TerminalSessionError as exc:
                    await ws.send_json({"error": {"code": "terminal_session",
                                                  "message": str(exc)}})
                except (json.JSONDecodeError, SignalValidationError,
                        DomainError, ValueError) as exc:
                    await ws.send_json({"error": {"code": "invalid_signal",
                                                  "message": str(exc)}})

        out_task = asyncio.create_task(pump_outbound())
        try:
            await pump_inbound()
        except WebSocketDisconnect:
            pass
        finally:
            out_task.cancel()
            if queue in record.subscribers:
                record.subscribers.remove(queue)

    return app
