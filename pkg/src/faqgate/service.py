"""Local-only HTTP service over the router.

Binds to loopback by default and makes no outbound connections except to the
embedding/small-talk backends named in the config.  Blocked content returns
200 with a refusal reply: patients never see raw errors, operators see the
counter.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Header, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .calibration import ThresholdConfig, load_config
from .embedding import EmbeddingProviderSpec, make_provider
from .energy import PowerSampler, build_report
from .errors import ConfigurationError, DegenerateInputError
from .faq import build_index, ingest_faq, top_match
from .gate import AuditLog, ContentFilter, Router, TokenBucketLimiter, load_denylist
from .smalltalk import HttpBackend, StubBackend


class ChatRequest(BaseModel):
    session_id: str = "anonymous"
    text: str


class ChatResponse(BaseModel):
    route: str  # clinical | casual | blocked
    reply: str
    matched_question: str | None = None
    score: float | None = None
    latency_ms: float
    degraded: bool = False


@dataclass
class ServerConfig:
    faq_path: str
    answers_path: str
    threshold_path: str
    embedding_provider: dict
    smalltalk_backend: dict = field(default_factory=lambda: {"kind": "stub"})
    bind_addr: str = "127.0.0.1:8787"
    denylist_path: str | None = None
    audit_path: str | None = None
    admin_token: str | None = None
    rate_capacity: int = 20
    rate_refill_per_s: float = 10.0
    log_plaintext: bool = False
    power_source_cmd: str | None = None

    @classmethod
    def from_file(cls, path: str) -> "ServerConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


class _Counters:
    def __init__(self):
        self._lock = threading.Lock()
        self.by_route = {"clinical": 0, "casual": 0, "blocked": 0}
        self.throttled = 0
        self.degraded = 0
        self.latencies_s: list[float] = []

    def record(self, route: str, latency_s: float, degraded: bool) -> None:
        with self._lock:
            self.by_route[route] += 1
            self.latencies_s.append(latency_s)
            if degraded:
                self.degraded += 1

    def record_throttle(self) -> None:
        with self._lock:
            self.throttled += 1

    def snapshot(self) -> dict:
        with self._lock:
            lat = list(self.latencies_s)
            out = {
                "requests_by_route": dict(self.by_route),
                "throttled": self.throttled,
                "degraded": self.degraded,
            }
        if lat:
            lat.sort()
            out["latency_mean_s"] = sum(lat) / len(lat)
            out["latency_p95_s"] = lat[max(1, math.ceil(0.95 * len(lat))) - 1]
        else:
            out["latency_mean_s"] = None
            out["latency_p95_s"] = None
        return out


def build_router(cfg: ServerConfig) -> Router:
    provider_spec = EmbeddingProviderSpec(**cfg.embedding_provider)
    provider = make_provider(provider_spec)
    entries, answers = ingest_faq(cfg.faq_path, cfg.answers_path)
    index = build_index(entries, provider)
    threshold = load_config(cfg.threshold_path)

    backend_cfg = cfg.smalltalk_backend or {"kind": "stub"}
    if backend_cfg.get("kind", "stub") == "stub":
        backend = StubBackend()
    else:
        backend = HttpBackend(
            backend_cfg["url"], timeout_s=float(backend_cfg.get("timeout_s", 10.0))
        )

    denylist = load_denylist(cfg.denylist_path) if cfg.denylist_path else ContentFilter([])
    audit = AuditLog(cfg.audit_path) if cfg.audit_path else None
    limiter = TokenBucketLimiter(cfg.rate_capacity, cfg.rate_refill_per_s)
    top_match(index.vectors[0], index, k=1)  # warm the jit kernel off the request path
    return Router(
        index=index,
        answers=answers,
        provider=provider,
        config=threshold,
        smalltalk_backend=backend,
        denylist=denylist,
        limiter=limiter,
        audit=audit,
        log_plaintext=cfg.log_plaintext,
    )


def create_app(cfg: ServerConfig) -> FastAPI:
    router = build_router(cfg)
    counters = _Counters()
    app = FastAPI(title="faqgate", docs_url=None, redoc_url=None)
    app.state.router = router
    app.state.counters = counters
    app.state.config = cfg
    app.state.sampler = None
    if cfg.power_source_cmd:
        sampler = PowerSampler(cfg.power_source_cmd, interval_s=1.0)
        sampler.start()
        app.state.sampler = sampler

    route_names = {"Clinical": "clinical", "Casual": "casual", None: "blocked"}

    @app.post("/v1/chat")
    def chat(req: ChatRequest) -> Response:
        if not req.text.strip():
            return JSONResponse({"detail": "text must be non-empty"}, status_code=400)
        verdict, retry_after = router.limiter.check(req.session_id)
        if verdict == "throttle":
            counters.record_throttle()
            return JSONResponse(
                {"detail": "rate limit exceeded"},
                status_code=429,
                headers={"Retry-After": f"{retry_after:.3f}"},
            )
        started = time.perf_counter()
        try:
            decision = router.route(req.text, session_id=req.session_id)
        except ConfigurationError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=503)
        except DegenerateInputError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        latency_ms = (time.perf_counter() - started) * 1000.0
        route = route_names[decision.label]
        counters.record(route, latency_ms / 1000.0, decision.degraded)
        body = ChatResponse(
            route=route,
            reply=decision.answer_text or "",
            matched_question=decision.matched_question,
            score=decision.score,
            latency_ms=latency_ms,
            degraded=decision.degraded,
        )
        return JSONResponse(body.model_dump())

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "index_entries": len(router.index),
            "dim": router.index.dim,
            "config_frozen": router.config.frozen,
            "fingerprint_match": router.config.model_fingerprint
            == router.index.provider_fingerprint,
            "smalltalk_backend": type(router.smalltalk_backend).__name__,
        }

    @app.get("/v1/metrics")
    def metrics_endpoint() -> dict:
        out = counters.snapshot()
        out["audit_write_errors"] = router.audit.write_errors if router.audit else 0
        out["energy"] = None
        sampler = app.state.sampler
        if sampler is not None:
            trace = sampler.snapshot()
            n = sum(out["requests_by_route"].values())
            if len(trace) >= 2 and n >= 1:
                out["energy"] = build_report(trace, n_requests=n).to_dict()
        return out

    @app.get("/v1/config")
    def get_config() -> dict:
        cfg_dict = router.config.to_dict()
        cfg_dict.pop("val_item_hashes", None)
        return cfg_dict

    @app.put("/v1/config/threshold")
    def put_threshold(payload: dict, authorization: str | None = Header(default=None)) -> Response:
        expected = cfg.admin_token
        token = (authorization or "").removeprefix("Bearer ").strip()
        if not expected or token != expected:
            return JSONResponse({"detail": "bad admin token"}, status_code=401)
        try:
            new_config = ThresholdConfig.from_dict(payload)
        except (KeyError, ValueError) as exc:
            return JSONResponse({"detail": f"malformed config: {exc}"}, status_code=400)
        try:
            router.swap_config(new_config)
        except ConfigurationError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=409)
        return JSONResponse({"status": "swapped", "threshold": new_config.threshold})

    return app


def run_server(cfg: ServerConfig) -> None:  # pragma: no cover - exercised via CLI
    import uvicorn

    host, _, port = cfg.bind_addr.partition(":")
    uvicorn.run(create_app(cfg), host=host or "127.0.0.1", port=int(port or 8787), log_level="warning")
