"""HTTP facade over a deployment.

Login is challenge-response: the server issues a random challenge, the
client signs it with the identity's key, and a valid signature yields a
bearer session token. Every record-touching endpoint resolves the session
and defers the actual policy decision to the deployment layer; this module
only translates outcomes into HTTP statuses and stable machine-readable
error codes.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import policy, vault
from .chain import RejectBadTx, header_digest
from .deployment import AccessDenied, Deployment
from .keys import identity_id, verify_signature
from .ledger import NothingToMine
from .models import PatientRecord

STATUS_STORED = "Data Successfully stored into Block chain"

CHALLENGE_TTL_MS = 120_000

# HTTP status per admission-reject reason; deny reasons are always 403.
_REJECT_STATUS = {
    policy.REJECT_UNKNOWN_IDENTITY: 401,
    policy.REJECT_DUPLICATE_REGISTRATION: 409,
    policy.REJECT_BAD_ROLE: 400,
    policy.REJECT_BAD_SCOPE: 400,
    policy.REJECT_AUTHOR_MISMATCH: 403,
    policy.REJECT_NOT_OWNER: 403,
    policy.REJECT_NO_SUCH_GRANT: 404,
    policy.REJECT_UNKNOWN_PROVIDER: 400,
    policy.REJECT_UNKNOWN_GRANTEE: 400,
    policy.REJECT_NOT_PARTICIPANT: 403,
    policy.REJECT_ACCESS_DENIED: 403,
}


class ApiError(Exception):
    def __init__(self, http_status: int, code: str, message: str):
        super().__init__(message)
        self.http_status = http_status
        self.code = code
        self.message = message


def _from_reject(exc: RejectBadTx) -> ApiError:
    reason = str(exc)
    code = reason.split(":", 1)[0]
    return ApiError(_REJECT_STATUS.get(code, 400), code, f"transaction rejected: {reason}")


@dataclass(frozen=True)
class Session:
    token: str
    identity_id: bytes
    issued_at_ms: int
    ttl_ms: int

    def expired(self, now_ms: int) -> bool:
        return now_ms >= self.issued_at_ms + self.ttl_ms


class SessionStore:
    def __init__(self, ttl_ms: int, clock):
        self.ttl_ms = ttl_ms
        self.clock = clock
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def issue(self, identity: bytes) -> Session:
        session = Session(
            token=secrets.token_bytes(32).hex(),
            identity_id=identity,
            issued_at_ms=self.clock(),
            ttl_ms=self.ttl_ms,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def resolve(self, token: str) -> Session:
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise ApiError(401, "BadToken", "unknown session token")
        if session.expired(self.clock()):
            with self._lock:
                self._sessions.pop(token, None)
            raise ApiError(401, "TokenExpired", "session token has expired")
        return session


class ChallengeStore:
    def __init__(self, clock):
        self.clock = clock
        self._lock = threading.Lock()
        self._challenges: dict[str, tuple[bytes, bytes, int]] = {}

    def issue(self, identity: bytes) -> tuple[str, bytes, int]:
        challenge_id = secrets.token_hex(16)
        challenge = secrets.token_bytes(32)
        expires = self.clock() + CHALLENGE_TTL_MS
        with self._lock:
            self._challenges[challenge_id] = (identity, challenge, expires)
        return challenge_id, challenge, expires

    def take(self, challenge_id: str, identity: bytes) -> bytes:
        with self._lock:
            entry = self._challenges.pop(challenge_id, None)
        if entry is None:
            raise ApiError(401, "BadChallenge", "unknown or already-used challenge")
        owner, challenge, expires = entry
        if owner != identity:
            raise ApiError(401, "BadChallenge", "challenge was issued to someone else")
        if self.clock() >= expires:
            raise ApiError(401, "BadChallenge", "challenge has expired")
        return challenge


# -- request bodies --------------------------------------------------------

class ChallengeBody(BaseModel):
    username: str


class LoginBody(BaseModel):
    username: str
    challenge_id: str
    signature: str


class RegisterBody(BaseModel):
    role: str
    name: str


class RecordBody(BaseModel):
    username: str
    age: int
    temperature: float | int | str
    time: float | int | str
    patient_id: int
    extra: dict[str, str] | None = None


class GrantBody(BaseModel):
    patient_id: int
    grantee_id: str
    scope: str
    expires_at_ms: int | None = None


class RevokeBody(BaseModel):
    patient_id: int
    grantee_id: str


class AppointmentBody(BaseModel):
    patient_id: int
    provider_id: str
    slot_ms: int
    note: str = ""


class CorruptBody(BaseModel):
    block_index: int


def _hex_bytes(value: str, what: str, length: int | None = None) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError as exc:
        raise ApiError(400, "BadRequest", f"{what} is not valid hex") from exc
    if length is not None and len(raw) != length:
        raise ApiError(400, "BadRequest", f"{what} must be {length} bytes")
    return raw


def create_app(
    deployment: Deployment,
    ui_dir: str | Path | None = None,
    enable_test_hooks: bool = False,
) -> FastAPI:
    app = FastAPI(title="medledger", docs_url=None, redoc_url=None)
    clock = deployment.clock
    sessions = SessionStore(deployment.config.session_ttl_ms, clock)
    challenges = ChallengeStore(clock)
    app.state.deployment = deployment
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.http_status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "BadRequest", "message": str(exc.errors()[:1])}
        )

    def auth(authorization: str | None = Header(default=None)) -> Session:
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, "MissingToken", "Authorization: Bearer <token> required")
        return sessions.resolve(authorization.removeprefix("Bearer "))

    def _identity_for(username: str) -> policy.Identity:
        ident = deployment.state.identity_by_name(username)
        if ident is None:
            raise ApiError(404, "UnknownUser", f"no identity named {username!r}")
        return ident

    # -- health and identity ----------------------------------------------

    @app.get("/api/health")
    def health():
        return {
            "ok": True,
            "height": deployment.ledger.height(),
            "difficulty_bits": deployment.config.difficulty_bits,
            "auto_mine": deployment.config.auto_mine,
        }

    @app.post("/api/identities")
    def register(body: RegisterBody):
        try:
            keypair, receipt = deployment.register_identity(body.role, body.name)
        except ValueError as exc:
            raise ApiError(400, "BadRole", str(exc)) from exc
        except RejectBadTx as exc:
            raise _from_reject(exc) from exc
        return {
            "identity_id": identity_id(keypair.public_key).hex(),
            "public_key": keypair.public_key.hex(),
            "seed": keypair.seed.hex(),
            "tx_id": receipt.tx_id.hex(),
            "block_index": receipt.block_index,
        }

    @app.get("/api/identities")
    def list_identities(_session: Session = Depends(auth)):
        state = deployment.state
        return {
            "identities": [
                {
                    "identity_id": ident.identity_id.hex(),
                    "role": ident.role,
                    "display_name": ident.display_name,
                }
                for ident in state.identities.values()
            ]
        }

    # -- login -------------------------------------------------------------

    @app.post("/api/login/challenge")
    def login_challenge(body: ChallengeBody):
        ident = _identity_for(body.username)
        challenge_id, challenge, expires = challenges.issue(ident.identity_id)
        return {
            "challenge_id": challenge_id,
            "challenge": challenge.hex(),
            "expires_at_ms": expires,
        }

    @app.post("/api/login")
    def login(body: LoginBody):
        ident = _identity_for(body.username)
        challenge = challenges.take(body.challenge_id, ident.identity_id)
        signature = _hex_bytes(body.signature, "signature", 64)
        if not verify_signature(ident.public_key, signature, challenge):
            raise ApiError(401, "BadSignature", "challenge signature does not verify")
        session = sessions.issue(ident.identity_id)
        return {
            "token": session.token,
            "identity_id": ident.identity_id.hex(),
            "role": ident.role,
            "display_name": ident.display_name,
            "expires_at_ms": session.issued_at_ms + session.ttl_ms,
        }

    # -- records -----------------------------------------------------------

    @app.post("/api/records")
    def submit_record(body: RecordBody, session: Session = Depends(auth)):
        try:
            record = PatientRecord(
                username=body.username,
                age=body.age,
                temperature=vault.normalize_decimal(body.temperature),
                time=vault.normalize_decimal(body.time),
                patient_id=body.patient_id,
                extra=dict(body.extra or {}),
            )
            receipt = deployment.submit_record(session.identity_id, record)
        except vault.InvalidRecord as exc:
            raise ApiError(400, "InvalidRecord", str(exc)) from exc
        except AccessDenied as exc:
            raise ApiError(403, exc.decision.reason, "record write denied") from exc
        except RejectBadTx as exc:
            raise _from_reject(exc) from exc
        return {
            "status": STATUS_STORED,
            "content_address": receipt.content_address.hex(),
            "tx_id": receipt.tx_id.hex(),
            "block_index": receipt.block_index,
            "attempts": receipt.attempts,
        }

    @app.get("/api/records/{patient_id}")
    def get_records(patient_id: int, session: Session = Depends(auth)):
        try:
            fetched = deployment.fetch_records(session.identity_id, patient_id)
        except AccessDenied as exc:
            raise ApiError(403, exc.decision.reason, "record read denied") from exc
        if not fetched:
            raise ApiError(404, "NoRecords", f"no records anchored for patient {patient_id}")
        return {
            "records": [
                {
                    "username": item.record.username,
                    "age": item.record.age,
                    "temperature": item.record.temperature,
                    "time": item.record.time,
                    "patient_id": item.record.patient_id,
                    "extra": dict(item.record.extra),
                    "content_address": item.content_address.hex(),
                    "tx_id": item.tx_id.hex(),
                    "block_index": item.block_index,
                }
                for item in fetched
            ]
        }

    # -- grants and appointments ------------------------------------------

    @app.post("/api/grants")
    def grant(body: GrantBody, session: Session = Depends(auth)):
        grantee = _hex_bytes(body.grantee_id, "grantee_id", 32)
        try:
            receipt = deployment.grant_access(
                session.identity_id, body.patient_id, grantee, body.scope, body.expires_at_ms
            )
        except ValueError as exc:
            raise ApiError(400, "BadScope", str(exc)) from exc
        except RejectBadTx as exc:
            raise _from_reject(exc) from exc
        return {"tx_id": receipt.tx_id.hex(), "block_index": receipt.block_index}

    @app.post("/api/grants/revoke")
    def revoke(body: RevokeBody, session: Session = Depends(auth)):
        grantee = _hex_bytes(body.grantee_id, "grantee_id", 32)
        try:
            receipt = deployment.revoke_access(session.identity_id, body.patient_id, grantee)
        except RejectBadTx as exc:
            raise _from_reject(exc) from exc
        return {"tx_id": receipt.tx_id.hex(), "block_index": receipt.block_index}

    @app.post("/api/appointments")
    def book(body: AppointmentBody, session: Session = Depends(auth)):
        provider = _hex_bytes(body.provider_id, "provider_id", 32)
        try:
            receipt = deployment.book_appointment(
                session.identity_id, body.patient_id, provider, body.slot_ms, body.note
            )
        except RejectBadTx as exc:
            raise _from_reject(exc) from exc
        return {"tx_id": receipt.tx_id.hex(), "block_index": receipt.block_index}

    @app.get("/api/appointments")
    def list_appointments(session: Session = Depends(auth)):
        return {
            "appointments": [
                {
                    "patient_id": entry.patient_id,
                    "provider_id": entry.provider_id.hex(),
                    "slot_ms": entry.slot_ms,
                    "note": entry.note,
                    "block_index": entry.block_index,
                    "tx_id": entry.tx_id.hex(),
                }
                for entry in deployment.appointments_for(session.identity_id)
            ]
        }

    # -- chain -------------------------------------------------------------

    @app.get("/api/chain/verify")
    def verify():
        return deployment.verify_persisted().to_dict()

    @app.get("/api/chain")
    def chain_summary():
        chain = deployment.ledger.chain
        return {
            "height": chain.tip().header.index,
            "tip_digest": header_digest(chain.tip().header).hex(),
            "pending": len(deployment.ledger.pending),
            "blocks": [
                {
                    "index": block.header.index,
                    "digest": header_digest(block.header).hex(),
                    "prev_hash": block.header.prev_hash.hex(),
                    "timestamp_ms": block.header.timestamp_ms,
                    "difficulty_bits": block.header.difficulty_bits,
                    "nonce": block.header.nonce,
                    "tx_count": len(block.transactions),
                }
                for block in chain.blocks
            ],
        }

    @app.post("/api/mine")
    def mine(_session: Session = Depends(auth)):
        try:
            result = deployment.mine()
        except NothingToMine as exc:
            raise ApiError(409, "NothingToMine", str(exc)) from exc
        return {
            "block_index": result.block.header.index,
            "digest": header_digest(result.block.header).hex(),
            "tx_count": len(result.block.transactions),
            "attempts": result.attempts,
        }

    @app.get("/api/audit/{patient_id}")
    def audit(patient_id: int, session: Session = Depends(auth)):
        decision = policy.evaluate_access(
            deployment.state, session.identity_id, patient_id, policy.ACTION_READ, clock()
        )
        if not decision:
            raise ApiError(403, decision.reason, "audit read denied")
        return {"entries": [entry.to_dict() for entry in deployment.audit(patient_id)]}

    # -- test hooks and static UI -----------------------------------------

    if enable_test_hooks:
        @app.post("/api/testing/corrupt")
        def corrupt(body: CorruptBody):
            deployment.corrupt_log_record(body.block_index)
            return {"ok": True}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/app", StaticFiles(directory=str(ui_dir), html=True), name="app")

        @app.get("/")
        def index():
            return RedirectResponse(url="/app/")

    return app
