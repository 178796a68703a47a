"""Newline-delimited JSON messages shared by the DNS and puzzle services.

Every frame is one JSON object on one line::

    {"type": "GetPuzzle", "req_id": 7, "version": 1, "body": {...}}

Replies echo the request's ``req_id``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import WireError

PROTOCOL_VERSION = 1
MAX_FRAME = 64 * 1024

# required body keys per message type
SCHEMAS = {
    "Resolve": (),
    "ResolveReply": ("address", "ttl", "kind"),
    "GetPuzzle": (),
    "PuzzleMsg": ("puzzle",),
    "SubmitSolution": ("requester", "interval", "index", "suffix", "d"),
    "Grant": ("suffix", "interval", "slot"),
    "Escalate": ("d",),
    "Error": ("code", "message"),
}
MESSAGE_TYPES = tuple(SCHEMAS)


@dataclass(frozen=True)
class WireMessage:
    type: str
    req_id: int
    body: dict = field(default_factory=dict)
    version: int = PROTOCOL_VERSION

    def reply(self, type_: str, **body) -> "WireMessage":
        return WireMessage(type_, self.req_id, body)


def error_reply(req: WireMessage | None, code: str, message: str = "") -> WireMessage:
    return WireMessage("Error", req.req_id if req else 0, {"code": code, "message": message})


def check(msg: WireMessage) -> WireMessage:
    if msg.type not in SCHEMAS:
        raise WireError(f"unknown message type {msg.type!r}")
    if msg.version != PROTOCOL_VERSION:
        raise WireError(f"unsupported protocol version {msg.version!r}")
    if isinstance(msg.req_id, bool) or not isinstance(msg.req_id, int) or msg.req_id < 0:
        raise WireError("req_id must be a non-negative integer")
    if not isinstance(msg.body, dict):
        raise WireError("body must be an object")
    missing = [k for k in SCHEMAS[msg.type] if k not in msg.body]
    if missing:
        raise WireError(f"{msg.type} body missing {missing}")
    return msg


def encode(msg: WireMessage) -> bytes:
    check(msg)
    doc = {"type": msg.type, "req_id": msg.req_id, "version": msg.version, "body": msg.body}
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8") + b"\n"


def decode(frame: bytes | str) -> WireMessage:
    if isinstance(frame, bytes):
        if len(frame) > MAX_FRAME:
            raise WireError("frame too large")
        try:
            frame = frame.decode("utf-8")
        except UnicodeDecodeError:
            raise WireError("frame is not UTF-8") from None
    try:
        doc = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise WireError(f"bad JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise WireError("frame must be a JSON object")
    extra = set(doc) - {"type", "req_id", "version", "body"}
    if extra:
        raise WireError(f"unexpected fields {sorted(extra)}")
    try:
        msg = WireMessage(doc["type"], doc["req_id"], doc.get("body", {}), doc["version"])
    except KeyError as exc:
        raise WireError(f"missing field {exc.args[0]}") from None
    return check(msg)
