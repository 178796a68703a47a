"""DNS failover, puzzle distribution and the client driver."""
from .client import ClientDriver, HeldSuffix, Request, Sleep, Solve
from .dns import DnsMode, DnsState, dns_step, handle_dns, resolve
from .puzzled import (PuzzleServerState, ServerMode, handle_puzzle, make_batch, serve_puzzle,
                      tick, upload_batch)
from .wire import MESSAGE_TYPES, PROTOCOL_VERSION, WireMessage, decode, encode

__all__ = [
    "ClientDriver", "HeldSuffix", "Request", "Sleep", "Solve",
    "DnsMode", "DnsState", "dns_step", "handle_dns", "resolve",
    "PuzzleServerState", "ServerMode", "handle_puzzle", "make_batch", "serve_puzzle", "tick",
    "upload_batch", "MESSAGE_TYPES", "PROTOCOL_VERSION", "WireMessage", "decode", "encode",
]
