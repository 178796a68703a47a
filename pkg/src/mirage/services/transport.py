"""asyncio servers and the socket runner for the client driver."""
from __future__ import annotations

import asyncio
import json
import logging
import time

from ..errors import BindError, WireError
from ..puzzle import solve_puzzle
from . import puzzled
from .client import ClientDriver, Request, Sleep, Solve
from .dns import DnsState, dns_step, handle_dns
from .wire import MAX_FRAME, WireMessage, decode, encode, error_reply

log = logging.getLogger("mirage.services")


def split_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {address!r}")
    return host.strip("[]") or "127.0.0.1", int(port)


class StateLog:
    """Append-only JSON-lines log of state transitions."""

    def __init__(self, path=None):
        self.path = path
        self.entries: list = []

    def write(self, **entry):
        entry.setdefault("time", time.time())
        self.entries.append(entry)
        log.info("%s", entry)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")


class LineServer:
    """One NDJSON request/response loop per connection."""

    def __init__(self):
        self.server: asyncio.AbstractServer | None = None
        self.address: tuple[str, int] | None = None
        self._tasks: set = set()

    def handle(self, msg: WireMessage, writer):  # pragma: no cover - overridden
        raise NotImplementedError

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        try:
            self.server = await asyncio.start_server(self._conn, host, port, limit=MAX_FRAME)
        except OSError as exc:
            raise BindError(f"cannot listen on {host}:{port}: {exc.strerror or exc}") from exc
        self.address = self.server.sockets[0].getsockname()[:2]
        return self.address

    def spawn(self, coro):
        task = asyncio.ensure_future(coro)
        self._tasks.add(task)
        task.add_done_callback(self._tasks.discard)
        return task

    async def _conn(self, reader, writer):
        try:
            while True:
                try:
                    line = await reader.readline()
                except (ValueError, asyncio.LimitOverrunError):
                    await _send(writer, error_reply(None, "bad_frame", "frame too large"))
                    break
                if not line:
                    break
                if not line.strip():
                    continue
                try:
                    msg = decode(line)
                except WireError as exc:
                    await _send(writer, error_reply(None, "bad_frame", str(exc)))
                    continue
                reply = self.handle(msg, writer)
                if reply is not None:
                    await _send(writer, reply)
        except (ConnectionError, OSError):
            pass
        finally:
            writer.close()

    async def close(self):
        for task in list(self._tasks):
            task.cancel()
        if self.server is not None:
            self.server.close()
            await self.server.wait_closed()


async def _send(writer, msg: WireMessage):
    writer.write(encode(msg))
    await writer.drain()


class DnsServer(LineServer):
    def __init__(self, state: DnsState, probe_period_s: float = 2.0, probe_timeout_s=None,
                 state_log: StateLog | None = None):
        super().__init__()
        self.state = state
        self.probe_period_s = probe_period_s
        self.probe_timeout_s = probe_timeout_s or min(1.0, probe_period_s)
        self.state_log = state_log or StateLog()

    def handle(self, msg, writer):
        return handle_dns(self.state, msg)

    async def start(self, host="127.0.0.1", port=0):
        addr = await super().start(host, port)
        self.spawn(self._probe_loop())
        return addr

    async def probe_once(self) -> bool:
        host, port = split_address(self.state.victim_address)
        try:
            _, w = await asyncio.wait_for(asyncio.open_connection(host, port), self.probe_timeout_s)
        except (OSError, asyncio.TimeoutError):
            return False
        w.close()
        return True

    def record(self, ok: bool):
        before = self.state.mode
        self.state = dns_step(self.state, ok)
        if self.state.mode is not before:
            self.state_log.write(event="dns_mode", old=before.value, new=self.state.mode.value,
                                 record=self.state.record)

    async def _probe_loop(self):
        while True:
            self.record(await self.probe_once())
            await asyncio.sleep(self.probe_period_s)


class PuzzleServer(LineServer):
    """Serves puzzles; `uploader(T)` stands in for the victim's batch upload."""

    def __init__(self, state: puzzled.PuzzleServerState, uploader=None, allocator_step_s: float = 0.1,
                 clock=time.time, state_log: StateLog | None = None):
        super().__init__()
        self.state = state
        self.uploader = uploader
        self.allocator_step_s = allocator_step_s
        self.clock = clock
        self.state_log = state_log or StateLog()

    def handle(self, msg, writer):
        return puzzled.handle_puzzle(self.state, msg, self.clock(), writer)

    async def start(self, host="127.0.0.1", port=0):
        addr = await super().start(host, port)
        if self.uploader is not None:
            T = self.state.interval_at(self.clock())
            self._upload(T)
            self._upload(T + 1)
            self.spawn(self._rollover_loop())
        if self.state.mode is puzzled.ServerMode.AUCTION:
            self.spawn(self._tick_loop())
        return addr

    def _upload(self, T: int):
        if T in self.state.batches:
            return
        puzzled.upload_batch(self.state, T, self.uploader(T))
        self.state_log.write(event="batch_uploaded", interval=T, size=len(self.state.batches[T]))

    async def _rollover_loop(self):
        I = self.state.interval_seconds
        while True:
            now = self.clock()
            await asyncio.sleep(max((int(now // I) + 1) * I - now, 0.0) + 1e-3)
            T = self.state.interval_at(self.clock())
            self._upload(T)
            # the next batch goes up early so requests at the rollover never find it missing
            self._upload(T + 1)

    async def _tick_loop(self):
        while True:
            await asyncio.sleep(self.allocator_step_s)
            for writer, reply in puzzled.tick(self.state, self.clock()):
                try:
                    await _send(writer, reply)
                except (ConnectionError, OSError):
                    pass


class ProbeTarget(LineServer):
    """Stand-in for the victim host: accepts and closes connections."""

    async def _conn(self, reader, writer):
        writer.close()


class AsyncRunner:
    """Runs a ClientDriver over real sockets."""

    def __init__(self, dns_address: str, timeout_s: float = 5.0, solver=None):
        self.dns_address = dns_address
        self.timeout_s = timeout_s
        self.solver = solver or solve_puzzle
        self._conns: dict = {}

    async def _request(self, address: str, msg: WireMessage) -> WireMessage:
        conn = self._conns.get(address)
        if conn is None:
            host, port = split_address(address)
            conn = await asyncio.wait_for(asyncio.open_connection(host, port, limit=MAX_FRAME),
                                          self.timeout_s)
            self._conns[address] = conn
        reader, writer = conn
        try:
            await _send(writer, msg)
            while True:
                line = await asyncio.wait_for(reader.readline(), self.timeout_s)
                if not line:
                    raise ConnectionError(f"{address} closed the connection")
                reply = decode(line)
                if reply.req_id == msg.req_id:
                    return reply
        except BaseException:
            self._conns.pop(address, None)
            writer.close()
            raise

    async def drive(self, driver: ClientDriver):
        loop = asyncio.get_running_loop()
        gen = driver.run()
        value, exc = None, None
        while True:
            try:
                effect = gen.throw(exc) if exc is not None else gen.send(value)
            except StopIteration:
                break
            value, exc = None, None
            try:
                if isinstance(effect, Request):
                    value = await self._request(effect.address or self.dns_address, effect.msg)
                elif isinstance(effect, Solve):
                    value = await loop.run_in_executor(None, self.solver, effect.puzzle)
                elif isinstance(effect, Sleep):
                    await asyncio.sleep(effect.seconds)
                else:
                    raise TypeError(f"unknown effect {effect!r}")
            except (OSError, asyncio.TimeoutError, WireError) as err:
                exc = err if isinstance(err, (OSError, WireError)) else ConnectionError("timed out")
        await self.close()

    async def close(self):
        for _, writer in self._conns.values():
            writer.close()
        self._conns.clear()
