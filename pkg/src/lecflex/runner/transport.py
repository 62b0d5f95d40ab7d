"""LEC agents behind the message boundary and the two transports that reach them.

Both transports push every message through ``encode_message`` /
``decode_message``, so the coordinator sees identical data either way.
"""

from __future__ import annotations

import socket
import threading

from ..core.types import LECSpec, TariffBook
from ..lec import FlexSignal, solve_baseline, solve_commitment, solve_flex_bid
from ..milp import SolveOptions
from .messages import Message, MessageError, decode_message, encode_message


class TransportError(RuntimeError):
    pass


def _series(a) -> list:
    return [float(v) for v in a]


class LECAgent:
    """Answers DSO messages for one LEC; device state never leaves this object."""

    def __init__(self, spec: LECSpec, tariffs: TariffBook, horizon: int, dt: float = 1.0,
                 options: SolveOptions | None = None):
        self.spec = spec
        self.tariffs = tariffs
        self.horizon = horizon
        self.dt = dt
        self.options = options
        self.baseline = None
        self.commitment = None
        self.last_bid_schedule = None

    @property
    def id(self) -> str:
        return self.spec.id

    def start(self) -> Message:
        self.baseline = solve_baseline(self.spec, self.tariffs, self.horizon, self.dt, self.options)
        b = self.baseline
        return Message("BaselineSubmission", self.id, 0,
                       {"lec": self.id, "p": _series(b.net_p), "q": _series(b.net_q), "costs": dict(b.costs)})

    def _signal(self, payload) -> FlexSignal:
        return FlexSignal(payload["lec"], tuple(payload["hours"]), tuple(payload["prices"]),
                          tuple(payload["directions"]), payload["deviation_cap"])

    def handle(self, msg: Message) -> Message | None:
        if msg.payload.get("lec") != self.id:
            raise MessageError(f"message for {msg.payload.get('lec')} delivered to {self.id}")
        if msg.kind == "FlexSignal":
            bid, sched = solve_flex_bid(self.spec, self.tariffs, self.baseline, self._signal(msg.payload),
                                        self.horizon, self.dt, self.options)
            self.last_bid_schedule = sched
            return Message("FlexBid", self.id, msg.iteration,
                           {"lec": self.id, "hours": list(bid.hours), "flex_max": list(bid.flex_max),
                            "objective": bid.objective, "operating_cost": bid.operating_cost})
        if msg.kind == "AllocationNotice":
            p = dict(msg.payload)
            sig = FlexSignal(p["lec"], tuple(p["hours"]), tuple(p["prices"]), tuple(p["directions"]),
                             p["deviation_cap"])
            c = solve_commitment(self.spec, self.tariffs, self.baseline, sig, p["accepted"], self.horizon,
                                 self.dt, self.options)
            self.commitment = c
            return Message("CommitmentSubmission", self.id, msg.iteration,
                           {"lec": self.id, "p": _series(c.net_p), "q": _series(c.net_q),
                            "flexibility": _series(c.flexibility), "costs": dict(c.costs), "revenue": c.revenue})
        if msg.kind == "SettlementNotice":
            return None
        raise MessageError(f"LEC agent cannot handle {msg.kind}")


class InProcessTransport:
    """Agents live in this process; messages still cross as encoded text."""

    name = "in-process"

    def __init__(self, agents):
        self.agents = {a.id: a for a in agents}
        self.log: list = []

    def _wire(self, msg: Message) -> Message:
        line = encode_message(msg)
        self.log.append(line)
        return decode_message(line)

    def open(self) -> dict:
        return {lec: self._wire(self.agents[lec].start()) for lec in sorted(self.agents)}

    def exchange(self, messages: dict) -> dict:
        out = {}
        for lec in sorted(messages):
            reply = self.agents[lec].handle(self._wire(messages[lec]))
            if reply is None:
                raise TransportError(f"{lec} sent no reply to {messages[lec].kind}")
            out[lec] = self._wire(reply)
        return out

    def notify(self, messages: dict) -> None:
        for lec in sorted(messages):
            self.agents[lec].handle(self._wire(messages[lec]))

    def close(self) -> None:
        pass


def _agent_loop(agent: LECAgent, port: int, errors: dict):
    try:
        with socket.create_connection(("127.0.0.1", port)) as sock:
            rfile = sock.makefile("r", encoding="utf-8", newline="\n")
            wfile = sock.makefile("w", encoding="utf-8", newline="\n")
            wfile.write(encode_message(agent.start()) + "\n")
            wfile.flush()
            for line in rfile:
                msg = decode_message(line)
                reply = agent.handle(msg)
                if msg.kind == "SettlementNotice":
                    break
                wfile.write(encode_message(reply) + "\n")
                wfile.flush()
    except Exception as exc:  # surfaced by the coordinator
        errors[agent.id] = exc


class SocketTransport:
    """One TCP connection per LEC on localhost; the DSO listens, agents run in threads."""

    name = "socket"

    def __init__(self, agents, timeout: float = 600.0):
        self.agents = {a.id: a for a in agents}
        self.timeout = timeout
        self.errors: dict = {}
        self.conns: dict = {}
        self.threads: list = []
        self.log: list = []
        self._server = None

    def _fail(self, lec, what):
        exc = self.errors.get(lec)
        raise TransportError(f"LEC {lec} {what}") from exc

    def _read(self, lec) -> Message:
        line = self.conns[lec][1].readline()
        if not line:
            self._fail(lec, "closed the connection")
        self.log.append(line.rstrip("\n"))
        return decode_message(line)

    def _send(self, lec, msg: Message):
        line = encode_message(msg)
        self.log.append(line)
        w = self.conns[lec][2]
        w.write(line + "\n")
        w.flush()

    def open(self) -> dict:
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", 0))
        server.listen(len(self.agents))
        server.settimeout(self.timeout)
        self._server = server
        port = server.getsockname()[1]
        for lec in sorted(self.agents):
            t = threading.Thread(target=_agent_loop, args=(self.agents[lec], port, self.errors), daemon=True)
            t.start()
            self.threads.append(t)
        pending = {}
        for _ in self.agents:
            try:
                conn, _ = server.accept()
            except socket.timeout as exc:
                raise TransportError(f"agents failed to connect: {sorted(self.errors)}") from exc
            conn.settimeout(self.timeout)
            r = conn.makefile("r", encoding="utf-8", newline="\n")
            w = conn.makefile("w", encoding="utf-8", newline="\n")
            line = r.readline()
            if not line:
                failed = sorted(self.errors)
                raise TransportError(f"LEC {failed[0] if failed else '?'} failed before its baseline") from (
                    self.errors.get(failed[0]) if failed else None)
            msg = decode_message(line)
            self.conns[msg.sender] = (conn, r, w)
            pending[msg.sender] = (line.rstrip("\n"), msg)
        out = {}
        for lec in sorted(pending):
            self.log.append(pending[lec][0])
            out[lec] = pending[lec][1]
        return out

    def exchange(self, messages: dict) -> dict:
        for lec in sorted(messages):
            self._send(lec, messages[lec])
        return {lec: self._read(lec) for lec in sorted(messages)}

    def notify(self, messages: dict) -> None:
        for lec in sorted(messages):
            self._send(lec, messages[lec])

    def close(self) -> None:
        for t in self.threads:
            t.join(timeout=self.timeout)
        for conn, r, w in self.conns.values():
            for f in (r, w):
                try:
                    f.close()
                except OSError:
                    pass
            conn.close()
        if self._server is not None:
            self._server.close()


TRANSPORTS = {"in-process": InProcessTransport, "socket": SocketTransport}


def make_transport(mode: str, agents):
    try:
        return TRANSPORTS[mode](agents)
    except KeyError:
        raise ValueError(f"unknown transport {mode!r}; expected one of {sorted(TRANSPORTS)}") from None
