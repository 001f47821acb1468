"""Queue-and-dispatch layer routing agent chat/embed requests across backend
ports.

Requests enter a FIFO queue; a single dispatcher assigns each to the
least-loaded port whose in-flight count is under its cap (ties by port
index), and one worker pool per port executes them. Two guarantees matter to
the rest of the system:

* every request submitted before shutdown resolves exactly once, and
* requests from the same origin agent resolve in submission order (the
  dispatcher does not release an agent's next request until the previous one
  resolved).

When the queue is idle or all ports are saturated the dispatcher sleeps for
``adaptive_wait(pending)``, a bounded, monotone function of the queue depth,
so long runs do not spin the CPU. Submitters block (never drop) when the
queue hits its bound.
"""

from __future__ import annotations

import itertools
import threading
import time
from collections import deque
from concurrent.futures import Future
from dataclasses import dataclass, field
from queue import SimpleQueue
from typing import Sequence

from .errors import ChannelError


@dataclass(frozen=True)
class ChannelConfig:
    port_cap: int = 4
    base_wait: float = 0.001
    max_wait: float = 0.05
    pending_threshold: int = 64
    max_pending: int = 10_000


def adaptive_wait(pending_count: int, config: ChannelConfig) -> float:
    """Dispatch wait time, non-decreasing in queue depth and capped above."""
    if pending_count < 0:
        raise ChannelError(f"pending count cannot be negative: {pending_count}")
    wait = config.base_wait * (1.0 + pending_count / config.pending_threshold)
    return min(config.max_wait, wait)


@dataclass
class InferenceRequest:
    request_id: int
    kind: str  # chat | embed
    payload: str
    origin: tuple[str, str, str]  # (team_id, agent_id, stage)
    enqueue_time: float = 0.0
    future: Future = field(default_factory=Future)

    @property
    def agent_id(self) -> str:
        return self.origin[1]


_STOP = object()


class InferenceChannel:
    """One dispatcher, N ports, ``port_cap`` workers per port."""

    def __init__(self, backends: Sequence, config: ChannelConfig | None = None) -> None:
        if not backends:
            raise ChannelError("channel needs at least one backend port")
        self.config = config or ChannelConfig()
        self._backends = list(backends)
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._queue: deque[InferenceRequest] = deque()
        self._in_flight = [0] * len(backends)
        self._accepting = True
        self._last_for_agent: dict[str, Future] = {}
        self._id_counter = itertools.count(1)
        self._port_queues: list[SimpleQueue] = [SimpleQueue() for _ in backends]
        self._workers: list[threading.Thread] = []
        for port, q in enumerate(self._port_queues):
            for w in range(self.config.port_cap):
                t = threading.Thread(
                    target=self._worker, args=(port, q),
                    name=f"channel-port{port}-w{w}", daemon=True,
                )
                t.start()
                self._workers.append(t)
        self._dispatcher = threading.Thread(
            target=self._dispatch_loop, name="channel-dispatcher", daemon=True
        )
        self._dispatcher.start()

    @property
    def n_ports(self) -> int:
        return len(self._backends)

    def pending_count(self) -> int:
        with self._lock:
            return len(self._queue)

    def submit(self, kind: str, payload: str, origin: tuple[str, str, str]) -> Future:
        """Enqueue a request FIFO and return its single-assignment handle."""
        if kind not in ("chat", "embed"):
            raise ChannelError(f"unknown request kind: {kind}")
        with self._cond:
            while self._accepting and len(self._queue) >= self.config.max_pending:
                self._cond.wait()
            if not self._accepting:
                raise ChannelError("channel is shut down; submission rejected")
            request = InferenceRequest(
                request_id=next(self._id_counter),
                kind=kind,
                payload=payload,
                origin=origin,
                enqueue_time=time.monotonic(),
            )
            self._queue.append(request)
            self._cond.notify_all()
        return request.future

    def chat(self, prompt: str, origin: tuple[str, str, str]) -> str:
        return self.submit("chat", prompt, origin).result()

    def embed(self, text: str, origin: tuple[str, str, str]):
        return self.submit("embed", text, origin).result()

    def shutdown(self) -> None:
        """Stop accepting, drain every queued request, then join the workers."""
        with self._cond:
            if not self._accepting:
                return
            self._accepting = False
            self._cond.notify_all()
        self._dispatcher.join()
        for q in self._port_queues:
            for _ in range(self.config.port_cap):
                q.put(_STOP)
        for t in self._workers:
            t.join()

    def __enter__(self) -> "InferenceChannel":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def _dispatch_loop(self) -> None:
        while True:
            with self._cond:
                while not self._queue:
                    if not self._accepting:
                        while any(self._in_flight):
                            self._cond.wait()
                        return
                    self._cond.wait(timeout=adaptive_wait(len(self._queue), self.config))
                request = self._queue.popleft()
                self._cond.notify_all()  # wake submitters blocked on the bound
                previous = self._last_for_agent.get(request.agent_id)
            # Per-agent ordering: hold this request until the agent's previous
            # one resolved. Done outside the lock so workers can finish.
            if previous is not None and not previous.done():
                _await(previous)
            with self._cond:
                port = self._pick_port()
                while port is None:
                    self._cond.wait(timeout=adaptive_wait(len(self._queue), self.config))
                    port = self._pick_port()
                self._in_flight[port] += 1
                self._last_for_agent[request.agent_id] = request.future
            self._port_queues[port].put(request)

    def _pick_port(self) -> int | None:
        best, best_load = None, None
        for i, load in enumerate(self._in_flight):
            if load < self.config.port_cap and (best_load is None or load < best_load):
                best, best_load = i, load
        return best

    def _worker(self, port: int, q: SimpleQueue) -> None:
        backend = self._backends[port]
        while True:
            item = q.get()
            if item is _STOP:
                return
            request: InferenceRequest = item
            try:
                if request.kind == "chat":
                    result = backend.chat(request.payload)
                else:
                    result = backend.embed(request.payload)
                request.future.set_result(result)
            except Exception as exc:  # resolve-with-error, never lose a request
                request.future.set_exception(exc)
            finally:
                with self._cond:
                    self._in_flight[port] -= 1
                    self._cond.notify_all()


def _await(future: Future) -> None:
    try:
        future.result()
    except Exception:
        pass  # ordering only; the error belongs to that request's caller


class EchoBackend:
    """Payload-echo backend with configurable latency, for probes and tests."""

    mode = "mock"

    def __init__(self, latency: float = 0.0, tag: str = "") -> None:
        self.latency = latency
        self.tag = tag

    def chat(self, prompt: str) -> str:
        if self.latency:
            time.sleep(self.latency)
        return f"{self.tag}{prompt}"

    def embed(self, text: str):
        if self.latency:
            time.sleep(self.latency)
        return [float(len(text))]


@dataclass
class ProbeResult:
    n_agents: int
    n_ports: int
    wall_clock: float
    throughput: float

    def csv_row(self) -> list:
        return [self.n_agents, self.n_ports, repr(self.wall_clock), repr(self.throughput)]


def throughput_probe(
    n_agents: int,
    n_ports: int,
    latency: float,
    requests_per_agent: int = 4,
    port_cap: int = 1,
    config: ChannelConfig | None = None,
) -> ProbeResult:
    """Saturate a mock channel and report wall-clock and requests/sec."""
    cfg = config or ChannelConfig(port_cap=port_cap)
    backends = [EchoBackend(latency=latency) for _ in range(n_ports)]
    channel = InferenceChannel(backends, cfg)
    futures = []
    start = time.monotonic()
    for r in range(requests_per_agent):
        for a in range(n_agents):
            futures.append(channel.submit("chat", f"probe {a} {r}", ("probe", f"agent{a}", "probe")))
    for fut in futures:
        fut.result()
    wall = time.monotonic() - start
    channel.shutdown()
    n = len(futures)
    return ProbeResult(n_agents, n_ports, wall, n / wall if wall > 0 else float("inf"))
