"""Predictive slice provisioning for one XR stream, simulated on a fluid FIFO queue.

Time is measured in frame intervals. Frame ``u`` arrives at ``u / fps`` and
interval ``u`` is ``[u / fps, (u+1) / fps)``; during it the slice drains
``budget[u]`` bytes at the constant rate ``budget[u] * fps`` bytes/s.

Scheduling epochs start every ``S`` intervals. At the epoch starting at
interval ``u`` the scheduler knows frames ``0 .. u-1`` and the backlog ``q``
(bytes still queued at ``u / fps``, before frame ``u`` arrives) and sets the
budgets of intervals ``u .. u+S-1``:

* CS (coarse): one prediction of the mean of the next ``S`` frames; every
  interval gets it plus ``q / S``.
* FS (fine): ``S`` next-frame predictions at look-aheads ``1..S``; the first
  interval also gets the whole backlog ``q``.

Allocations are service budgets in bytes per frame interval and are turned
into rates (``* fps * 8``) only for reporting.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import logging
import math
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, XRTrafficError
from .regression import PredictorConfig, PredictorModel, fit_model
from .stats import nearest_rank
from .trace import FrameTrace, TraceMeta

log = logging.getLogger(__name__)

KINDS = ("CS", "FS")


@dataclass(frozen=True)
class SlicePolicy:
    kind: str
    S: int
    models: tuple

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "models", tuple(self.models))
        if kind not in KINDS:
            raise ConfigurationError(f"policy kind must be one of {KINDS}, got {self.kind!r}")
        if self.S < 1:
            raise ConfigurationError(f"scheduling period S must be >= 1, got {self.S}")
        if kind == "CS":
            if len(self.models) != 1:
                raise ConfigurationError(f"CS needs exactly one model, got {len(self.models)}")
            c = self.models[0].config
            if c.T != self.S or c.tau != 1:
                raise ConfigurationError(f"CS model must have T=S={self.S} and tau=1 (got T={c.T}, tau={c.tau})")
        else:
            if len(self.models) != self.S:
                raise ConfigurationError(f"FS needs S={self.S} models, got {len(self.models)}")
            for ell, m in enumerate(self.models, start=1):
                if m.config.T != 1 or m.config.tau != ell:
                    raise ConfigurationError(
                        f"FS model {ell} must have T=1 and tau={ell} (got T={m.config.T}, tau={m.config.tau})")
            if len({m.config.N for m in self.models}) != 1:
                raise ConfigurationError("FS models must share the same history length N")

    @property
    def N(self) -> int:
        return self.models[0].config.N


def _features(history, N):
    h = np.asarray(history, dtype=float)
    if h.size < N:
        raise InsufficientDataError(f"history of {h.size} frames is shorter than N={N}")
    return h[::-1][:N]


def allocate_cs(policy: SlicePolicy, history, q: float, meta: TraceMeta | None = None) -> np.ndarray:
    """Budgets for the next ``S`` intervals: one mean prediction plus ``q / S`` each.

    ``history`` holds the frames seen so far, oldest first. Negative predictions
    are clamped to zero before the backlog share is added.
    """
    pred = float(policy.models[0].predict(_features(history, policy.N), meta)[0])
    return np.full(policy.S, max(pred, 0.0) + q / policy.S)


def allocate_fs(policy: SlicePolicy, history, q: float, meta: TraceMeta | None = None) -> np.ndarray:
    """Budgets for the next ``S`` intervals: per-frame predictions, backlog added to the first."""
    x = _features(history, policy.N)
    budgets = np.array([max(float(m.predict(x, meta)[0]), 0.0) for m in policy.models])
    budgets[0] += q
    return budgets


class FluidQueue:
    """FIFO fluid server, advanced one frame interval at a time."""

    def __init__(self, frame_rate: float):
        self.frame_rate = frame_rate
        self._queue: deque = deque()
        self.backlog = 0.0
        self.arrived = 0.0
        self.served = 0.0
        # latency in frame intervals, by frame index
        self.done: dict = {}

    def arrive(self, index: int, size: float) -> None:
        self._queue.append([index, float(size)])
        self.backlog += size
        self.arrived += size

    def serve(self, interval: int, budget: float) -> float:
        """Drain up to ``budget`` bytes during ``interval``; returns the bytes served.

        A head frame whose remainder exceeds the budget by less than one part
        in 1e9 is treated as finishing at the end of the interval, so rounding
        in the budget never pushes a frame into the next interval.
        """
        if budget <= 0 or not self._queue:
            return 0.0
        avail = budget
        used = 0.0
        served = 0.0
        slack = 1e-9 * budget
        while self._queue and avail > 0:
            head = self._queue[0]
            idx, rem = head
            if rem <= avail + slack:
                used = min(used + rem, budget)
                avail -= rem
                served += rem
                self.done[idx] = (interval - idx) + used / budget
                self._queue.popleft()
            else:
                head[1] = rem - avail
                served += avail
                avail = 0.0
        self.served += served
        self.backlog = self.backlog - served if self._queue else 0.0
        return served

    @property
    def pending(self) -> int:
        return len(self._queue)


@dataclass
class RunSummary:
    kind: str
    S: int
    frames: int
    mean_latency: float
    p50_latency: float
    p95_latency: float
    p99_latency: float
    max_latency: float
    mean_rate: float
    p95_rate: float
    unfinished: int = 0
    p_s: float | None = None

    def as_row(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ScheduleRun:
    capacities: np.ndarray        # bytes per interval
    latencies: np.ndarray         # seconds per frame; inf when still queued at the end
    epoch_starts: np.ndarray      # interval index of each scheduling epoch
    backlog: np.ndarray           # bytes queued at each epoch start
    warmup: int                   # leading frames served at the nominal budget
    total_bytes: float
    served_bytes: float
    final_backlog: float
    frame_rate: float
    kind: str = ""
    S: int = 1
    diagnostics: list = field(default_factory=list)

    def summary(self, p_s: float | None = None) -> RunSummary:
        lat = self.latencies[self.warmup:]
        finished = lat[np.isfinite(lat)]
        unfinished = int(lat.size - finished.size)
        rates = self.capacities[self.warmup:] * self.frame_rate * 8.0
        if finished.size == 0 or rates.size == 0:
            raise InsufficientDataError("no scheduled frames left after warm-up")
        return RunSummary(
            kind=self.kind, S=self.S, frames=int(finished.size),
            mean_latency=float(finished.mean()),
            p50_latency=nearest_rank(finished, 0.50),
            p95_latency=nearest_rank(finished, 0.95),
            p99_latency=nearest_rank(finished, 0.99),
            max_latency=float(finished.max()),
            mean_rate=float(rates.mean()),
            p95_rate=nearest_rank(rates, 0.95),
            unfinished=unfinished, p_s=p_s,
        )


def replay(sizes, capacities, frame_rate: float):
    """Run fixed per-interval budgets through the fluid queue.

    Returns ``(latencies_seconds, queue)``; frames not finished by the last
    interval get an infinite latency.
    """
    sizes = np.asarray(sizes, dtype=float)
    capacities = np.asarray(capacities, dtype=float)
    if capacities.size != sizes.size:
        raise ConfigurationError(f"{capacities.size} capacities for {sizes.size} frames")
    if np.any(capacities < 0):
        raise ConfigurationError("capacities must be >= 0")
    q = FluidQueue(frame_rate)
    for u in range(sizes.size):
        q.arrive(u, sizes[u])
        q.serve(u, capacities[u])
    return _latency_array(q, sizes.size), q


def _latency_array(queue: FluidQueue, n: int) -> np.ndarray:
    lat = np.full(n, np.inf)
    for idx, frames in queue.done.items():
        lat[idx] = frames / queue.frame_rate
    return lat


def first_epoch(N: int, S: int) -> int:
    """Cold-start length: the first ``N + 1`` frames, rounded up to a whole scheduling period."""
    return int(math.ceil((N + 1) / S)) * S


def simulate(trace: FrameTrace, policy: SlicePolicy) -> ScheduleRun:
    """Drive the fluid queue with the policy's allocations over the whole trace."""
    sizes = trace.sizes
    n = sizes.size
    meta = trace.meta
    S = policy.S
    start = first_epoch(policy.N, S)
    if start >= n:
        raise InsufficientDataError(f"trace of {n} frames ends before the first scheduling epoch ({start})")
    allocate = allocate_cs if policy.kind == "CS" else allocate_fs
    nominal = meta.expected_frame_bytes

    budgets = np.full(n, nominal)
    queue = FluidQueue(meta.frame_rate)
    epochs, backlog = [], []
    for u in range(n):
        if u >= start and (u - start) % S == 0:
            q = queue.backlog
            alloc = allocate(policy, sizes[max(0, u - policy.N):u], q, meta)
            m = min(S, n - u)
            budgets[u:u + m] = alloc[:m]
            epochs.append(u)
            backlog.append(q)
        queue.arrive(u, sizes[u])
        queue.serve(u, budgets[u])

    diagnostics = []
    if queue.pending and not np.any(budgets[start:] > 0):
        diagnostics.append("livelock: zero capacity for the whole run with a non-empty queue")
        log.warning(diagnostics[-1])
    return ScheduleRun(
        capacities=budgets, latencies=_latency_array(queue, n),
        epoch_starts=np.array(epochs, dtype=int), backlog=np.array(backlog),
        warmup=start, total_bytes=float(sizes.sum()), served_bytes=queue.served,
        final_backlog=queue.backlog, frame_rate=meta.frame_rate,
        kind=policy.kind, S=S, diagnostics=diagnostics,
    )


# --- policies and sweeps ---------------------------------------------------------

class _ModelCache:
    def __init__(self, train, scope):
        self.train = list(train)
        self.scope = scope
        self._fits = {}

    def get(self, config: PredictorConfig) -> PredictorModel:
        if config not in self._fits:
            self._fits[config] = fit_model(self.train, config, normalized=True, scope=self.scope)
        return self._fits[config]


def build_policy(kind: str, S: int, p_s: float, N: int, train: Sequence[FrameTrace],
                 scope: str = "CRM", _cache: _ModelCache | None = None) -> SlicePolicy:
    """Train the quantile models a CS or FS policy needs on ``train`` (normalized, pooled)."""
    cache = _cache or _ModelCache(train, scope)
    kind = kind.upper()
    if kind == "CS":
        models = [cache.get(PredictorConfig(N=N, T=S, tau=1, method="quantile", p_s=p_s))]
    elif kind == "FS":
        models = [cache.get(PredictorConfig(N=N, T=1, tau=ell, method="quantile", p_s=p_s))
                  for ell in range(1, S + 1)]
    else:
        raise ConfigurationError(f"policy kind must be one of {KINDS}, got {kind!r}")
    return SlicePolicy(kind, S, models)


@dataclass
class SweepPoint:
    kind: str
    S: int
    p_s: float
    summary: RunSummary | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.summary is not None


def sweep(trace: FrameTrace, kind: str, S_set: Sequence[int] = (6,), p_s_set: Sequence[float] = (0.95,),
          N: int = 6, train: Sequence[FrameTrace] | None = None, scope: str | None = None) -> list[SweepPoint]:
    """One summary per ``(S, p_s)`` grid point, ``S`` outer, in the given order.

    Models are trained on ``train`` (default: the evaluated trace itself) and
    reused across grid points that need the same configuration. A failing point
    is recorded with its error instead of aborting the sweep.
    """
    train = [trace] if train is None else list(train)
    if scope is None:
        scope = "CRM" if len(train) == 1 else "CM"
    cache = _ModelCache(train, scope)
    points = []
    for S in S_set:
        for p_s in p_s_set:
            try:
                policy = build_policy(kind, S, p_s, N, train, scope, cache)
                points.append(SweepPoint(policy.kind, S, p_s, simulate(trace, policy).summary(p_s)))
            except XRTrafficError as exc:
                log.warning("sweep point kind=%s S=%s p_s=%s failed: %s", kind, S, p_s, exc)
                points.append(SweepPoint(kind.upper(), S, p_s, error=str(exc)))
    return points
