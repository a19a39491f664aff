"""Discrete-event simulation of the two-level processor sharing queue.

Each queue is processor sharing, so every job in a queue accumulates service
at the same rate.  A per-queue *virtual time* (service received by any one
resident job) turns each queue into a heap keyed by the virtual time at which
a job leaves it: a high-priority job leaves when its attained service reaches
``min(size, theta)``, a low-priority job when it has received ``size - theta``
more.  The low queue's virtual time only advances while the high queue is
empty.

Random streams: replication ``r`` of a run with root ``seed`` draws from
``numpy.random.default_rng(SeedSequence(seed, spawn_key=(r,)))``, which is the
``r``-th child of ``SeedSequence(seed).spawn(...)``.  Replications are
therefore independent of how many there are and of the order they run in.
"""
from __future__ import annotations

import csv
import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import InvalidModelError, SimulationBugError, UnstableModelError
from .hyperexp import TlpsModel, sample_job_sizes

ARRIVAL, CROSSING, COMPLETION, END = "arrival", "crossing", "completion", "end"
HIGH, LOW = 1, 2
TRACE_COLUMNS = ("time", "event_type", "job_id", "queue_level", "attained_service")


@dataclass(frozen=True)
class SimConfig:
    model: TlpsModel
    theta: float
    num_jobs: int = 100_000
    warmup_jobs: int = 10_000
    seed: int = 0
    replications: int = 10
    bucket_edges: tuple | None = None
    chunk: int = 8192

    def __post_init__(self):
        if not self.theta >= 0:
            raise InvalidModelError("theta must be >= 0")
        if not 0 <= self.warmup_jobs < self.num_jobs:
            raise InvalidModelError("need 0 <= warmup_jobs < num_jobs")
        if self.replications < 1:
            raise InvalidModelError("replications must be >= 1")
        if not self.model.rho < 1:
            raise UnstableModelError("unstable model")
        if self.bucket_edges is not None:
            edges = tuple(float(e) for e in self.bucket_edges)
            if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
                raise InvalidModelError("bucket_edges must be strictly increasing, length >= 2")
            object.__setattr__(self, "bucket_edges", edges)

    def edges(self) -> tuple:
        if self.bucket_edges is not None:
            return self.bucket_edges
        if self.theta > 0 and math.isfinite(self.theta):
            return tuple(np.linspace(0.0, self.theta, 5).tolist()) + (math.inf,)
        return (0.0, math.inf)


@dataclass(frozen=True)
class Bucket:
    lo: float
    hi: float
    mean_sojourn: float
    ci99_halfwidth: float
    count: int


@dataclass(frozen=True)
class SimResult:
    mean_sojourn: float
    ci99_halfwidth: float
    bucket_means: list
    jobs_counted: int
    replication_means: list = field(default_factory=list)

    def contains(self, value: float) -> bool:
        return abs(value - self.mean_sojourn) <= self.ci99_halfwidth


@dataclass
class Replication:
    index: int
    sojourns: np.ndarray
    sizes: np.ndarray
    trace: list | None = None

    @property
    def mean(self) -> float:
        return float(self.sojourns.mean())


def job_stream(model: TlpsModel, rng: np.random.Generator, chunk: int = 8192):
    """Endless ``(arrival_time, size)`` pairs, drawn in fixed-size chunks."""
    t = 0.0
    scale = 1.0 / model.arrival_rate
    while True:
        gaps = rng.exponential(scale, chunk)
        sizes = sample_job_sizes(model.dist, rng, chunk)
        times = t + np.cumsum(gaps)
        t = float(times[-1])
        yield from zip(times.tolist(), sizes.tolist())


def simulate_tlps(stream, theta: float, n_count: int, record_trace: bool = False):
    """Run the queue until jobs ``0 .. n_count-1`` have all departed.

    ``stream`` yields ``(arrival_time, size)`` in time order; if it runs dry no
    further arrivals occur.  Returns ``(arrivals, sizes, departures, trace)``
    for the first ``n_count`` jobs; ``trace`` is None unless requested.
    Simultaneous events resolve as completion/crossing before arrival.
    """
    push, pop = heapq.heappush, heapq.heappop
    inf = math.inf
    arrivals: list[float] = []
    sizes: list[float] = []
    departures = [inf] * n_count
    trace = [] if record_trace else None
    high: list = []
    low: list = []
    vh = vl = 0.0
    t = 0.0
    it = iter(stream)
    nxt = next(it, None)
    next_arr = nxt[0] if nxt is not None else inf
    pending = n_count
    while pending:
        nh = len(high)
        if nh:
            dt = (high[0][0] - vh) * nh
        elif low:
            dt = (low[0][0] - vl) * len(low)
        elif next_arr == inf:
            raise SimulationBugError("system empty with jobs unaccounted for")
        else:
            dt = inf
        if t + dt <= next_arr:
            t += dt
            if nh:
                vh, j = pop(high)
                size = sizes[j]
                if size <= theta:
                    if j < n_count:
                        departures[j] = t
                        pending -= 1
                    if trace is not None:
                        trace.append((t, COMPLETION, j, HIGH, size))
                else:
                    push(low, (vl + (size - theta), j))
                    if trace is not None:
                        trace.append((t, CROSSING, j, LOW, theta))
            else:
                vl, j = pop(low)
                if j < n_count:
                    departures[j] = t
                    pending -= 1
                if trace is not None:
                    trace.append((t, COMPLETION, j, LOW, sizes[j]))
        else:
            gap = next_arr - t
            t = next_arr
            if nh:
                vh += gap / nh
            elif low:
                vl += gap / len(low)
            j = len(sizes)
            size = nxt[1]
            arrivals.append(t)
            sizes.append(size)
            push(high, (vh + (size if size < theta else theta), j))
            if trace is not None:
                trace.append((t, ARRIVAL, j, HIGH, 0.0))
            nxt = next(it, None)
            next_arr = nxt[0] if nxt is not None else inf
    if trace is not None:
        for target, j in high:
            trace.append((t, END, j, HIGH, min(sizes[j], theta) - (target - vh)))
        for target, j in low:
            trace.append((t, END, j, LOW, sizes[j] - (target - vl)))
    return (np.array(arrivals[:n_count]), np.array(sizes[:n_count]),
            np.array(departures), trace)


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def run_replication(config: SimConfig, index: int, record_trace: bool = False) -> Replication:
    rng = replication_rng(config.seed, index)
    stream = job_stream(config.model, rng, config.chunk)
    arr, sizes, dep, trace = simulate_tlps(stream, config.theta, config.num_jobs, record_trace)
    keep = slice(config.warmup_jobs, config.num_jobs)
    return Replication(index, (dep - arr)[keep], sizes[keep], trace)


def _replication_job(args):
    config, index = args
    return run_replication(config, index)


def ci99_halfwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return math.inf
    return float(sps.t.ppf(0.995, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size))


def run(config: SimConfig, workers: int | None = None) -> SimResult:
    """Simulate all replications and aggregate with Student-t 99% intervals."""
    jobs = [(config, r) for r in range(config.replications)]
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            reps = list(pool.map(_replication_job, jobs))
    else:
        reps = [_replication_job(j) for j in jobs]
    reps.sort(key=lambda r: r.index)
    means = [r.mean for r in reps]
    jobs_counted = sum(r.sojourns.size for r in reps)
    if jobs_counted == 0:
        raise InvalidModelError("no jobs counted")

    edges = config.edges()
    buckets = []
    for lo, hi in zip(edges, edges[1:]):
        per_rep = []
        count = 0
        for r in reps:
            mask = (r.sizes > lo) & (r.sizes <= hi)
            n = int(mask.sum())
            count += n
            if n:
                per_rep.append(float(r.sojourns[mask].mean()))
        mean = float(np.mean(per_rep)) if per_rep else math.nan
        buckets.append(Bucket(lo, hi, mean, ci99_halfwidth(per_rep), count))

    return SimResult(
        mean_sojourn=float(np.mean(means)),
        ci99_halfwidth=ci99_halfwidth(means),
        bucket_means=buckets,
        jobs_counted=jobs_counted,
        replication_means=means,
    )


@dataclass(frozen=True)
class TraceDiagnostics:
    events: int
    busy_time: float
    work_served: float
    max_in_system: int


def busy_period_check(trace, theta: float, rtol: float = 1e-9) -> TraceDiagnostics:
    """Audit a trace for work conservation and bookkeeping.

    Between consecutive events with at least one job present the server must
    be working, so the summed busy time has to equal the work actually
    delivered (sizes of completed jobs plus service attained by jobs still
    present at the end).
    """
    if not trace:
        raise SimulationBugError("empty trace")
    present: dict[int, int] = {}
    arrived: dict[int, float] = {}
    busy = 0.0
    work = 0.0
    peak = 0
    prev_t = trace[0][0]
    for k, (t, kind, j, level, attained) in enumerate(trace):
        if t < prev_t:
            raise SimulationBugError("time went backwards", k)
        if present:
            busy += t - prev_t
        prev_t = t
        if kind == ARRIVAL:
            if j in present or j in arrived:
                raise SimulationBugError(f"job {j} arrived twice", k)
            present[j] = HIGH
            arrived[j] = t
        elif kind == CROSSING:
            if present.get(j) != HIGH or not math.isclose(attained, theta):
                raise SimulationBugError(f"bad threshold crossing for job {j}", k)
            present[j] = LOW
        elif kind == COMPLETION:
            if present.pop(j, None) != level:
                raise SimulationBugError(f"job {j} completed from the wrong queue", k)
            if level == HIGH and attained > theta:
                raise SimulationBugError(f"job {j} finished above threshold at high priority", k)
            if t - arrived[j] < attained - 1e-9 * max(1.0, t):
                raise SimulationBugError(f"job {j} left faster than full-rate service", k)
            work += attained
        elif kind == END:
            if present.get(j) != level:
                raise SimulationBugError(f"job {j} unaccounted for at end", k)
            if attained < -1e-9 * max(1.0, t):
                raise SimulationBugError(f"job {j} has negative attained service", k)
            work += max(attained, 0.0)
        else:
            raise SimulationBugError(f"unknown event {kind!r}", k)
        peak = max(peak, len(present))
    if not math.isclose(busy, work, rel_tol=rtol, abs_tol=rtol):
        raise SimulationBugError(
            f"busy time {busy!r} differs from work served {work!r}", len(trace) - 1
        )
    return TraceDiagnostics(len(trace), busy, work, peak)


def ps_reference(arrivals, sizes) -> np.ndarray:
    """Departure times under plain processor sharing, by direct remaining-work updates."""
    arrivals = np.asarray(arrivals, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    n = arrivals.size
    dep = np.full(n, math.nan)
    remaining: dict[int, float] = {}
    t = 0.0
    i = 0
    while i < n or remaining:
        next_arr = arrivals[i] if i < n else math.inf
        if remaining:
            j_min = min(remaining, key=remaining.__getitem__)
            t_done = t + remaining[j_min] * len(remaining)
        else:
            t_done = math.inf
        t_next = min(t_done, next_arr)
        if remaining:
            share = (t_next - t) / len(remaining)
            for j in remaining:
                remaining[j] -= share
        t = t_next
        if t_done <= next_arr:
            del remaining[j_min]
            dep[j_min] = t
        else:
            remaining[i] = sizes[i]
            i += 1
    return dep


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, kind, j, level, attained in trace:
            w.writerow((f"{t:.12g}", kind, j, level, f"{attained:.12g}"))
