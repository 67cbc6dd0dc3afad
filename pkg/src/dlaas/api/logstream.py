"""Raw-log tailing and the extensible metric-record parser.

One tailing thread per job feeds a broadcast buffer: subscribers replay
history, then follow live appends. Learner logs live in the object store
(one blob per learner, rewritten on flush), so the tailer diffs line
counts per learner; a blob that shrank (checkpoint-resume truncation)
resets the high-water mark without re-emitting the replayed span.

Parsing is registry-based: each parser maps one raw line to a record or
None. Unparseable lines are counted and skipped, never an error.
"""

from __future__ import annotations

import json
import logging
import queue
import re
import threading
from dataclasses import dataclass
from typing import Callable

from dlaas.coordstore.store import CoordStore, NotFoundError
from dlaas.layout import status_path
from dlaas.lcm.jobs import JobState, TERMINAL_JOB_STATES
from dlaas.objectstore.store import BlobStore, StoreError

logger = logging.getLogger(__name__)

LOG_LINE_RE = re.compile(
    r"^(?:learner-(?P<learner>\d+) \| )?"
    r"ITER (?P<iteration>\d+) "
    r"LOSS (?P<loss>[^ ]+) "
    r"ACC (?P<accuracy>[^ ]+) "
    r"LR (?P<lr>[^ ]+) "
    r"TS (?P<ts>\d+)$"
)


@dataclass(frozen=True)
class MetricRecord:
    iteration: int
    loss: float
    accuracy: float
    learning_rate: float
    wallclock_ms: int
    learner_id: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "loss": self.loss,
            "accuracy": self.accuracy,
            "learning_rate": self.learning_rate,
            "wallclock_ms": self.wallclock_ms,
            "learner_id": self.learner_id,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def metric_parser(line: str) -> MetricRecord | None:
    match = LOG_LINE_RE.match(line)
    if not match:
        return None
    try:
        return MetricRecord(
            iteration=int(match.group("iteration")),
            loss=float(match.group("loss")),
            accuracy=float(match.group("accuracy")),
            learning_rate=float(match.group("lr")),
            wallclock_ms=int(match.group("ts")),
            learner_id=int(match.group("learner") or 0),
        )
    except (ValueError, OverflowError):
        return None


class LogParserRegistry:
    """Named line parsers; first match wins. Install custom parsers here."""

    def __init__(self):
        self._parsers: dict[str, Callable[[str], MetricRecord | None]] = {}
        self.register("metrics", metric_parser)

    def register(self, name: str, parser: Callable[[str], MetricRecord | None]) -> None:
        self._parsers[name] = parser

    def parse(self, line: str) -> MetricRecord | None:
        for parser in self._parsers.values():
            try:
                record = parser(line)
            except Exception:  # a broken custom parser must not kill the stream
                record = None
            if record is not None:
                return record
        return None


DEFAULT_REGISTRY = LogParserRegistry()


class StreamParser:
    """Stateful line-by-line parsing with skip counting and per-learner
    iteration monotonicity (stale re-emits after a resume are dropped)."""

    def __init__(self, registry: LogParserRegistry | None = None, monotone: bool = True):
        self._registry = registry or DEFAULT_REGISTRY
        self._monotone = monotone
        self._high_water: dict[int, int] = {}
        self.skipped = 0

    def feed(self, line: str) -> MetricRecord | None:
        record = self._registry.parse(line)
        if record is None:
            self.skipped += 1
            return None
        if self._monotone:
            last = self._high_water.get(record.learner_id, -1)
            if record.iteration <= last:
                return None
            self._high_water[record.learner_id] = record.iteration
        return record


def parse_log_stream(
    lines, registry: LogParserRegistry | None = None, monotone: bool = False
) -> tuple[list[MetricRecord], int]:
    """Eager form: (records, skipped). Never raises on any input line."""
    parser = StreamParser(registry, monotone=monotone)
    records = []
    for line in lines:
        record = parser.feed(line)
        if record is not None:
            records.append(record)
    return records, parser.skipped


CLOSE = None  # sentinel pushed to subscriber queues when the stream ends


class LogSubscription:
    def __init__(self):
        self._queue: "queue.Queue[str | None]" = queue.Queue()

    def poll(self, timeout: float | None = None):
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None

    def _offer(self, item) -> None:
        self._queue.put(item)


class _Tailer:
    def __init__(self, broker: "LogBroker", training_id: str):
        self.broker = broker
        self.training_id = training_id
        self.buffer: list[str] = []
        self.subscribers: list[LogSubscription] = []
        self.mu = threading.Lock()
        self.closed = False
        self.thread = threading.Thread(
            target=self.run, name=f"logtail-{training_id}", daemon=True
        )
        self._line_marks: dict[str, int] = {}

    def subscribe(self) -> LogSubscription:
        sub = LogSubscription()
        with self.mu:
            for line in self.buffer:
                sub._offer(line)
            if self.closed:
                sub._offer(CLOSE)
            else:
                self.subscribers.append(sub)
        return sub

    def run(self) -> None:
        store = self.broker.store
        container = self.broker.container
        prefix = f"{self.training_id}/logs/"
        quiet_polls = 0
        while True:
            emitted = 0
            try:
                keys = store.list(container, prefix)
            except StoreError:
                keys = []
            for key in keys:
                try:
                    lines = store.get(container, key).decode("utf-8", "replace").splitlines()
                except StoreError:
                    continue
                learner = key.removeprefix(prefix).removesuffix(".log")
                seen = self._line_marks.get(key, 0)
                if len(lines) < seen:
                    # checkpoint-resume truncated the blob; do not re-emit
                    self._line_marks[key] = len(lines)
                    continue
                for line in lines[seen:]:
                    self._publish(f"{learner} | {line}")
                    emitted += 1
                self._line_marks[key] = len(lines)
            if emitted == 0:
                quiet_polls += 1
            else:
                quiet_polls = 0
            if self.broker.job_terminal(self.training_id) and quiet_polls >= 2:
                break
            if self.broker.stopped.wait(self.broker.poll_interval):
                break
        with self.mu:
            self.closed = True
            for sub in self.subscribers:
                sub._offer(CLOSE)
            self.subscribers.clear()
        self.broker._tailer_done(self.training_id)

    def _publish(self, line: str) -> None:
        with self.mu:
            self.buffer.append(line)
            for sub in self.subscribers:
                sub._offer(line)


class LogBroker:
    """Per-job broadcast channels fed by single tailing tasks."""

    def __init__(
        self,
        store: BlobStore,
        coord: CoordStore,
        container: str,
        poll_interval: float = 0.15,
    ):
        self.store = store
        self.coord = coord
        self.container = container
        self.poll_interval = poll_interval
        self.stopped = threading.Event()
        self._mu = threading.Lock()
        self._tailers: dict[str, _Tailer] = {}

    def job_exists(self, training_id: str) -> bool:
        return self.coord.exists(status_path(training_id))

    def job_terminal(self, training_id: str) -> bool:
        try:
            raw, _ = self.coord.read(status_path(training_id))
        except NotFoundError:
            return True
        try:
            return JobState(raw.decode()) in TERMINAL_JOB_STATES
        except ValueError:
            return True

    def subscribe(self, training_id: str) -> LogSubscription:
        with self._mu:
            tailer = self._tailers.get(training_id)
            if tailer is None or tailer.closed:
                tailer = _Tailer(self, training_id)
                self._tailers[training_id] = tailer
                tailer.thread.start()
            return tailer.subscribe()

    def _tailer_done(self, training_id: str) -> None:
        with self._mu:
            self._tailers.pop(training_id, None)

    def close(self) -> None:
        self.stopped.set()
