"""Thread-safe in-memory session registry with TTL eviction and undo stacks."""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from clickseg.engine import SessionState
from clickseg.types import ClickHistory, ProbMask


@dataclass
class _Snapshot:
    history: ClickHistory
    mask: ProbMask
    stage2_ms: list[float]


@dataclass
class SessionRecord:
    """One live annotation session plus its bookkeeping."""

    session_id: str
    state: SessionState
    last_active: float
    undo_stack: list[_Snapshot] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self, max_depth: int) -> None:
        """Push the current mutable state onto the undo stack."""
        snap = _Snapshot(
            history=self.state.history.copy(),
            mask=ProbMask(self.state.mask.data.copy()),
            stage2_ms=list(self.state.stage2_ms),
        )
        self.undo_stack.append(snap)
        while len(self.undo_stack) > max_depth:
            self.undo_stack.pop(0)

    def undo(self) -> bool:
        """Restore the most recent snapshot; returns False when empty."""
        if not self.undo_stack:
            return False
        snap = self.undo_stack.pop()
        self.state.history = snap.history
        self.state.mask = snap.mask
        self.state.stage2_ms = snap.stage2_ms
        return True


class SessionStore:
    """Registry mapping session ids to records.

    Map-level operations take the store lock; per-session mutation is
    serialized by each record's own lock so independent sessions proceed
    concurrently.
    """

    def __init__(self, *, ttl_seconds: float = 1800.0, max_undo: int = 20) -> None:
        if ttl_seconds <= 0:
            raise ValueError("ttl_seconds must be positive")
        if max_undo < 1:
            raise ValueError("max_undo must be at least 1")
        self.ttl_seconds = float(ttl_seconds)
        self.max_undo = int(max_undo)
        self._records: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def create(self, state: SessionState, *, now: float | None = None) -> SessionRecord:
        now = time.monotonic() if now is None else now
        record = SessionRecord(
            session_id=uuid.uuid4().hex, state=state, last_active=now
        )
        with self._lock:
            self._evict_locked(now)
            self._records[record.session_id] = record
        return record

    def get(self, session_id: str, *, now: float | None = None) -> SessionRecord | None:
        now = time.monotonic() if now is None else now
        with self._lock:
            self._evict_locked(now)
            record = self._records.get(session_id)
            if record is not None:
                record.last_active = now
            return record

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._records.pop(session_id, None) is not None

    def _evict_locked(self, now: float) -> None:
        stale = [
            sid
            for sid, rec in self._records.items()
            if now - rec.last_active > self.ttl_seconds
        ]
        for sid in stale:
            del self._records[sid]
