"""Job progress records for long-running commands."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import StateError

STATES = ("queued", "running", "done", "failed")

# Legal transitions; a job never moves backwards or out of a terminal state.
_NEXT = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class JobStatus:
    job_id: str
    state: str = "queued"
    progress: float = 0.0
    message: str = ""

    def __post_init__(self):
        if self.state not in STATES:
            raise StateError(f"unknown job state {self.state!r}")

    def advance(self, state: str, progress: float | None = None, message: str | None = None):
        if state not in STATES:
            raise StateError(f"unknown job state {state!r}")
        if state != self.state:
            if state not in _NEXT[self.state]:
                raise StateError(f"job cannot move {self.state} -> {state}")
            self.state = state
        if progress is not None:
            if progress < self.progress:
                raise StateError(
                    f"job progress cannot decrease: {self.progress} -> {progress}"
                )
            self.progress = min(1.0, progress)
        if message is not None:
            self.message = message
        return self
