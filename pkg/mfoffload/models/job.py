"""Per-task state of the discrete-event queue simulation."""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class JobPhase(str, Enum):
    TRANSMITTING = "transmitting"
    IN_POOL = "in_pool"
    LOCAL = "local"
    DONE = "done"


# Allowed phase transitions
_NEXT_PHASE = {
    JobPhase.TRANSMITTING: {JobPhase.IN_POOL},
    JobPhase.IN_POOL: {JobPhase.DONE},
    JobPhase.LOCAL: {JobPhase.DONE},
    JobPhase.DONE: set(),
}


@dataclass
class Job:
    id: int
    type_index: int
    offloaded: bool
    arrival_time: float
    phase: JobPhase
    # Transmitting / Local: absolute completion time of the phase
    completion_time: float | None = None
    # InPool: virtual-time target; remaining work = target - V
    service_target: float | None = None
    work: float = 0.0
    departure_time: float | None = None

    def advance(self, phase: JobPhase):
        if phase not in _NEXT_PHASE[self.phase]:
            raise RuntimeError(f"job {self.id}: illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase

    @property
    def sojourn(self) -> float | None:
        if self.departure_time is None:
            return None
        return self.departure_time - self.arrival_time


class EventRecord(NamedTuple):
    time: float
    job_id: int
    kind: str
    pool_size: int
    n_tot: int
    work_before: float
    work_after: float
