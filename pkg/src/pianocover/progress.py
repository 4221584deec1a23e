"""Progress reporting for long-running toolkit stages."""

from dataclasses import dataclass
from typing import Callable, Literal, Optional


@dataclass
class ProgressUpdate:
    """Represents a progress update during dataset generation or training."""

    stage: Literal["generating", "training"]
    percent: float
    message: str
    epoch: Optional[int] = None
    loss: Optional[float] = None

    def __str__(self) -> str:
        return f"[{self.stage}] {self.percent:.1f}% - {self.message}"


ProgressCallback = Callable[[ProgressUpdate], None]
