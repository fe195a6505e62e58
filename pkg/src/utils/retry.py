"""Halving schedules for neighbourhoods that are shrunk until a construction succeeds."""
import math
from typing import Tuple, Type

from tenacity import RetryCallState, Retrying, retry_if_exception_type, stop_after_attempt

from utils.logger import get_logger

log = get_logger("Retry")


def halving_attempts(initial: float, floor: float) -> int:
    """Number of tries from `initial` down to `floor` when halving each time."""
    if initial <= floor:
        return 1
    return int(math.floor(math.log2(initial / floor))) + 1


def shrinking(initial: float, floor: float, retry_on: Tuple[Type[BaseException], ...],
              label: str) -> Retrying:
    """
    Retrying that re-runs its block with a halved size until the size would drop below `floor`.

    Use `attempt_scale(attempt)` inside the block for the current factor (1, 1/2, 1/4, ...).
    The last error is re-raised when the schedule is exhausted.
    """

    def report(state: RetryCallState) -> None:
        if state.outcome is not None and state.outcome.failed:
            scale = 0.5 ** state.attempt_number
            log.warning(f"⚠️ {label}: {state.outcome.exception()}; retrying at scale {scale:g}")

    return Retrying(
        retry=retry_if_exception_type(retry_on),
        stop=stop_after_attempt(halving_attempts(initial, floor)),
        after=report,
        reraise=True,
    )


def attempt_scale(attempt) -> float:
    return 0.5 ** (attempt.retry_state.attempt_number - 1)
