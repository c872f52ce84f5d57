"""Resource limits shared by the unfolding, oracle and CLI layers."""
import os
from dataclasses import dataclass, replace
from typing import Optional

ENV_ALT_CAP = "GODUNF_ALT_CAP"
ENV_STATE_BOUND = "GODUNF_STATE_BOUND"
ENV_MAX_EVENTS = "GODUNF_MAX_EVENTS"


def _env_count(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    return value


@dataclass(slots=True, frozen=True)
class Limits:
    """
    Caps guarding every exhaustive procedure.
    Exceeding any of them raises CapExceededError naming the cap.
    """
    state_bound: int = 1_000_000
    alt_cap: int = 10_000
    max_events: int = 200_000
    iteration_cap: int = 1_000
    enumeration_cap: int = 100_000

    @classmethod
    def from_env(cls) -> 'Limits':
        """Defaults overridden by GODUNF_* environment variables."""
        base = cls()
        return cls(
            state_bound=_env_count(ENV_STATE_BOUND, base.state_bound),
            alt_cap=_env_count(ENV_ALT_CAP, base.alt_cap),
            max_events=_env_count(ENV_MAX_EVENTS, base.max_events),
        )

    def override(self, state_bound: Optional[int] = None,
                 alt_cap: Optional[int] = None,
                 max_events: Optional[int] = None) -> 'Limits':
        """Return a copy with the given (non-None) caps replaced."""
        changes = {
            name: value for name, value in (
                ('state_bound', state_bound),
                ('alt_cap', alt_cap),
                ('max_events', max_events),
            ) if value is not None
        }
        for name, value in changes.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        return replace(self, **changes)


DEFAULT_LIMITS = Limits()
