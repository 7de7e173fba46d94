"""Global numerical settings for carnotgg."""

import os
from dataclasses import dataclass, field


def _env_int(name: str, default: int) -> int:
    try:
        return max(1, int(os.environ.get(name, default)))
    except ValueError:
        return default


@dataclass
class Settings:
    fd_step: float = 1e-5
    fd_step_second: float = 1e-4
    characteristic_threshold: float = 1e-10
    regular_gradient_floor: float = 1e-8
    bch_max_step: int = 4
    mc_chunk: int = 100_000
    eval_chunk: int = 2_000_000
    threads: int = field(default_factory=lambda: _env_int("CGG_THREADS", 1))
    log_level: str = field(default_factory=lambda: os.environ.get("CGG_LOG_LEVEL", "INFO").upper())


settings = Settings()
