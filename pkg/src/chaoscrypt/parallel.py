"""Process-pool fan-out for the exhaustive enumerations."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from .errors import UsageError


def worker_count(workers: int | None = None) -> int:
    """Worker processes to use; ``CHAOSCRYPT_THREADS`` caps the count (0 means one per CPU)."""
    env = os.environ.get("CHAOSCRYPT_THREADS")
    limit = os.cpu_count() or 1
    if env not in (None, ""):
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"CHAOSCRYPT_THREADS must be an integer, got {env!r}") from None
        if value > 0:
            limit = value
    if workers is None or workers <= 0:
        return limit
    return min(workers, limit)


def run_chunks(job, chunks: list[tuple], workers: int = 1) -> list:
    """Map ``job`` over ``chunks`` in order, in worker processes when more than one is allowed."""
    if workers <= 1 or len(chunks) <= 1:
        return [job(chunk) for chunk in chunks]
    with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
        return list(pool.map(job, chunks))
