"""Bounded-parallel fetching with per-host serialization and rate limits.

Hosts are never hit concurrently and never faster than the configured
request rate; distinct hosts run in parallel up to the pool size. Results
are returned keyed by item, so callers stay order-independent.
"""
from __future__ import annotations

import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar
from urllib.parse import urlsplit

T = TypeVar("T")
R = TypeVar("R")


def host_of(uri: str) -> str:
    return (urlsplit(uri).hostname or "").lower()


class HostPacer:
    """Serializes requests per host and enforces a minimum spacing."""

    def __init__(self, per_host_rps: float = 0.0, clock=None):
        self.min_interval = 1.0 / per_host_rps if per_host_rps > 0 else 0.0
        self.clock = clock
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._last: dict[str, float] = {}
        self._guard = threading.Lock()

    def _lock_for(self, host: str) -> threading.Lock:
        with self._guard:
            return self._locks[host]

    def run(self, host: str, fn: Callable[[], R]) -> R:
        with self._lock_for(host):
            if self.min_interval > 0:
                now = time.monotonic()
                wait = self._last.get(host, 0.0) + self.min_interval - now
                if wait > 0:
                    if self.clock is not None:
                        self.clock.sleep(wait)
                    else:
                        time.sleep(wait)
                self._last[host] = max(now, self._last.get(host, 0.0) + self.min_interval)
            return fn()


def map_by_host(
    items: Iterable[T],
    fn: Callable[[T], R],
    host_key: Callable[[T], str],
    concurrency: int = 8,
    pacer: HostPacer | None = None,
) -> dict[T, R]:
    """Apply ``fn`` to every item with bounded parallelism.

    Items sharing a host run serially through the pacer. The first raised
    exception propagates after in-flight work drains.
    """
    items = list(items)
    pacer = pacer or HostPacer()
    results: dict[T, R] = {}
    if concurrency <= 1 or len(items) <= 1:
        for item in items:
            results[item] = pacer.run(host_key(item), lambda it=item: fn(it))
        return results
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        futures = {
            item: pool.submit(pacer.run, host_key(item), lambda it=item: fn(it))
            for item in items
        }
        for item, future in futures.items():
            results[item] = future.result()
    return results
