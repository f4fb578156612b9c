"""Fixed-partition thread helpers.

Work is always split into the same chunks whatever the worker count, and
results are reassembled in chunk order, so outputs are bit-identical for any
``REFLECTOR_THREADS`` setting.
"""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "REFLECTOR_THREADS"


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(ENV_VAR, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def chunk_slices(n, size):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def map_ordered(fn, items, workers=None):
    items = list(items)
    w = min(worker_count(workers), len(items)) if items else 1
    if w <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
