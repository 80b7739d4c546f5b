"""Shared utilities for the simulation modules: seeding, capacity checks and worker pools."""

import hashlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from threading import Lock

import numpy as np

from config import MAX_TABLE_SIZE
from optics.errors import CapacityError


def derive_seed(seed, name):
    """Derive a 64-bit subsystem seed from a master seed and a subsystem name.

    Deterministic across processes (unlike ``hash()``).
    """
    digest = hashlib.sha256(f"{int(seed)}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed, name=None):
    """Return a numpy Generator for ``seed`` (optionally namespaced by ``name``)."""
    if name is not None:
        seed = derive_seed(seed, name)
    return np.random.default_rng(seed)


def check_capacity(size, what, limit=None):
    """Raise CapacityError when a dense table of ``size`` entries exceeds the limit."""
    limit = MAX_TABLE_SIZE if limit is None else limit
    if size > limit:
        raise CapacityError(
            f"{what} needs {size} entries, above the capacity limit of {limit}"
        )
    return size


def parallel_map(fn, items, workers=1, progress_callback=None):
    """Apply ``fn`` to every item, returning results in input order.

    Args:
        fn: Callable applied to each item.
        items: Sequence of inputs.
        workers: Thread-pool size; ``<= 1`` runs sequentially.
        progress_callback: Optional callable(done, total).

    Results are written into pre-indexed slots, so the output order (and any
    reduction over it) does not depend on completion order.
    """
    items = list(items)
    total = len(items)
    results = [None] * total
    if workers <= 1 or total <= 1:
        for i, item in enumerate(items):
            results[i] = fn(item)
            if progress_callback:
                progress_callback(i + 1, total)
        return results

    done = 0
    lock = Lock()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): i for i, item in enumerate(items)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            with lock:
                done += 1
                current = done
            if progress_callback:
                progress_callback(current, total)
    return results
