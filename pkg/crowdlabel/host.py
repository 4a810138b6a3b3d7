import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar, Union

import numpy as np
import psutil

T = TypeVar("T")
R = TypeVar("R")


def available_threads() -> int:
    count = psutil.cpu_count(logical=True)
    return max(1, count or 1)


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return available_threads()
    return max(1, threads)


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = 1) -> List[R]:
    """
    Apply fn to every item, returning results in input order regardless of the
    number of worker threads.
    """
    work = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(work) < 2:
        return [fn(i) for i in work]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, work))


def stable_key(*parts: Union[str, int]) -> int:
    """
    64-bit integer derived from the parts' text. Used to key counter-based random
    generators so draws depend only on record identity, never on processing order.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    return int(digest, 16)


def counter_rng(*parts: Union[str, int]) -> np.random.Generator:
    """
    Philox generator keyed by the parts. The same parts always give the same
    stream, whichever thread asks and in whatever order.
    """
    return np.random.Generator(np.random.Philox(key=stable_key(*parts)))
