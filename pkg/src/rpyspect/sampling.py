"""Sampling strategies over the filtered CR occurrence stream.

Every sampler is single-pass and retains at most its sample (CLUSTER: at
most the chosen year's occurrences), which is what keeps huge imports
memory-bounded. Randomness comes from ``random.Random`` (MT19937), whose
algorithm CPython freezes across versions, so a (seed, stream order) pair
reproduces a sample bit-for-bit on any platform.
"""

from __future__ import annotations

import math
import random
from typing import Iterable

from .errors import DomainError, EmptySampleError, OffsetTooLargeError
from .model import CitingRecord, Occurrence

MODES = ("NONE", "RANDOM", "SYSTEMATIC", "CLUSTER")


class Sampler:
    """Streaming selection interface used by the import pipeline.

    ``offer`` feeds one occurrence; ``wants_more`` lets the reader stop
    early once the sample cannot grow; ``retained`` reports how many
    occurrences are currently held (the memory-contract instrumentation
    reads it); ``result`` returns the selection.
    """

    mode = "NONE"

    def offer(self, occ: Occurrence) -> None:
        raise NotImplementedError

    def wants_more(self) -> bool:
        return True

    def retained(self) -> int:
        raise NotImplementedError

    def result(self) -> list[Occurrence]:
        raise NotImplementedError


class NoneSampler(Sampler):
    """Identity selection, optionally truncated to the first ``limit``
    occurrences (limit 0 = unlimited)."""

    mode = "NONE"

    def __init__(self, limit: int = 0):
        if limit < 0:
            raise DomainError("limit must be >= 0")
        self.limit = limit
        self._kept: list[Occurrence] = []

    def offer(self, occ: Occurrence) -> None:
        if self.wants_more():
            self._kept.append(occ)

    def wants_more(self) -> bool:
        return self.limit == 0 or len(self._kept) < self.limit

    def retained(self) -> int:
        return len(self._kept)

    def result(self) -> list[Occurrence]:
        return self._kept


class RandomSampler(Sampler):
    """Reservoir sampling (algorithm R): a simple random sample without
    replacement of size min(n, population), in one pass."""

    mode = "RANDOM"

    def __init__(self, n: int, seed: int = 0):
        if n < 1:
            raise DomainError("random sample size must be >= 1")
        self.n = n
        self._rng = random.Random(seed)
        self._seen = 0
        self._reservoir: list[Occurrence] = []

    def offer(self, occ: Occurrence) -> None:
        i = self._seen
        self._seen += 1
        if i < self.n:
            self._reservoir.append(occ)
            return
        # Classic replacement rule: keep the newcomer with probability n/(i+1).
        j = self._rng.randrange(i + 1)
        if j < self.n:
            self._reservoir[j] = occ

    def retained(self) -> int:
        return len(self._reservoir)

    def result(self) -> list[Occurrence]:
        return self._reservoir


class SystematicSampler(Sampler):
    """Equidistant selection: positions offset, offset+step, ... with
    step = max(1, floor(total / n)), truncated to at most n picks.

    ``total`` must be the exact occurrence count the stream will yield
    (the import pipeline establishes it with a prior counting pass).
    """

    mode = "SYSTEMATIC"

    def __init__(self, n: int, total: int, offset: int = 0):
        if n < 1:
            raise DomainError("systematic sample size must be >= 1")
        if total < 1:
            raise DomainError("systematic sampling requires total >= 1")
        if offset < 0:
            raise DomainError("offset must be >= 0")
        self.n = n
        self.step = max(1, total // n)
        if offset >= self.step:
            raise OffsetTooLargeError(
                f"offset {offset} >= step {self.step} (total {total}, n {n})"
            )
        self.offset = offset
        self._pos = 0
        self._kept: list[Occurrence] = []

    def offer(self, occ: Occurrence) -> None:
        pos = self._pos
        self._pos += 1
        if len(self._kept) >= self.n:
            return
        if pos >= self.offset and (pos - self.offset) % self.step == 0:
            self._kept.append(occ)

    def wants_more(self) -> bool:
        return len(self._kept) < self.n

    def retained(self) -> int:
        return len(self._kept)

    def result(self) -> list[Occurrence]:
        return self._kept


class ClusterSampler(Sampler):
    """Selects every occurrence whose citing year equals one year drawn
    uniformly from [lo, hi]."""

    mode = "CLUSTER"

    def __init__(self, py_lo: int, py_hi: int, seed: int = 0):
        if py_lo > py_hi:
            raise DomainError(f"empty citing-year range [{py_lo}, {py_hi}]")
        self.chosen_year = random.Random(seed).randint(py_lo, py_hi)
        self._kept: list[Occurrence] = []

    def offer(self, occ: Occurrence) -> None:
        if occ.py == self.chosen_year:
            self._kept.append(occ)

    def retained(self) -> int:
        return len(self._kept)

    def result(self) -> list[Occurrence]:
        return self._kept


def random_sample(stream: Iterable[Occurrence], n: int, rng_seed: int = 0) -> list[Occurrence]:
    """Simple random sample without replacement of size min(n, population)."""
    sampler = RandomSampler(n, rng_seed)
    for occ in stream:
        sampler.offer(occ)
    return sampler.result()


def systematic_sample(
    stream: Iterable[Occurrence], n: int, total: int, offset: int = 0
) -> list[Occurrence]:
    """Every step-th occurrence starting at ``offset`` (step = floor(total/n))."""
    sampler = SystematicSampler(n, total, offset)
    for occ in stream:
        if not sampler.wants_more():
            break
        sampler.offer(occ)
    return sampler.result()


def cluster_sample(
    records: Iterable[CitingRecord], py_range: tuple[int, int], rng_seed: int = 0
) -> list[Occurrence]:
    """All CR occurrences of one randomly chosen citing year in py_range."""
    sampler = ClusterSampler(py_range[0], py_range[1], rng_seed)
    for rec in records:
        for cr in rec.crs:
            sampler.offer(Occurrence(cr, rec.py))
    out = sampler.result()
    if not out:
        raise EmptySampleError(
            f"cluster sample is empty: citing year {sampler.chosen_year} has no records"
        )
    return out


def removal_threshold(threshold_full: int, ncr_full: int, ncr_sample: int) -> int:
    """Rule-of-thumb removal threshold for a sample, scaled down from the
    population threshold by the population/sample CR ratio.

    Rounds half away from zero on the real-valued quotient.
    """
    if ncr_sample < 1 or ncr_full < ncr_sample:
        raise DomainError(
            f"need ncr_full >= ncr_sample >= 1, got {ncr_full}, {ncr_sample}"
        )
    if threshold_full < 0:
        raise DomainError("threshold_full must be >= 0")
    x = threshold_full / (ncr_full / ncr_sample)
    return int(math.floor(x + 0.5))
