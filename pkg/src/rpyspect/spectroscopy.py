"""Spectrogram computation and sample-vs-reference comparison.

All functions are pure over immutable datasets. Median windows are
truncated at the series edges rather than zero-padded (padding would
manufacture spurious positive deviations there); an even-length window's
median is the mean of its two central values.
"""

from __future__ import annotations

import statistics

from .errors import DomainError, EmptyDatasetError
from .model import CRVariant, Dataset, Spectrogram, SpectroRow


def compute_spectrogram(dataset: Dataset, median_range: int = 2) -> Spectrogram:
    """Per-year NCR totals plus the deviation from the centered median.

    Covers every year from the smallest to the largest RPY in the dataset
    (gap years appear with ncr 0). median_range is the number of
    neighboring years on each side of the window, so 2 gives the five-year
    median deviation. Variants without an RPY are excluded.
    """
    if median_range < 0:
        raise DomainError("median_range must be >= 0")
    counts: dict[int, int] = {}
    for v in dataset.variants.values():
        if v.rpy is not None:
            counts[v.rpy] = counts.get(v.rpy, 0) + v.ncr
    if not counts:
        raise EmptyDatasetError("no variant carries a reference publication year")
    lo, hi = min(counts), max(counts)
    years = list(range(lo, hi + 1))
    series = [counts.get(y, 0) for y in years]
    rows = []
    for i, y in enumerate(years):
        window = series[max(0, i - median_range) : i + median_range + 1]
        dev = series[i] - statistics.median(window)
        rows.append(SpectroRow(rpy=y, ncr=series[i], median_dev=float(dev)))
    return Spectrogram(rows=tuple(rows))


def _shared_window(*specs: Spectrogram) -> tuple[int, int]:
    for s in specs:
        if not s.rows:
            raise EmptyDatasetError("spectrogram has no rows")
    lo = max(s.rows[0].rpy for s in specs)
    hi = min(s.rows[-1].rpy for s in specs)
    if lo > hi:
        raise DomainError("spectrograms share no RPY window")
    return lo, hi


def scale_factor(sample: Spectrogram, reference: Spectrogram) -> float:
    """f = (sample peak NCR) / (reference peak NCR) over the shared year
    window; dividing sample rows by f lifts them to reference scale."""
    lo, hi = _shared_window(sample, reference)
    ref_max = reference.max_ncr(lo, hi)
    if ref_max == 0:
        raise ZeroDivisionError("reference spectrogram peak NCR is 0")
    return sample.max_ncr(lo, hi) / ref_max


def spectrogram_diff(
    a: Spectrogram, b: Spectrogram, reference: Spectrogram
) -> list[tuple[int, float]]:
    """Per-year difference between two spectrograms after both are scaled
    to the reference; years outside the shared window are omitted."""
    lo, hi = _shared_window(a, b, reference)
    f_a = scale_factor(a, reference)
    f_b = scale_factor(b, reference)
    if f_a == 0 or f_b == 0:
        raise ZeroDivisionError("sample spectrogram peak NCR is 0 in the shared window")
    ncr_a = a.ncr_by_year()
    ncr_b = b.ncr_by_year()
    return [
        (y, ncr_a.get(y, 0) / f_a - ncr_b.get(y, 0) / f_b) for y in range(lo, hi + 1)
    ]


def top_crs(dataset: Dataset, rpy: int, k: int) -> list[CRVariant]:
    """The year's variants ranked by NCR descending (ties: smallest key),
    at most k of them."""
    if k < 1:
        raise DomainError("k must be >= 1")
    ranked = sorted(
        (v for v in dataset.variants.values() if v.rpy == rpy),
        key=lambda v: (-v.ncr, v.key),
    )
    return ranked[:k]


def n_pct(dataset: Dataset, variant: CRVariant, n_pct_range: int = 0) -> float:
    """The variant's share of the NCR mass within ±n_pct_range years of
    its own RPY (range 0: its share of its year). Variants without an RPY
    are compared against the other undated variants."""
    if n_pct_range < 0:
        raise DomainError("n_pct_range must be >= 0")
    if variant.key not in dataset.variants:
        raise DomainError(f"variant {variant.key!r} not in dataset")
    if variant.rpy is None:
        denom = sum(v.ncr for v in dataset.variants.values() if v.rpy is None)
    else:
        lo, hi = variant.rpy - n_pct_range, variant.rpy + n_pct_range
        denom = sum(
            v.ncr
            for v in dataset.variants.values()
            if v.rpy is not None and lo <= v.rpy <= hi
        )
    return variant.ncr / denom
