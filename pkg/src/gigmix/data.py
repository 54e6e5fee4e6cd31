"""Sample ingest, normalized histograms and their CSV forms."""

import csv
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateRangeError, EmptyDatasetError, InsufficientDataError

log = logging.getLogger(__name__)

MIN_SAMPLES = 10
MIN_BINS = 10
MAX_BINS = 512


class LoadedSamples(NamedTuple):
    values: np.ndarray
    rejected: int


def load_samples(path):
    """
    Read one positive value per row from a CSV file.

    A non-numeric first row is taken as a header. Later rows that are
    non-numeric or not strictly positive are dropped and counted in
    ``rejected``. Only the first column is read.
    """
    values = []
    rejected = 0
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                v = float(row[0])
            except ValueError:
                if i == 0:
                    continue
                rejected += 1
                continue
            if math.isfinite(v) and v > 0:
                values.append(v)
            else:
                rejected += 1
    if rejected:
        log.warning("%s: rejected %d rows (non-numeric or non-positive)", path, rejected)
    if not values:
        raise EmptyDatasetError(f"{path}: no valid positive values")
    return LoadedSamples(np.array(values), rejected)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    density: np.ndarray

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_bins(self):
        return len(self.counts)

    def median(self):
        """Median of the binned data, interpolated inside its bin."""
        cum = np.cumsum(self.counts)
        half = 0.5 * self.total
        i = int(np.searchsorted(cum, half))
        before = cum[i - 1] if i > 0 else 0
        frac = (half - before) / self.counts[i] if self.counts[i] else 0.5
        return float(self.edges[i] + frac * (self.edges[i + 1] - self.edges[i]))

    @classmethod
    def from_counts(cls, edges, counts):
        edges = np.asarray(edges, dtype=float)
        counts = np.asarray(counts, dtype=np.int64)
        if edges.ndim != 1 or len(edges) != len(counts) + 1 or len(counts) == 0:
            raise ValueError("edges must have one more entry than counts")
        if np.any(np.diff(edges) <= 0) or edges[0] < 0:
            raise ValueError("edges must be nonnegative and strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        total = int(counts.sum())
        if total <= 0:
            raise EmptyDatasetError("histogram holds no samples")
        density = counts / (total * np.diff(edges))
        return cls(edges, counts, total, density)


def freedman_diaconis_bins(samples):
    x = np.asarray(samples, dtype=float)
    q75, q25 = np.percentile(x, [75, 25])
    width = 2.0 * (q75 - q25) / len(x) ** (1.0 / 3.0)
    span = x.max() - x.min()
    if width <= 0:
        return MAX_BINS
    return int(min(MAX_BINS, max(MIN_BINS, math.ceil(span / width))))


def build_histogram(samples, bins=None):
    """
    Equal-width histogram over ``[min, max]`` of the samples.

    Bins are right-open except the last, which is closed, so every sample
    lands in exactly one bin. Without ``bins`` the count follows the
    Freedman-Diaconis rule clamped to ``[MIN_BINS, MAX_BINS]``.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {len(x)}")
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        raise DegenerateRangeError("all samples are equal; the histogram range is empty")
    if bins is None:
        bins = freedman_diaconis_bins(x)
    bins = int(bins)
    if bins < 1:
        raise ValueError("bins must be positive")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram.from_counts(edges, counts)


def write_histogram_csv(hist, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left_edge", "right_edge", "count", "density"])
        for a, b, c, d in zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density):
            w.writerow([repr(float(a)), repr(float(b)), int(c), repr(float(d))])


def read_histogram_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    edges = [float(r["left_edge"]) for r in rows] + [float(rows[-1]["right_edge"])]
    counts = [int(r["count"]) for r in rows]
    return Histogram.from_counts(edges, counts)


def write_samples_csv(values, labels, path):
    """Rows of ``value,label``; pass ``labels=None`` to write -1 labels."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "label"])
        if labels is None:
            labels = np.full(len(values), -1)
        for v, lab in zip(values, labels):
            w.writerow([repr(float(v)), int(lab)])
