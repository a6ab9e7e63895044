"""Per-segment meta-attribute extraction for conditioning the denoisers.

Every series is cut into consecutive non-overlapping 32-point segments and 15
statistics are computed per segment, in the fixed order of
:data:`ATTRIBUTE_NAMES`.  A length-128 sample therefore yields a 60-element
conditioning vector.  The concatenated vectors are z-scored position-wise with
statistics fitted on the training split (:class:`AttributeStandardizer`).

Conventions that keep the numbers reproducible:

* moments use the population (1/n) definition; skewness/kurtosis are the
  adjusted Fisher-Pearson G1/G2 coefficients;
* "stability" correlates the segment against its time index (an R-squared of
  the linear trend); "periodicity" averages all 6 pairwise correlations of the
  four consecutive 8-point sub-segments;
* ratios with a denominator below 1e-12 in magnitude map to 0 instead of inf;
* entropy uses a 10-bin equal-width histogram over [min, max], in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tsdaug.data import SEGMENT_LEN, Dataset, TimeSeriesSample
from tsdaug.errors import DataError

ATTRIBUTE_NAMES = (
    "stability",
    "periodicity",
    "oscillation",
    "complexity",
    "noise",
    "entropy",
    "variability",
    "std",
    "peculiarity",
    "dynamic_range",
    "symmetry",
    "peaks",
    "slope",
    "min",
    "max",
)

N_ATTRIBUTES = len(ATTRIBUTE_NAMES)

_EPS = 1e-12

# Ridge-line peak detection parameters (see count_cwt_peaks).
CWT_WIDTHS = tuple(range(1, 11))
_RIDGE_MIN_LENGTH = 3  # ceil(len(CWT_WIDTHS) / 4)
_RIDGE_MAX_DISTANCE = 2
_RIDGE_GAP_THRESH = 2
_SNR_MIN = 1.0
_NOISE_PERCENTILE = 10.0


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; 0 when either input has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"pearson: length mismatch {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DataError("pearson: need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx < _EPS or sy < _EPS:
        return 0.0
    r = float((dx * dy).sum() / (sx * sy))
    return min(1.0, max(-1.0, r))


def shannon_entropy(seg: np.ndarray) -> float:
    """Histogram entropy in nats (10 equal-width bins over [min, max])."""
    seg = np.asarray(seg, dtype=np.float64)
    lo, hi = float(seg.min()), float(seg.max())
    if hi - lo < _EPS:
        return 0.0
    counts, _ = np.histogram(seg, bins=10, range=(lo, hi))
    p = counts[counts > 0] / seg.size
    return float(-(p * np.log(p)).sum())


def _central_moments(seg: np.ndarray) -> tuple[float, float, float]:
    d = seg - seg.mean()
    m2 = float((d**2).mean())
    m3 = float((d**3).mean())
    m4 = float((d**4).mean())
    return m2, m3, m4


def g1_skewness(seg: np.ndarray) -> float:
    """Adjusted Fisher-Pearson standardized third moment (G1)."""
    seg = np.asarray(seg, dtype=np.float64)
    n = seg.size
    m2, m3, _ = _central_moments(seg)
    if m2 < _EPS:
        return 0.0
    g1 = m3 / m2**1.5
    return float(np.sqrt(n * (n - 1)) / (n - 2) * g1)


def g2_kurtosis(seg: np.ndarray) -> float:
    """Adjusted Fisher-Pearson standardized fourth moment (G2)."""
    seg = np.asarray(seg, dtype=np.float64)
    n = seg.size
    m2, _, m4 = _central_moments(seg)
    if m2 < _EPS:
        return 0.0
    g2 = m4 / m2**2 - 3.0
    return float((n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6.0))


def ricker_wavelet(points: int, width: float) -> np.ndarray:
    """Mexican-hat wavelet sampled symmetrically around 0."""
    amp = 2.0 / (np.sqrt(3.0 * width) * np.pi**0.25)
    x = np.arange(points, dtype=np.float64) - (points - 1) / 2.0
    xsq = (x / width) ** 2
    return amp * (1.0 - xsq) * np.exp(-xsq / 2.0)


def cwt_matrix(seg: np.ndarray, widths=CWT_WIDTHS) -> np.ndarray:
    """Continuous wavelet transform: one same-length convolution per width."""
    seg = np.asarray(seg, dtype=np.float64)
    rows = [
        np.convolve(seg, ricker_wavelet(min(10 * w, seg.size), w), mode="same")
        for w in widths
    ]
    return np.stack(rows)


def _local_maxima(row: np.ndarray) -> list[int]:
    # Interior points strictly greater than both neighbors.
    return [
        i
        for i in range(1, row.size - 1)
        if row[i] > row[i - 1] and row[i] > row[i + 1]
    ]


def count_cwt_peaks(seg: np.ndarray) -> int:
    """Count ridge lines of the ricker CWT that persist across widths.

    Ridge lines are grown from the largest width toward width 1.  At each
    narrower width an open line claims the nearest unclaimed local maximum
    within ``_RIDGE_MAX_DISTANCE`` columns (distance ties resolved toward the
    smaller column; open lines are served in creation order).  A line survives
    at most ``_RIDGE_GAP_THRESH`` consecutive widths without a match.
    Unclaimed maxima seed new lines.  A line counts as a peak when it
    connects at least ``_RIDGE_MIN_LENGTH`` maxima and its largest |CWT| value
    reaches ``_SNR_MIN`` times the noise floor (the 10th percentile of |CWT|
    at the smallest width).
    """
    seg = np.asarray(seg, dtype=np.float64)
    if float(seg.std()) < _EPS:
        return 0
    mat = cwt_matrix(seg)
    maxima = [_local_maxima(mat[r]) for r in range(mat.shape[0])]

    lines: list[dict] = []  # {'points': [(row, col)], 'col': int, 'gap': int, 'open': bool}
    for col in maxima[-1]:
        lines.append({"points": [(mat.shape[0] - 1, col)], "col": col, "gap": 0, "open": True})
    for row in range(mat.shape[0] - 2, -1, -1):
        claimed: set[int] = set()
        for line in lines:
            if not line["open"]:
                continue
            best = None
            for col in maxima[row]:
                if col in claimed:
                    continue
                dist = abs(col - line["col"])
                if dist > _RIDGE_MAX_DISTANCE:
                    continue
                if best is None or dist < best[0] or (dist == best[0] and col < best[1]):
                    best = (dist, col)
            if best is None:
                line["gap"] += 1
                if line["gap"] > _RIDGE_GAP_THRESH:
                    line["open"] = False
            else:
                claimed.add(best[1])
                line["points"].append((row, best[1]))
                line["col"] = best[1]
                line["gap"] = 0
        for col in maxima[row]:
            if col not in claimed:
                lines.append({"points": [(row, col)], "col": col, "gap": 0, "open": True})

    noise = max(float(np.percentile(np.abs(mat[0]), _NOISE_PERCENTILE)), _EPS)
    count = 0
    for line in lines:
        if len(line["points"]) < _RIDGE_MIN_LENGTH:
            continue
        signal = max(abs(mat[r, c]) for r, c in line["points"])
        if signal / noise >= _SNR_MIN:
            count += 1
    return count


def linreg_slope(seg: np.ndarray) -> float:
    """Ordinary least squares slope of the values against their index."""
    seg = np.asarray(seg, dtype=np.float64)
    idx = np.arange(seg.size, dtype=np.float64)
    di = idx - idx.mean()
    denom = float((di * di).sum())
    return float((di * (seg - seg.mean())).sum() / denom)


def extract_segment_attributes(seg: np.ndarray) -> np.ndarray:
    """The 15 statistics of one 32-point segment, in ATTRIBUTE_NAMES order."""
    seg = np.asarray(seg, dtype=np.float64)
    if seg.shape != (SEGMENT_LEN,):
        raise DataError(f"segment must have shape ({SEGMENT_LEN},), got {seg.shape}")
    if not np.all(np.isfinite(seg)):
        raise DataError("segment contains non-finite values")

    mean = float(seg.mean())
    std = float(seg.std())

    idx = np.arange(SEGMENT_LEN, dtype=np.float64)
    stability = pearson(seg, idx) ** 2

    quarters = seg.reshape(4, SEGMENT_LEN // 4)
    corrs = [
        pearson(quarters[i], quarters[j])
        for i in range(4)
        for j in range(i + 1, 4)
    ]
    periodicity = float(np.mean(corrs))

    oscillation = abs(std / mean) if abs(mean) >= _EPS else 0.0
    complexity = float(np.abs(np.fft.fft(seg)).sum())
    noise = mean / std if std >= _EPS else 0.0
    variability = std / mean if abs(mean) >= _EPS else 0.0

    return np.array(
        [
            stability,
            periodicity,
            oscillation,
            complexity,
            noise,
            shannon_entropy(seg),
            variability,
            std,
            g2_kurtosis(seg),
            abs(float(seg.max()) - float(seg.min())),
            g1_skewness(seg),
            float(count_cwt_peaks(seg)),
            linreg_slope(seg),
            float(seg.min()),
            float(seg.max()),
        ]
    )


def extract_raw_attributes(sample: TimeSeriesSample | np.ndarray) -> np.ndarray:
    """Concatenated raw per-segment attributes (length 15 * L/32)."""
    values = sample.values if isinstance(sample, TimeSeriesSample) else np.asarray(sample)
    if values.size % SEGMENT_LEN != 0:
        raise DataError(f"series length {values.size} is not a multiple of {SEGMENT_LEN}")
    segments = values.reshape(-1, SEGMENT_LEN)
    return np.concatenate([extract_segment_attributes(s) for s in segments])


def raw_attribute_matrix(dataset: Dataset) -> np.ndarray:
    """Raw attribute vectors of every sample, stacked as (n, 15*L/32)."""
    return np.stack([extract_raw_attributes(s) for s in dataset.samples])


@dataclass(frozen=True)
class AttributeStandardizer:
    """Position-wise z-score over the concatenated attribute vector."""

    mean: np.ndarray
    std: np.ndarray  # degenerate positions clamped to 1

    @staticmethod
    def fit(raw: np.ndarray) -> "AttributeStandardizer":
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        std = np.where(std < _EPS, 1.0, std)
        return AttributeStandardizer(mean=mean, std=std)

    def transform(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw) - self.mean) / self.std

    @property
    def dim(self) -> int:
        return self.mean.size

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "attribute_order": list(ATTRIBUTE_NAMES),
            "segment_len": SEGMENT_LEN,
        }

    @staticmethod
    def from_json(obj: dict) -> "AttributeStandardizer":
        return AttributeStandardizer(
            mean=np.array(obj["mean"], dtype=np.float64),
            std=np.array(obj["std"], dtype=np.float64),
        )


def extract_meta_attributes(
    sample: TimeSeriesSample | np.ndarray, standardizer: AttributeStandardizer
) -> np.ndarray:
    """Standardized conditioning vector for one sample."""
    return standardizer.transform(extract_raw_attributes(sample))


def attribute_definitions() -> dict:
    """Extraction conventions, recorded alongside exported attribute tables."""
    return {
        "attribute_order": list(ATTRIBUTE_NAMES),
        "segment_len": SEGMENT_LEN,
        "stability": "squared Pearson correlation against the time index",
        "periodicity": "mean of the 6 pairwise correlations of the four 8-point sub-segments",
        "complexity": "sum of |DFT| over the full (two-sided) spectrum",
        "entropy_bins": 10,
        "moments": "population (1/n); G1/G2 adjusted Fisher-Pearson",
        "peaks": {
            "widths": list(CWT_WIDTHS),
            "min_length": _RIDGE_MIN_LENGTH,
            "max_distance": _RIDGE_MAX_DISTANCE,
            "gap_thresh": _RIDGE_GAP_THRESH,
            "min_snr": _SNR_MIN,
            "noise_percentile": _NOISE_PERCENTILE,
        },
        "degenerate_guard": 1e-12,
        "standardization": "position-wise z-score fitted on the training split",
    }
