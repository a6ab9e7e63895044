"""Dataset ingestion, windowing, normalization and train/validation splitting.

Two on-disk layouts are supported:

* ``ucr_tsv``: tab-separated, one sample per row, column 0 is the target and
  columns 1..d the series values (the public UCR archive layout).
* ``csv``: comma-separated with a header row ``target,v0,v1,...``.

All series are univariate.  Normalization is a single z-score affine map per
dataset, fitted on the training split only, using the population (1/n)
standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from tsdaug.errors import ConfigError, DataError

SEGMENT_LEN = 32


@dataclass(frozen=True)
class TaskSpec:
    """Prediction task attached to a dataset."""

    kind: str  # "classification" | "regression"
    n_classes: int | None = None

    def __post_init__(self):
        if self.kind not in ("classification", "regression"):
            raise ConfigError(f"unknown task kind {self.kind!r}")
        if self.kind == "classification" and self.n_classes is not None and self.n_classes < 2:
            raise ConfigError("classification needs at least 2 classes")
        if self.kind == "regression" and self.n_classes is not None:
            raise ConfigError("regression task takes no n_classes")

    @property
    def is_classification(self) -> bool:
        return self.kind == "classification"

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.n_classes is not None:
            out["n_classes"] = self.n_classes
        return out

    @staticmethod
    def from_json(obj: dict) -> "TaskSpec":
        return TaskSpec(kind=obj["kind"], n_classes=obj.get("n_classes"))


@dataclass(frozen=True)
class TimeSeriesSample:
    """One fixed-length univariate series plus its target."""

    values: np.ndarray  # (L,) float64
    target: float  # class index (integer-valued) or real scalar
    id: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise DataError(f"sample {self.id!r}: values must be 1-D")


@dataclass(frozen=True)
class Normalizer:
    """Affine map x -> (x - mean) / std shared by every split of a dataset."""

    mean: float
    std: float  # clamped to 1.0 when the fitted std is degenerate

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def to_json(self) -> dict:
        return {"mean": self.mean, "std": self.std}

    @staticmethod
    def from_json(obj: dict) -> "Normalizer":
        return Normalizer(mean=obj["mean"], std=obj["std"])


@dataclass(frozen=True)
class Dataset:
    samples: tuple[TimeSeriesSample, ...]
    task: TaskSpec
    normalizer: Normalizer | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def length(self) -> int:
        if not self.samples:
            raise DataError("empty dataset has no sample length")
        return len(self.samples[0].values)

    def values_matrix(self) -> np.ndarray:
        """All series stacked as an (n, L) float64 matrix."""
        return np.stack([s.values for s in self.samples])

    def targets(self) -> np.ndarray:
        if self.task.is_classification:
            return np.array([int(s.target) for s in self.samples], dtype=np.int64)
        return np.array([s.target for s in self.samples], dtype=np.float64)


@dataclass(frozen=True)
class SplitSpec:
    val_fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")


def _parse_matrix(path, sep: str, skip_header: bool) -> list[list[float]]:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if skip_header and lineno == 0:
                continue
            line = line.strip()
            if not line:
                continue
            row_index = len(rows)
            cells = line.split(sep)
            row = []
            for col, cell in enumerate(cells):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {row_index}, column {col}: non-numeric cell {cell.strip()!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(f"row {row_index}, column {col}: non-finite value {cell.strip()!r}")
                row.append(value)
            if rows and len(row) != len(rows[0]):
                raise DataError(
                    f"row {row_index}: expected {len(rows[0])} columns, found {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no samples")
    return rows


def _map_class_targets(raw: list[float], declared: int | None) -> tuple[list[int], int]:
    labels = sorted({t for t in raw})
    for t in labels:
        if t != int(t):
            raise DataError(f"non-integer class label {t!r}")
    if declared is not None and all(0 <= int(t) < declared for t in labels):
        # Already canonical; keep as-is so save/load round-trips exactly.
        return [int(t) for t in raw], declared
    mapping = {t: i for i, t in enumerate(labels)}
    n_classes = len(mapping)
    if declared is not None and n_classes > declared:
        raise DataError(f"found {n_classes} distinct labels but task declares {declared}")
    return [mapping[t] for t in raw], (declared or n_classes)


def load_dataset(path, format: str, task: TaskSpec, scale_targets: bool = False) -> Dataset:
    """Read a delimited file into a raw (unnormalized, unwindowed) Dataset.

    Row order is preserved.  ``scale_targets`` min-max scales regression
    targets into [0, 1].
    """
    if format == "ucr_tsv":
        rows = _parse_matrix(path, sep="\t", skip_header=False)
    elif format == "csv":
        rows = _parse_matrix(path, sep=",", skip_header=True)
    else:
        raise ConfigError(f"unknown dataset format {format!r}")
    if len(rows[0]) < 2:
        raise DataError(f"{path}: rows need a target plus at least one value")

    raw_targets = [row[0] for row in rows]
    if task.is_classification:
        targets, n_classes = _map_class_targets(raw_targets, task.n_classes)
        task = TaskSpec("classification", n_classes)
        target_values: list[float] = [float(t) for t in targets]
    else:
        target_values = list(raw_targets)
        if scale_targets:
            lo, hi = min(target_values), max(target_values)
            span = hi - lo
            if span <= 0:
                target_values = [0.0 for _ in target_values]
            else:
                target_values = [(t - lo) / span for t in target_values]

    samples = [
        TimeSeriesSample(values=np.array(row[1:], dtype=np.float64), target=t, id=f"row{i}")
        for i, (row, t) in enumerate(zip(rows, target_values))
    ]
    return Dataset(samples=tuple(samples), task=task)


def save_dataset(dataset: Dataset, path, format: str) -> None:
    """Inverse of :func:`load_dataset` (values written at full precision)."""
    if format not in ("ucr_tsv", "csv"):
        raise ConfigError(f"unknown dataset format {format!r}")
    sep = "\t" if format == "ucr_tsv" else ","
    with open(path, "w", encoding="utf-8") as fh:
        if format == "csv":
            fh.write("target" + sep + sep.join(f"v{i}" for i in range(dataset.length)) + "\n")
        for s in dataset.samples:
            target = int(s.target) if dataset.task.is_classification else repr(float(s.target))
            fh.write(str(target) + sep + sep.join(repr(float(v)) for v in s.values) + "\n")


def fit_window(sample: TimeSeriesSample, length: int) -> TimeSeriesSample:
    """Truncate to the first ``length`` points, or right-pad with the last value."""
    if length < SEGMENT_LEN or length % SEGMENT_LEN != 0:
        raise ConfigError(f"window length {length} must be a positive multiple of {SEGMENT_LEN}")
    values = sample.values
    if len(values) >= length:
        out = values[:length].copy()
    else:
        out = np.concatenate([values, np.full(length - len(values), values[-1])])
    return replace(sample, values=out)


def fit_window_dataset(dataset: Dataset, length: int) -> Dataset:
    return replace(dataset, samples=tuple(fit_window(s, length) for s in dataset.samples))


def fit_normalizer(train: Dataset) -> Normalizer:
    values = train.values_matrix()
    mean = float(values.mean())
    std = float(values.std())  # population (1/n)
    if std < 1e-12:
        std = 1.0
    return Normalizer(mean=mean, std=std)


def zscore(dataset: Dataset, normalizer: Normalizer | None = None) -> Dataset:
    """Apply a z-score map; fits the map on ``dataset`` itself when none is given.

    Fit the normalizer on the training split and pass it in when transforming
    validation or test data.
    """
    if normalizer is None:
        normalizer = fit_normalizer(dataset)
    samples = tuple(
        replace(s, values=normalizer.apply(s.values)) for s in dataset.samples
    )
    return replace(dataset, samples=samples, normalizer=normalizer)


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/validation split.

    Classification splits are stratified: per-class proportions are preserved
    within one sample.
    """
    n = len(dataset)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    rng = np.random.Generator(np.random.PCG64(spec.seed))

    if dataset.task.is_classification:
        by_class: dict[int, list[int]] = {}
        for i, s in enumerate(dataset.samples):
            by_class.setdefault(int(s.target), []).append(i)
        val_idx: list[int] = []
        for label in sorted(by_class):
            idx = np.array(by_class[label])
            if len(idx) < 2:
                raise DataError(f"class {label} has {len(idx)} sample(s); cannot stratify")
            n_val = int(round(len(idx) * spec.val_fraction))
            n_val = min(max(n_val, 0), len(idx) - 1)
            perm = rng.permutation(len(idx))
            val_idx.extend(idx[perm[:n_val]].tolist())
        if not val_idx:  # tiny datasets: keep validation non-empty
            largest = max(sorted(by_class), key=lambda c: len(by_class[c]))
            val_idx = [by_class[largest][0]]
    else:
        n_val = int(round(n * spec.val_fraction))
        n_val = min(max(n_val, 1), n - 1)
        perm = rng.permutation(n)
        val_idx = perm[:n_val].tolist()

    val_set = set(val_idx)
    train_samples = tuple(s for i, s in enumerate(dataset.samples) if i not in val_set)
    val_samples = tuple(dataset.samples[i] for i in sorted(val_set))
    return (
        replace(dataset, samples=train_samples),
        replace(dataset, samples=val_samples),
    )
