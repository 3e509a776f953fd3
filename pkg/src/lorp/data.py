"""Datasets: CSV ingestion, synthetic generation, content digests."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, InvalidInputError


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix x (n rows, m columns) and response vector y."""

    x: np.ndarray
    y: np.ndarray
    x_names: tuple[str, ...] = field(default_factory=tuple)
    y_name: str = "y"

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise InvalidInputError(f"x must be (n,) or (n, m), got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise InvalidInputError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if y.shape[0] < 2:
            raise InvalidInputError("need at least 2 observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInputError("non-finite values in the dataset")
        names = tuple(self.x_names) if self.x_names else tuple(f"x{j}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise InvalidInputError(f"{len(names)} column names for {x.shape[1]} columns")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    def sha256(self) -> str:
        """Digest of the numeric content (names excluded)."""
        h = hashlib.sha256()
        h.update(f"{self.n}x{self.m}".encode())
        h.update(np.ascontiguousarray(self.x).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()


def load_csv(path: str, target: str) -> Dataset:
    """Read a headed, all-numeric CSV; ``target`` names the response column.

    Every other column becomes a covariate, in file order.  Structural
    problems (missing header, ragged rows, non-numeric cells, fewer than
    two data rows) raise DataError naming the offending row and column.
    """
    try:
        with open(path, newline="") as fh:
            return _parse_csv(fh, target, path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def parse_csv_text(text: str, target: str, label: str = "<string>") -> Dataset:
    return _parse_csv(io.StringIO(text), target, label)


def _parse_csv(fh, target: str, label: str) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{label}: empty file") from None
    header = [h.strip() for h in header]
    if target not in header:
        raise DataError(f"{label}: no column named {target!r} in header {header}")
    if len(set(header)) != len(header):
        raise DataError(f"{label}: duplicate column names in header")
    t_idx = header.index(target)
    x_cols = [j for j in range(len(header)) if j != t_idx]
    if not x_cols:
        raise DataError(f"{label}: no covariate columns besides the target")
    xs: list[list[float]] = []
    ys: list[float] = []
    for i, row in enumerate(reader, start=2):  # header is line 1
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DataError(f"{label}: row {i} has {len(row)} fields, expected {len(header)}")
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{label}: non-numeric value {cell.strip()!r} at row {i}, column {header[j]!r}"
                ) from None
        ys.append(parsed[t_idx])
        xs.append([parsed[j] for j in x_cols])
    if len(ys) < 2:
        raise DataError(f"{label}: need at least 2 data rows, got {len(ys)}")
    try:
        return Dataset(
            np.array(xs), np.array(ys), x_names=tuple(header[j] for j in x_cols), y_name=target
        )
    except InvalidInputError as exc:
        raise DataError(f"{label}: {exc}") from exc


def write_csv(dataset: Dataset, fh) -> None:
    """Inverse of load_csv; floats use repr so the round trip is exact."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(dataset.x_names) + [dataset.y_name])
    for i in range(dataset.n):
        writer.writerow([repr(float(v)) for v in dataset.x[i]] + [repr(float(dataset.y[i]))])


def gen_synthetic(
    kind: str,
    n: int,
    noise_sd: float,
    seed: int,
    coeffs=None,
    freq: float | None = None,
    x_lo: float = 0.0,
    x_hi: float = 1.0,
) -> Dataset:
    """Equally spaced x on [x_lo, x_hi], a clean signal, Gaussian noise.

    kind "poly" evaluates sum coeffs[j] * x**j; kind "sine" evaluates
    sin(2 pi freq x), freq defaulting to 1 full cycle over the range.
    Bit-reproducible for a fixed (spec, seed) pair.
    """
    if kind not in ("poly", "sine"):
        raise InvalidInputError(f"kind must be 'poly' or 'sine', got {kind!r}")
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    if not (np.isfinite(noise_sd) and noise_sd >= 0):
        raise InvalidInputError(f"noise_sd must be >= 0, got {noise_sd}")
    if not x_hi > x_lo:
        raise InvalidInputError(f"need x_hi > x_lo, got [{x_lo}, {x_hi}]")
    x = np.linspace(x_lo, x_hi, n)
    if kind == "poly":
        if coeffs is None or len(list(coeffs)) == 0:
            raise InvalidInputError("kind 'poly' needs nonempty coeffs")
        signal = np.polynomial.polynomial.polyval(x, np.asarray(list(coeffs), dtype=float))
    else:
        f = 1.0 if freq is None else float(freq)
        if not np.isfinite(f):
            raise InvalidInputError(f"freq must be finite, got {freq}")
        signal = np.sin(2.0 * np.pi * f * x)
    rng = np.random.default_rng(seed)
    y = signal + (rng.normal(0.0, noise_sd, n) if noise_sd > 0 else 0.0)
    return Dataset(x[:, None], y, x_names=("x",), y_name="y")
