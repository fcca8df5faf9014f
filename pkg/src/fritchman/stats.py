"""Error-sequence statistics and EFRD goodness of fit."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedEfrdError
from .model import as_error_sequence

CHI2_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class EfrdCurve:
    """Pr(0^m | 1) for m = 0..max_m, estimated from ``gap_count`` gaps."""

    values: np.ndarray
    gap_count: int

    @property
    def max_m(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class FitReport:
    chi_squared: float
    mse: float
    m_range_used: tuple


def error_probability(seq) -> float:
    seq = as_error_sequence(seq)
    if seq.size == 0:
        raise ValueError("error probability of an empty sequence is undefined")
    return float(seq.sum()) / seq.size


def error_gaps(seq) -> np.ndarray:
    """Lengths of the error-free runs strictly between consecutive errors.

    The run before the first error and the censored run after the last
    error are dropped.
    """
    pos = np.flatnonzero(as_error_sequence(seq))
    return np.diff(pos) - 1


def efrd_from_gaps(gaps) -> EfrdCurve:
    gaps = np.asarray(gaps, dtype=np.int64)
    if gaps.size == 0:
        raise UndefinedEfrdError("EFRD needs at least two errors (one inter-error gap)")
    hist = np.bincount(gaps, minlength=gaps.max() + 2)
    at_least = np.cumsum(hist[::-1])[::-1]
    return EfrdCurve(values=at_least / gaps.size, gap_count=int(gaps.size))


def efrd(seq) -> EfrdCurve:
    """Empirical error-free run distribution, m = 0 .. largest gap + 1."""
    return efrd_from_gaps(error_gaps(seq))


def generate_iid(pe, length, seed=None) -> np.ndarray:
    if not 0.0 <= pe <= 1.0:
        raise ValueError(f"pe must lie in [0, 1], got {pe}")
    rng = np.random.default_rng(seed)
    return (rng.random(int(length)) < pe).astype(np.uint8)


def fit_metrics(reference: EfrdCurve, candidate: EfrdCurve) -> FitReport:
    """Pearson-style chi-squared (candidate as the expected curve) and MSE.

    Compared over m = 1 .. min(max_m); chi-squared skips points where the
    candidate is below ``CHI2_FLOOR``.
    """
    hi = min(reference.max_m, candidate.max_m)
    if hi < 1:
        raise ValueError("EFRD curves share no m >= 1")
    ref = np.asarray(reference.values[1:hi + 1])
    cand = np.asarray(candidate.values[1:hi + 1])
    diff2 = (ref - cand) ** 2
    keep = cand >= CHI2_FLOOR
    chi2 = float((diff2[keep] / cand[keep]).sum())
    return FitReport(chi_squared=chi2, mse=float(diff2.mean()), m_range_used=(1, hi))


def write_efrd_csv(curve: EfrdCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "prob"])
        for m, v in enumerate(curve.values):
            w.writerow([m, f"{v:.10g}"])


def read_efrd_csv(path, gap_count=0) -> EfrdCurve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ms = [int(r["m"]) for r in rows]
    if ms != list(range(len(ms))):
        raise ValueError(f"{path}: m column must run 0..M without gaps")
    return EfrdCurve(values=np.array([float(r["prob"]) for r in rows]), gap_count=gap_count)
