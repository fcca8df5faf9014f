"""End-to-end runs: simulate -> train -> generate -> compare, one table row per point."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .channel import ChannelConfig, SinrReport, run_transmission, with_overrides
from .errors import ConfigError
from .estimation import TrainingConfig, train
from .model import RNG_NAME, FritchmanModel, generate_error_sequence
from .stats import efrd, error_probability, fit_metrics, generate_iid, write_efrd_csv

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["mse_iid", "mse_model", "chi2_iid", "chi2_model"]
CASES = ("background-only", "pwm-interference")


def transition_columns(model: FritchmanModel) -> dict:
    """Free transition entries keyed ``a<i><j>`` (1-based), good-good zeros omitted."""
    k = model.n_good
    out = {}
    for (i, j), v in np.ndenumerate(model.transition):
        if i < k and j < k and i != j:
            continue
        out[f"a{i + 1}{j + 1}"] = float(v)
    return out


def table_columns(model: FritchmanModel, quality_column="snr_db") -> list[str]:
    return [quality_column, "Pe", *transition_columns(model), *METRIC_COLUMNS]


@dataclass(frozen=True, eq=False)
class Comparison:
    row: dict
    measured: object
    model: object
    iid: object


def compare(measured, model: FritchmanModel, seed, length=None) -> Comparison:
    """Fit a model-generated and a Pe-matched IID sequence against ``measured``.

    Both synthetic sequences have the measured length unless ``length`` is
    given; they draw from independent children of ``seed``.
    """
    measured = np.asarray(measured, dtype=np.uint8)
    length = measured.size if length is None else int(length)
    pe = error_probability(measured)
    ref = efrd(measured)
    model_seed, iid_seed = np.random.SeedSequence(int(seed)).spawn(2)
    model_curve = efrd(generate_error_sequence(model, length, model_seed))
    iid_curve = efrd(generate_iid(pe, length, iid_seed))
    fit_model = fit_metrics(ref, model_curve)
    fit_iid = fit_metrics(ref, iid_curve)
    row = {"Pe": pe, **transition_columns(model)}
    row.update(
        mse_iid=fit_iid.mse, mse_model=fit_model.mse,
        chi2_iid=fit_iid.chi_squared, chi2_model=fit_model.chi_squared,
        seed=int(seed), rng=RNG_NAME,
    )
    return Comparison(row, ref, model_curve, iid_curve)


@dataclass(frozen=True)
class SweepSpec:
    case: str
    base: ChannelConfig
    points: tuple
    n_bits: int = 100_000
    training: TrainingConfig = field(default_factory=TrainingConfig)
    base_seed: int = 0

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError("case", f"must be one of {CASES}")
        if not self.points:
            raise ConfigError("points", "at least one sweep point is required")
        if self.n_bits < 1000:
            raise ConfigError("n_bits", "must be >= 1000")
        if (self.case == "pwm-interference") != (self.base.pwm is not None):
            raise ConfigError("case", f"case {self.case!r} does not match the presence of pwm_* keys")

    def point_config(self, index: int) -> ChannelConfig:
        """Base config with the point's overrides; the seed is base_seed + index."""
        point = dict(self.points[index])
        cfg = self.base
        for key in ("noise_scale", "amplitude_scale"):
            if key in point:
                scale = float(point.pop(key))
                attr = "noise_sigma" if key == "noise_scale" else "signal_amplitude"
                point[attr] = getattr(cfg, attr) * scale
        return with_overrides(cfg, seed=self.base_seed + index, **point)


_SWEEP_KEYS = ("case", "points", "n_bits", "iterations", "tolerance", "base_seed")


def load_sweep_spec(text: str, source="<text>", seed_override=None) -> SweepSpec:
    doc = formats.parse_kv(text, source)
    if "case" not in doc:
        raise ConfigError("case", "missing required key")
    if "points" not in doc or not isinstance(doc["points"], list):
        raise ConfigError("points", "must be a bracketed list of point objects")
    for i, p in enumerate(doc["points"]):
        if not isinstance(p, dict):
            raise ConfigError("points", f"point {i} is not an object")
    base = formats.config_from_mapping(doc, ignore=_SWEEP_KEYS)
    base_seed = int(doc.get("base_seed", doc.get("seed", 0)))
    if seed_override is not None:
        base_seed = seed_override
    training = TrainingConfig(
        max_iterations=int(doc.get("iterations", 20)),
        log_likelihood_tolerance=float(doc.get("tolerance", 0.0)),
    )
    return SweepSpec(
        case=str(doc["case"]), base=base, points=tuple(doc["points"]),
        n_bits=int(doc.get("n_bits", 100_000)), training=training, base_seed=base_seed,
    )


def quality_column(case: str) -> str:
    return "sinr_db" if case == "pwm-interference" else "snr_db"


def run_point(spec: SweepSpec, index: int, out_dir) -> dict:
    """Simulate, train, generate and compare one point; writes its artifacts under ``out_dir``."""
    out_dir = Path(out_dir)
    qcol = quality_column(spec.case)
    row = {"point": index, "status": "ok"}
    try:
        cfg = spec.point_config(index)
        result = run_transmission(cfg, spec.n_bits)
        q = result.quality
        row[qcol] = q.sinr_db if isinstance(q, SinrReport) else q.snr_db
        seq = result.error_sequence
        report = train(spec.training, seq)
        cmp = compare(seq, report.final_model, cfg.seed)
        row.update(cmp.row)
        row["iterations"] = report.iterations_run
        row["log10_likelihood"] = report.log_likelihoods[-1]
        stem = f"point{index:02d}"
        formats.write_sequence(seq, out_dir / f"{stem}_measured.seq")
        formats.write_model(report.final_model, out_dir / f"{stem}_model.txt")
        formats.write_training_csv(report.log_likelihoods, out_dir / f"{stem}_training.csv")
        for name, curve in (("measured", cmp.measured), ("model", cmp.model), ("iid", cmp.iid)):
            write_efrd_csv(curve, out_dir / f"{stem}_efrd_{name}.csv")
    except Exception as exc:  # a failed point is recorded, the sweep carries on
        log.error("sweep point %d failed: %s", index, exc)
        row["status"] = f"failed: {exc}"
    return row


def run_sweep(spec: SweepSpec, out_dir, jobs: int = 1):
    """Run every point; returns ``(rows, columns)`` sorted by descending SNR/SINR."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    idx = range(len(spec.points))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_point, [spec] * len(idx), idx, [out_dir] * len(idx)))
    else:
        rows = [run_point(spec, i, out_dir) for i in idx]

    qcol = quality_column(spec.case)
    rows.sort(key=lambda r: (r.get(qcol) is None, -(r.get(qcol) or 0.0), r["point"]))
    cols = table_columns(spec.training.initial_model, qcol)
    columns = ["point", *cols, "seed", "rng", "iterations", "log10_likelihood", "status"]
    formats.write_table(rows, columns, out_dir / "summary.csv")
    return rows, columns
