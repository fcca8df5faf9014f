"""Text file formats: models, error sequences, channel configs, reports, CSV tables.

Model, config and report files share one grammar: ``key = value`` lines,
``#`` comments, blank lines ignored. Values are JSON literals (numbers,
bracketed lists) or bare strings.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .channel import AdcConfig, ChannelConfig, PwmConfig, SinrReport, SnrReport
from .errors import ConfigError, ModelValidationError
from .model import FritchmanModel, as_error_sequence, validate_model

LINE_WIDTH = 80


def format_prob(x: float) -> str:
    x = float(x)
    if x != 0.0 and abs(x) < 1e-4:
        return np.format_float_scientific(x, unique=True, min_digits=10)
    return np.format_float_positional(x, unique=True, min_digits=10, trim="k")


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return str(x)
    return repr(x)


# --- key/value documents -----------------------------------------------------

def parse_kv(text: str, source: str = "<text>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(key, f"duplicate key at {source}:{lineno}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def dump_kv(items) -> str:
    lines = []
    for key, value in items:
        if value is None:
            continue
        if not isinstance(value, str):
            value = format_number(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _require(doc, key, kind=float):
    if key not in doc:
        raise ConfigError(key, "missing required key")
    return _coerce(doc, key, kind)


def _coerce(doc, key, kind):
    value = doc[key]
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot read {value!r} as {kind.__name__}") from None


# --- models ------------------------------------------------------------------

def dump_model(model: FritchmanModel) -> str:
    rows = ", ".join("[" + ", ".join(format_prob(v) for v in row) + "]" for row in model.transition)
    init = ", ".join(format_prob(v) for v in model.initial)
    return dump_kv([
        ("n_states", model.n_states),
        ("n_good", model.n_good),
        ("transition", f"[{rows}]"),
        ("initial", f"[{init}]"),
    ])


def load_model(text: str, source: str = "<text>", *, renormalize=False) -> FritchmanModel:
    """Parse a model document; raises ModelValidationError when the model is invalid."""
    doc = parse_kv(text, source)
    n = _require(doc, "n_states", int)
    k = _require(doc, "n_good", int)
    for key in ("transition", "initial"):
        if key not in doc:
            raise ConfigError(key, "missing required key")
    try:
        a = np.array(doc["transition"], dtype=float)
        p = np.array(doc["initial"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("transition", "matrices must be numeric bracketed lists") from None
    if a.shape != (n, n):
        raise ConfigError("transition", f"expected {n}x{n} matrix, got shape {a.shape}")
    if p.shape != (n,):
        raise ConfigError("initial", f"expected {n} entries, got shape {p.shape}")
    model = FritchmanModel(a, p, k)
    if renormalize:
        model = model.renormalized()
    violations = validate_model(model)
    if violations:
        raise ModelValidationError(violations)
    return model


def write_model(model, path) -> None:
    Path(path).write_text(dump_model(model))


def read_model(path, **kw) -> FritchmanModel:
    return load_model(Path(path).read_text(), str(path), **kw)


# --- error sequences -----------------------------------------------------------

def dump_sequence(seq) -> str:
    s = "".join("01"[b] for b in as_error_sequence(seq).tolist())
    return "".join(s[i:i + LINE_WIDTH] + "\n" for i in range(0, len(s), LINE_WIDTH))


def load_sequence(text: str) -> np.ndarray:
    body = "".join(text.split())
    bad = set(body) - {"0", "1"}
    if bad:
        raise ValueError(f"error sequence file contains non-binary characters {sorted(bad)}")
    return np.frombuffer(body.encode(), dtype=np.uint8) - ord("0")


def write_sequence(seq, path) -> None:
    Path(path).write_text(dump_sequence(seq))


def read_sequence(path) -> np.ndarray:
    return load_sequence(Path(path).read_text())


# --- channel configs -------------------------------------------------------------

_TOP_FIELDS = {
    "bit_rate": float, "samples_per_bit": int, "signal_amplitude": float,
    "noise_sigma": float, "background_dc": float, "pilot_length": int, "seed": int,
    "threshold_latch": str,
}
_REQUIRED = ("bit_rate", "signal_amplitude", "noise_sigma")
_PWM_FIELDS = {"pwm_frequency": float, "pwm_duty_cycle": float, "pwm_amplitude": float, "pwm_phase": float}
_ADC_FIELDS = {"adc_bits": int, "adc_full_scale": float}
CONFIG_KEYS = set(_TOP_FIELDS) | set(_PWM_FIELDS) | set(_ADC_FIELDS)


def config_from_mapping(doc: dict, *, ignore=()) -> ChannelConfig:
    """Build a ChannelConfig from flat keys (``pwm_*`` and ``adc_*`` for nested parts)."""
    unknown = set(doc) - CONFIG_KEYS - set(ignore)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, "missing required key")
    top = {k: _coerce(doc, k, t) for k, t in _TOP_FIELDS.items() if k in doc}
    pwm = None
    if any(k in doc for k in _PWM_FIELDS):
        pwm = PwmConfig(
            frequency=_require(doc, "pwm_frequency"),
            duty_cycle=_require(doc, "pwm_duty_cycle"),
            amplitude=_require(doc, "pwm_amplitude"),
            phase=_coerce(doc, "pwm_phase", float) if "pwm_phase" in doc else 0.0,
        )
    adc = AdcConfig(**{k[4:]: _coerce(doc, k, t) for k, t in _ADC_FIELDS.items() if k in doc})
    return ChannelConfig(pwm=pwm, adc=adc, **top)


def config_to_items(config: ChannelConfig):
    items = [(k, getattr(config, k)) for k in _TOP_FIELDS]
    if config.pwm is not None:
        items += [(k, getattr(config.pwm, k[4:])) for k in _PWM_FIELDS]
    items += [(k, getattr(config.adc, k[4:])) for k in _ADC_FIELDS]
    return items


def dump_config(config: ChannelConfig) -> str:
    return dump_kv(config_to_items(config))


def read_config(path) -> ChannelConfig:
    return config_from_mapping(parse_kv(Path(path).read_text(), str(path)))


# --- reports -----------------------------------------------------------------

def quality_items(quality):
    if isinstance(quality, SnrReport):
        return [
            ("signal_var", quality.signal_var),
            ("background_var", quality.background_var),
            ("snr", quality.snr),
            ("snr_db", quality.snr_db),
        ]
    if isinstance(quality, SinrReport):
        return [
            ("sigma1_sq", quality.sigma1_sq),
            ("sigma2_sq", quality.sigma2_sq),
            ("sigma3_sq", quality.sigma3_sq),
            ("sigma4_sq", quality.sigma4_sq),
            ("sinr", quality.sinr),
            ("sinr_db", quality.sinr_db),
            ("grouping_mode", quality.grouping_mode),
        ]
    return []


def quality_db(doc: dict):
    """(column name, value) of the SNR/SINR figure in a parsed report, or (None, None)."""
    for key in ("sinr_db", "snr_db"):
        if key in doc:
            return key, float(doc[key])
    return None, None


def write_training_csv(log_likelihoods, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "log10_likelihood"])
        for i, ll in enumerate(log_likelihoods, 1):
            w.writerow([i, repr(float(ll))])


def read_training_csv(path) -> list[float]:
    with open(path, newline="") as fh:
        return [float(r["log10_likelihood"]) for r in csv.DictReader(fh)]


def write_table(rows, columns, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k)) for k in columns})


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
