"""Waveform-level OOK link with PWM interference, Gaussian background and an ADC receiver.

The simulator produces the error sequences that the modelling pipeline
trains on. The received level of a sample is::

    signal_amplitude * bit + background_dc + pwm_level(t) + N(0, noise_sigma^2)

and the receiver reads one ADC sample in the middle of every bit, comparing
it to a pilot-trained threshold. With an interferer present two thresholds
are trained (PWM on / PWM off). The interferer tells the receiver its state
once per bit, at the bit boundary; a PWM edge between the boundary and the
mid-bit read therefore leaves the receiver on the wrong threshold for that
bit. That is where the periodic, edge-aligned errors come from.

Every random draw comes from a stream derived from ``(seed, stream id)``,
so the data bits and data noise of a run do not depend on how many pilot
blocks were sent or whether an interferer is configured.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateMeasurementError
from .model import RNG_NAME

log = logging.getLogger(__name__)

# stream ids for np.random.SeedSequence spawn keys
_TX_BITS, _DATA_NOISE, _PILOT_LEAD, _PILOT_TRAIL = 0, 1, 2, 3
_SNR_BG, _SNR_SIG, _SNR_BITS = 10, 11, 12
_SINR_1, _SINR_2, _SINR_BITS, _SINR_3 = 20, 21, 22, 23

LATCH_MODES = ("bit-start", "mid-bit")
GROUPING_MODES = ("exact-phase", "threshold-estimated")
CLIP_WARN_FRACTION = 0.01


def stream(seed, stream_id) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream_id,)))


@dataclass(frozen=True)
class PwmConfig:
    frequency: float = 600.0
    duty_cycle: float = 0.5
    amplitude: float = 1.5
    phase: float = 0.0


@dataclass(frozen=True)
class AdcConfig:
    bits: int = 10
    full_scale: float = 5.0

    @property
    def max_count(self) -> int:
        return 2 ** self.bits - 1

    def quantize(self, x) -> np.ndarray:
        counts = np.rint(np.asarray(x) / self.full_scale * self.max_count)
        return np.clip(counts, 0, self.max_count).astype(np.int64)


@dataclass(frozen=True)
class ChannelConfig:
    bit_rate: float = 6250.0
    samples_per_bit: int = 16
    signal_amplitude: float = 1.0
    noise_sigma: float = 0.05
    background_dc: float = 0.5
    pwm: PwmConfig | None = None
    adc: AdcConfig = field(default_factory=AdcConfig)
    pilot_length: int = 64
    seed: int = 0
    threshold_latch: str = "bit-start"

    def __post_init__(self):
        problems = []
        if not self.bit_rate > 0:
            problems.append(("bit_rate", "must be > 0"))
        if self.samples_per_bit < 4:
            problems.append(("samples_per_bit", "must be >= 4"))
        if self.noise_sigma < 0:
            problems.append(("noise_sigma", "must be >= 0"))
        if self.pilot_length < 2:
            problems.append(("pilot_length", "must be >= 2"))
        if self.adc.bits < 1 or not self.adc.full_scale > 0:
            problems.append(("adc_bits", "resolution and full scale must be positive"))
        if self.threshold_latch not in LATCH_MODES:
            problems.append(("threshold_latch", f"must be one of {LATCH_MODES}"))
        if self.pwm is not None:
            if not 0.0 < self.pwm.duty_cycle < 1.0:
                problems.append(("pwm_duty_cycle", "must lie in (0, 1)"))
            if not self.pwm.frequency > 0:
                problems.append(("pwm_frequency", "must be > 0"))
            if not 0.0 <= self.pwm.phase < 1.0:
                problems.append(("pwm_phase", "must lie in [0, 1)"))
        if problems:
            key, why = problems[0]
            raise ConfigError(key, why)

    @property
    def sample_rate(self) -> float:
        return self.bit_rate * self.samples_per_bit

    @property
    def mid(self) -> int:
        """Offset of the decision sample inside a bit."""
        return self.samples_per_bit // 2

    @property
    def case(self) -> str:
        return "background-only" if self.pwm is None else "pwm-interference"


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds in ADC counts; ``pwm_on`` is None for a single-threshold receiver."""

    pwm_off: float
    pwm_on: float | None = None


@dataclass(frozen=True)
class SnrReport:
    signal_var: float
    background_var: float
    snr: float
    snr_db: float


@dataclass(frozen=True)
class SinrReport:
    sigma1_sq: float
    sigma2_sq: float
    sigma3_sq: float
    sigma4_sq: float
    sinr: float
    snr_or_sinr_db: float
    grouping_mode: str

    @property
    def sinr_db(self) -> float:
        return self.snr_or_sinr_db


@dataclass(frozen=True, eq=False)
class ChannelRunResult:
    tx_bits: np.ndarray
    rx_bits: np.ndarray
    error_sequence: np.ndarray
    thresholds: Thresholds
    quality: SnrReport | SinrReport | None
    adc_samples: np.ndarray
    edge_bits: np.ndarray
    clipped_fraction: float
    warnings: tuple = ()
    seed: int = 0
    rng: str = RNG_NAME


def to_db(x: float) -> float:
    return float(10.0 * np.log10(x)) if x > 0 else float("-inf")


def pwm_state(config: ChannelConfig, n_samples: int, start_sample: int = 0) -> np.ndarray:
    """True where the interferer is high, one entry per waveform sample."""
    if config.pwm is None:
        return np.zeros(n_samples, dtype=bool)
    t = (start_sample + np.arange(n_samples)) / config.sample_rate
    frac = np.mod(t * config.pwm.frequency + config.pwm.phase, 1.0)
    return frac < config.pwm.duty_cycle


def synthesize_waveform(config: ChannelConfig, bits, rng=None, *, pwm_override=None, noise=None,
                        start_sample=0) -> np.ndarray:
    """Sampled received waveform (linear units) for ``bits``.

    ``pwm_override`` forces the interferer constantly on (True) or off (False);
    by default it follows its square wave. Noise comes from ``noise`` if given,
    otherwise from ``rng`` (default: a generator seeded with ``config.seed``).
    """
    bits = np.asarray(bits, dtype=float)
    spb = config.samples_per_bit
    n = bits.size * spb
    x = np.repeat(bits * config.signal_amplitude, spb) + config.background_dc
    if config.pwm is not None:
        if pwm_override is None:
            x = x + config.pwm.amplitude * pwm_state(config, n, start_sample)
        elif pwm_override:
            x = x + config.pwm.amplitude
    if noise is None:
        if rng is None:
            rng = np.random.default_rng(config.seed)
        noise = draw_noise(config, n, rng)
    return x + noise


def draw_noise(config: ChannelConfig, n: int, rng) -> np.ndarray:
    if config.noise_sigma == 0:
        return np.zeros(n)
    return rng.normal(0.0, config.noise_sigma, n)


def pilot_bits(length: int) -> np.ndarray:
    return np.arange(length) % 2


def mid_samples(config: ChannelConfig, waveform) -> np.ndarray:
    """ADC counts at the decision instant of every bit in ``waveform``."""
    spb = config.samples_per_bit
    w = np.asarray(waveform)
    n_bits = w.size // spb
    return config.adc.quantize(w[config.mid:n_bits * spb:spb])


def _midpoint_threshold(config, waveform) -> float:
    counts = mid_samples(config, waveform)
    if counts.size < 2:
        raise ValueError("pilot block must hold at least 2 bits")
    if counts.size % config.pilot_length:
        raise ValueError(f"pilot waveform must hold whole blocks of {config.pilot_length} bits")
    pattern = np.tile(pilot_bits(config.pilot_length), counts.size // config.pilot_length)
    return 0.5 * (counts[pattern == 1].mean() + counts[pattern == 0].mean())


def train_thresholds(config: ChannelConfig, pilot_waveform_on, pilot_waveform_off) -> Thresholds:
    """Midpoint between the mean 1-level and 0-level of the pilot reads.

    Each waveform holds one or more alternating 0101... pilot blocks of
    ``config.pilot_length`` bits. Pass ``pilot_waveform_on=None`` for a
    single-threshold (no interferer) receiver.
    """
    off = _midpoint_threshold(config, pilot_waveform_off)
    on = None if pilot_waveform_on is None else _midpoint_threshold(config, pilot_waveform_on)
    return Thresholds(pwm_off=off, pwm_on=on)


def edge_bits(config: ChannelConfig, n_bits: int) -> np.ndarray:
    """True for bits whose sample span contains a PWM transition."""
    spb = config.samples_per_bit
    state = pwm_state(config, n_bits * spb + 1)
    # an edge at sample i (state[i] != state[i-1]) belongs to bit i // spb
    change = np.flatnonzero(state[1:] != state[:-1]) + 1
    out = np.zeros(n_bits, dtype=bool)
    b = change // spb
    out[b[b < n_bits]] = True
    return out


def _pilot_waveforms(config, noise_rng):
    """Pilot block(s) for one pilot position: (on, off) waveforms sharing one noise draw."""
    bits = pilot_bits(config.pilot_length)
    noise = draw_noise(config, bits.size * config.samples_per_bit, noise_rng)
    off = synthesize_waveform(config, bits, pwm_override=False, noise=noise)
    if config.pwm is None:
        return None, off
    on = synthesize_waveform(config, bits, pwm_override=True, noise=noise)
    return on, off


def run_transmission(config: ChannelConfig, n_bits: int, *, measure_quality=True,
                     measure_samples=100_000) -> ChannelRunResult:
    """Send ``n_bits`` pseudo-random bits and decide them at the receiver.

    Pilot blocks go before and after the payload; both are used to train the
    thresholds and neither counts toward the error sequence.
    """
    n_bits = int(n_bits)
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    seed = config.seed
    tx = stream(seed, _TX_BITS).integers(0, 2, n_bits).astype(np.uint8)

    lead_on, lead_off = _pilot_waveforms(config, stream(seed, _PILOT_LEAD))
    trail_on, trail_off = _pilot_waveforms(config, stream(seed, _PILOT_TRAIL))
    pilot_on = None if lead_on is None else np.concatenate([lead_on, trail_on])
    thresholds = train_thresholds(config, pilot_on, np.concatenate([lead_off, trail_off]))

    wave = synthesize_waveform(config, tx, stream(seed, _DATA_NOISE))
    counts = config.adc.quantize(wave)
    clipped = float(np.mean((counts == 0) | (counts == config.adc.max_count)))
    spb = config.samples_per_bit
    reads = counts[config.mid::spb]

    if config.pwm is None:
        thr = np.full(n_bits, thresholds.pwm_off)
    else:
        state = pwm_state(config, n_bits * spb)
        at = 0 if config.threshold_latch == "bit-start" else config.mid
        latched = state[at::spb]
        thr = np.where(latched, thresholds.pwm_on, thresholds.pwm_off)
    rx = (reads > thr).astype(np.uint8)

    warnings = []
    if clipped > CLIP_WARN_FRACTION:
        msg = f"ADC clipping on {clipped:.2%} of samples"
        log.warning(msg)
        warnings.append(msg)

    quality = None
    if measure_quality:
        if config.pwm is None:
            quality = measure_snr(config, measure_samples)
        else:
            quality = measure_sinr(config, "exact-phase", measure_samples)

    return ChannelRunResult(
        tx_bits=tx,
        rx_bits=rx,
        error_sequence=tx ^ rx,
        thresholds=thresholds,
        quality=quality,
        adc_samples=reads,
        edge_bits=edge_bits(config, n_bits),
        clipped_fraction=clipped,
        warnings=tuple(warnings),
        seed=seed,
    )


def _capture(config, bits, noise_rng, n_samples):
    wave = synthesize_waveform(config, bits, noise_rng)[:n_samples]
    return config.adc.quantize(wave).astype(float)


def _n_capture_bits(config, n_samples):
    return -(-int(n_samples) // config.samples_per_bit)


def measure_snr(config: ChannelConfig, n_samples: int = 100_000) -> SnrReport:
    """Signal power over background power from two ADC captures.

    The background capture has the source off; the signal capture carries
    random equiprobable bits. Their variance difference is the signal power.
    """
    if config.pwm is not None:
        raise ValueError("SNR measurement is for configurations without an interferer")
    nb = _n_capture_bits(config, n_samples)
    bg = _capture(config, np.zeros(nb), stream(config.seed, _SNR_BG), n_samples)
    bits = stream(config.seed, _SNR_BITS).integers(0, 2, nb)
    sig = _capture(config, bits, stream(config.seed, _SNR_SIG), n_samples)
    var_b = float(bg.var(ddof=1))
    if var_b <= 0:
        raise DegenerateMeasurementError("background variance is zero; SNR undefined")
    var_s = float(sig.var(ddof=1)) - var_b
    snr = var_s / var_b
    return SnrReport(signal_var=var_s, background_var=var_b, snr=snr, snr_db=to_db(snr))


def sinr_from_variances(sigma1_sq, sigma2_sq, sigma3_sq, sigma4_sq) -> float:
    """Twice the signal variance over the summed per-level noise variances."""
    den = sigma3_sq + sigma4_sq
    if den <= 0:
        raise DegenerateMeasurementError("grouped noise variances sum to zero; SINR undefined")
    return 2.0 * (sigma2_sq - sigma1_sq) / den


def group_by_pwm(config: ChannelConfig, capture, grouping_mode: str):
    """Split a PWM-active capture into (low, high) sample groups.

    ``exact-phase`` uses the true interferer state of each sample.
    ``threshold-estimated`` decides the state once per bit period by
    comparing that period's first read to the capture mean and files the
    whole period under that state, so reads taken after an edge land in the
    wrong group.
    """
    if grouping_mode == "exact-phase":
        high = pwm_state(config, capture.size)
    elif grouping_mode == "threshold-estimated":
        spb = config.samples_per_bit
        level = capture.mean()
        first = capture[::spb] > level
        high = np.repeat(first, spb)[:capture.size]
    else:
        raise ValueError(f"grouping_mode must be one of {GROUPING_MODES}")
    return capture[~high], capture[high]


def measure_sinr(config: ChannelConfig, grouping_mode: str = "exact-phase",
                 n_samples: int = 100_000) -> SinrReport:
    """Three-capture SINR estimate.

    1. interferer on, source off;
    2. interferer on, source sending random bits;
    3. interferer on, reads grouped by interferer level.
    """
    if config.pwm is None:
        raise ValueError("SINR measurement needs an interferer")
    nb = _n_capture_bits(config, n_samples)
    zeros = np.zeros(nb)
    c1 = _capture(config, zeros, stream(config.seed, _SINR_1), n_samples)
    bits = stream(config.seed, _SINR_BITS).integers(0, 2, nb)
    c2 = _capture(config, bits, stream(config.seed, _SINR_2), n_samples)
    c3 = _capture(config, zeros, stream(config.seed, _SINR_3), n_samples)
    low, high = group_by_pwm(config, c3, grouping_mode)
    if low.size < 2 or high.size < 2:
        raise DegenerateMeasurementError("capture did not contain both interferer levels")
    s1, s2 = float(c1.var(ddof=1)), float(c2.var(ddof=1))
    s3, s4 = float(low.var(ddof=1)), float(high.var(ddof=1))
    sinr = sinr_from_variances(s1, s2, s3, s4)
    return SinrReport(s1, s2, s3, s4, sinr, to_db(sinr), grouping_mode)


def with_overrides(config: ChannelConfig, **changes) -> ChannelConfig:
    """Copy of ``config`` with top-level or ``pwm_*``/``adc_*`` fields replaced."""
    pwm_changes = {k[4:]: v for k, v in changes.items() if k.startswith("pwm_")}
    adc_changes = {k[4:]: v for k, v in changes.items() if k.startswith("adc_")}
    top = {k: v for k, v in changes.items() if not k.startswith(("pwm_", "adc_"))}
    if "duty_cycle" in top:
        pwm_changes["duty_cycle"] = top.pop("duty_cycle")
    if pwm_changes:
        if config.pwm is None:
            raise ValueError("cannot override PWM fields of a configuration without an interferer")
        top["pwm"] = replace(config.pwm, **pwm_changes)
    if adc_changes:
        top["adc"] = replace(config.adc, **adc_changes)
    return replace(config, **top)
