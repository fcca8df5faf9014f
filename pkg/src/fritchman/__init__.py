"""Fritchman burst-error channel models for indoor VLC links.

Train semi-hidden Markov error models with Baum-Welch, generate and score
synthetic error sequences by their error-free run distribution, and
simulate an OOK link with PWM interference to produce training data.
"""

from .channel import (
    AdcConfig,
    ChannelConfig,
    PwmConfig,
    measure_sinr,
    measure_snr,
    run_transmission,
    synthesize_waveform,
    train_thresholds,
)
from .estimation import (
    TrainingConfig,
    TrainingReport,
    backward_scaled,
    em_step,
    forward_scaled,
    paper_initial_model,
    train,
)
from .model import (
    FritchmanModel,
    generate_error_sequence,
    stationary_distribution,
    table_model,
    validate_model,
)
from .stats import EfrdCurve, efrd, error_gaps, error_probability, fit_metrics, generate_iid

__version__ = "0.1.0"
