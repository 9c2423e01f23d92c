"""Desk-scale ECG synthesis, noising, denoising and evaluation toolkit."""

from .signals import (
    LabeledDataset,
    Signal,
    SignalPair,
    read_dataset,
    read_pairs,
    scale_to_unit,
    split_dataset,
    write_dataset,
    write_pairs,
)
from .synth import (
    McSharryParams,
    NoiseParams,
    NoiseRanges,
    apply_noise,
    make_training_pairs,
    mcsharry_batch,
    mcsharry_generate,
    sample_noise_params,
)
from .dsp import (
    QrsAnnotation,
    Spectrogram,
    bandpass_filter,
    detect_qrs,
    mel_spectrogram,
    wavelet_filter,
)
from .metrics import (
    MetricReport,
    delta_hr,
    evaluate_denoiser,
    inception_score,
    mse,
    nn_distance_self,
    nn_distance_train,
    snr_db,
)
from .models import Network, build, count_params, transfer_critic_to_denoiser

__version__ = "0.1.0"

__all__ = [
    "LabeledDataset",
    "McSharryParams",
    "MetricReport",
    "Network",
    "NoiseParams",
    "NoiseRanges",
    "QrsAnnotation",
    "Signal",
    "SignalPair",
    "Spectrogram",
    "apply_noise",
    "bandpass_filter",
    "build",
    "count_params",
    "delta_hr",
    "detect_qrs",
    "evaluate_denoiser",
    "inception_score",
    "make_training_pairs",
    "mcsharry_batch",
    "mcsharry_generate",
    "mel_spectrogram",
    "mse",
    "nn_distance_self",
    "nn_distance_train",
    "read_dataset",
    "read_pairs",
    "sample_noise_params",
    "scale_to_unit",
    "snr_db",
    "split_dataset",
    "transfer_critic_to_denoiser",
    "wavelet_filter",
    "write_dataset",
    "write_pairs",
]
