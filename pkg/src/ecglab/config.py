"""Plain key=value configuration files for the command-line pipeline.

Keys mirror the training hyperparameter names (batch_size, model_dim,
gp_lambda, critic_updates, phase_shuffle, adam_lr, adam_beta1,
adam_beta2) plus latent/epoch controls and the noise-model ranges.
Unknown keys are rejected; defaults are the full-scale values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .synth import NoiseRanges
from .training import ClassifierConfig, DenoiserConfig, GanConfig


@dataclass
class RunConfig:
    batch_size: int = 64
    model_dim: int = 16
    gp_lambda: float = 10.0
    critic_updates: int = 5
    phase_shuffle: int = 2
    adam_lr: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epochs: int = 1
    generator_steps: int | None = None
    latent: str = "uniform"
    z_len: int = 100
    val_fraction: float = 0.1
    is_eval_every: int = 10
    is_eval_batch: int = 1024
    # noise-model sampling ranges
    bw_freq_max_hz: float = 0.5
    bw_amp_max: float = 0.3
    pl_amp_max: float = 0.1
    chirp_amp_max: float = 0.1
    chirp_mod_min_hz: float = 0.1
    chirp_mod_max_hz: float = 2.0

    def gan(self) -> GanConfig:
        return GanConfig(
            batch_size=self.batch_size,
            d=self.model_dim,
            gp_lambda=self.gp_lambda,
            critic_updates=self.critic_updates,
            phase_shuffle=self.phase_shuffle,
            adam_lr=self.adam_lr,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            epochs=self.epochs,
            latent=self.latent,
            z_len=self.z_len,
            generator_steps=self.generator_steps,
            val_fraction=self.val_fraction,
            is_eval_every=self.is_eval_every,
            is_eval_batch=self.is_eval_batch,
        )

    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            adam_lr=self.adam_lr,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            val_fraction=self.val_fraction,
        )

    def denoiser(self) -> DenoiserConfig:
        return DenoiserConfig(
            d=self.model_dim,
            epochs=self.epochs,
            batch_size=self.batch_size,
            adam_lr=self.adam_lr,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            phase_shuffle=self.phase_shuffle,
            val_fraction=self.val_fraction,
        )

    def noise_ranges(self) -> NoiseRanges:
        return NoiseRanges(
            bw_freq_hz=(0.0, self.bw_freq_max_hz),
            bw_amp=(0.0, self.bw_amp_max),
            pl_amp=(0.0, self.pl_amp_max),
            chirp_amp=(0.0, self.chirp_amp_max),
            chirp_mod_freq_hz=(self.chirp_mod_min_hz, self.chirp_mod_max_hz),
        )


class ConfigError(ValueError):
    pass


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "int | None":
        return None if raw.lower() in ("", "none") else int(raw)
    return raw


def load_config(path: str | Path | None) -> RunConfig:
    """Parse a key=value file; `#` starts a comment; unknown keys are errors."""
    cfg = RunConfig()
    if path is None:
        return cfg
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown configuration key {key!r}")
        try:
            setattr(cfg, key, _parse_value(key, raw))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r}") from exc
    return cfg
