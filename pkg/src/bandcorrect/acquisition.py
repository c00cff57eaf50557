"""Simulated acquisition chain: jitter, decimation, gain, offset and white noise."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .waveform import Signal


@dataclass(frozen=True)
class NoiseConfig:
    decimation_factor: int = 10
    jitter_max_samples: int = 9
    scale_reduction_max: float = 0.75
    offset_max_fraction: float = 0.05
    gaussian_sigma_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if int(self.decimation_factor) != self.decimation_factor or self.decimation_factor < 1:
            raise ValueError(f"decimation_factor must be an integer >= 1, got {self.decimation_factor}")
        if int(self.jitter_max_samples) != self.jitter_max_samples or self.jitter_max_samples < 0:
            raise ValueError(f"jitter_max_samples must be a non-negative integer, got {self.jitter_max_samples}")
        for name in ("scale_reduction_max", "offset_max_fraction", "gaussian_sigma_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def noiseless(cls, decimation_factor=10, seed=0):
        return cls(decimation_factor, 0, 0.0, 0.0, 0.0, seed)

    def to_dict(self):
        return asdict(self)


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def simulate_acquisition(ideal: Signal, config: NoiseConfig, rng: np.random.Generator) -> Signal:
    """Turn an ideal high-resolution waveform into a noisy, decimated record.

    Stages, in order: a uniform integer shift of 0..jitter_max_samples at the
    ideal resolution (the vacated tail is zero-filled), decimation keeping
    every M-th sample, a gain drawn from [1 - scale_reduction_max, 1], a
    constant offset and additive Gaussian noise. Offset bound and noise sigma
    are fractions of the peak magnitude after the gain stage.

    The output always has ``len(ideal) // M`` samples and keeps the ideal
    record's time origin, with spacing ``M * dt``.
    """
    m = config.decimation_factor
    n = len(ideal)
    if n < 16 * m:
        raise ValueError(f"ideal signal has {n} samples; need at least {16 * m} for decimation by {m}")

    shift = int(rng.integers(0, config.jitter_max_samples + 1))
    x = ideal.samples
    if shift:
        x = np.concatenate([x[shift:], np.zeros(shift)])
    x = x[: (n // m) * m : m]

    gain = rng.uniform(1.0 - config.scale_reduction_max, 1.0)
    x = gain * x
    ref = np.max(np.abs(x))

    offset = rng.uniform(-config.offset_max_fraction, config.offset_max_fraction) * ref
    noise = rng.normal(0.0, 1.0, size=x.size) * (config.gaussian_sigma_fraction * ref)
    x = x + offset + noise
    return Signal(x, ideal.t0, ideal.dt * m, ideal.label)
