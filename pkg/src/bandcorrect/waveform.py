"""Uniformly sampled real waveforms, sinc-pulse synthesis and the RMS error metric."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_NUM_SAMPLES = 10000
DEFAULT_SINC_BANDWIDTH = 3.75


@dataclass(frozen=True, eq=False)
class Signal:
    """Real waveform sampled at ``t_i = t0 + i * dt``.

    The sample array is copied and made read-only on construction, so a
    Signal can be shared freely.
    """

    samples: np.ndarray
    t0: float = 0.0
    dt: float = 1.0
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("signal must contain at least one sample")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return self.same_grid(other) and np.array_equal(self.samples, other.samples)

    __hash__ = None

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def with_samples(self, samples, label=None) -> "Signal":
        """Same time grid, new amplitudes."""
        return Signal(samples, self.t0, self.dt, label if label is not None else self.label)

    def same_grid(self, other: "Signal") -> bool:
        return len(self) == len(other) and self.t0 == other.t0 and self.dt == other.dt


def unit_grid(num_samples: int) -> tuple[float, float]:
    """(t0, dt) of ``num_samples`` points spanning [0, 1] inclusive."""
    if num_samples < 2:
        raise ValueError("need at least two samples to span [0, 1]")
    return 0.0, 1.0 / (num_samples - 1)


def sinc_pulse(num_samples=DEFAULT_NUM_SAMPLES, center=0.5, bandwidth=DEFAULT_SINC_BANDWIDTH) -> Signal:
    """sin(2*pi*B*(t - c)) / (2*pi*B*(t - c)) on the closed unit interval.

    The amplitude spectrum is (close to) flat for ``|nu| < bandwidth`` and
    vanishes above it, apart from truncation leakage.
    """
    if num_samples < 16:
        raise ValueError(f"num_samples must be >= 16, got {num_samples}")
    if not 0.0 < center < 1.0:
        raise ValueError(f"center must lie in (0, 1), got {center}")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    t0, dt = unit_grid(num_samples)
    t = t0 + dt * np.arange(num_samples)
    # np.sinc(x) = sin(pi x) / (pi x) with sinc(0) = 1
    x = np.sinc(2.0 * bandwidth * (t - center))
    return Signal(x, t0, dt, label="sinc")


def normalize(signal: Signal) -> Signal:
    """Scale to unit peak magnitude and remap the time grid onto [0, 1]."""
    x = signal.samples
    if np.ptp(x) == 0:
        raise ValueError("cannot normalize a constant signal")
    peak = np.max(np.abs(x))
    if len(x) == 1:
        raise ValueError("cannot normalize a single-sample signal")
    t0, dt = unit_grid(len(x))
    return Signal(x / peak, t0, dt, signal.label)


def rms_error_percent(observed: Signal, reference: Signal) -> float:
    """Peak-normalized RMS deviation of ``observed`` from ``reference``, in percent."""
    if not observed.same_grid(reference):
        raise ValueError(
            "signals are on different time grids "
            f"(N={len(observed)}/{len(reference)}, t0={observed.t0}/{reference.t0}, "
            f"dt={observed.dt}/{reference.dt})"
        )
    peak = reference.peak
    if peak == 0:
        raise ValueError("reference signal is identically zero")
    diff = observed.samples - reference.samples
    return float(100.0 / peak * np.sqrt(np.mean(diff * diff)))


def write_csv(signal: Signal, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for ti, xi in zip(signal.t, signal.samples):
            w.writerow([repr(float(ti)), repr(float(xi))])


def read_csv(path) -> Signal:
    """Inverse of :func:`write_csv`. The grid must be uniform."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t, x = data[:, 0], data[:, 1]
    if len(t) < 2:
        return Signal(x, t[0] if len(t) else 0.0, 1.0)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise ValueError(f"{path}: time grid is not uniform")
    return Signal(x, t[0], dt, label=Path(path).stem)
