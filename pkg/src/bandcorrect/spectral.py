"""Fourier transform pair, cos-profile filter bank and band filtering.

Every filter here is a real, even function of frequency, evaluated exactly at
each DFT bin (negative frequencies included), so filtered spectra stay
Hermitian and their inverse transforms are real.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .waveform import Signal

HERMITIAN_RTOL = 1e-9
IMAG_RTOL = 1e-9
OUT_OF_BAND_ENERGY_LIMIT = 1e-3


@dataclass(frozen=True)
class Spectrum:
    """Unnormalized DFT of a Signal, bins in numpy's FFT order."""

    bins: np.ndarray
    dnu: float
    num_time_samples: int
    t0: float = 0.0
    dt: float = 1.0

    @property
    def nu(self) -> np.ndarray:
        return np.fft.fftfreq(self.num_time_samples, self.dt)

    def magnitude_normalized(self) -> np.ndarray:
        mag = np.abs(self.bins)
        peak = mag.max()
        return mag / peak if peak > 0 else mag

    def hermitian_asymmetry(self, scale=None) -> float:
        """max |X[k] - conj(X[-k])|, relative to ``scale`` (default: the largest bin)."""
        x = self.bins
        mirrored = np.conj(np.roll(x[::-1], 1))
        scale = max(np.max(np.abs(x)), scale or 0.0)
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(x - mirrored)) / scale)


def dft(signal: Signal) -> Spectrum:
    n = len(signal)
    return Spectrum(np.fft.fft(signal.samples), 1.0 / (n * signal.dt), n, signal.t0, signal.dt)


def idft(spectrum: Spectrum, label=None, scale=None) -> Signal:
    """Inverse transform to a real Signal.

    ``scale`` is the bin magnitude the tolerances are measured against; pass
    the unfiltered spectrum's largest bin when inverting a filtered copy, so a
    band holding nothing but rounding noise is not mistaken for an asymmetric one.
    """
    asym = spectrum.hermitian_asymmetry(scale)
    if asym > HERMITIAN_RTOL:
        raise ValueError(f"spectrum is not Hermitian (relative asymmetry {asym:.3e})")
    z = np.fft.ifft(spectrum.bins)
    peak = np.max(np.abs(z.real)) if z.size else 0.0
    resid = np.max(np.abs(z.imag)) if z.size else 0.0
    floor = (scale or 0.0) / max(z.size, 1)
    if resid > IMAG_RTOL * max(peak, floor, np.finfo(float).tiny):
        raise ValueError(f"inverse transform has imaginary residue {resid:.3e} (peak {peak:.3e})")
    return Signal(z.real, spectrum.t0, spectrum.dt, label)


def frequency_grid(signal: Signal) -> np.ndarray:
    """Bin frequencies of ``dft(signal)``."""
    return np.fft.fftfreq(len(signal), signal.dt)


@dataclass(frozen=True)
class FilterBank:
    """``n_max + 1`` equispaced cos-profile filters covering ``|nu| <= nu_max``."""

    nu_max: float = 7.5
    n_max: int = 4

    def __post_init__(self):
        if not self.nu_max > 0:
            raise ValueError(f"nu_max must be positive, got {self.nu_max}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def n_bands(self) -> int:
        return self.n_max + 1

    @property
    def delta_nu(self) -> float:
        return 2.0 * self.nu_max / self.n_max

    @property
    def centers(self) -> np.ndarray:
        return np.arange(self.n_bands) * self.delta_nu / 2.0

    def _check_band(self, n):
        if not 0 <= n <= self.n_max:
            raise IndexError(f"band index {n} outside 0..{self.n_max}")


def _gate(nu, width):
    return (np.abs(nu) <= width / 2.0).astype(float)


def cos_filter_profile(bank: FilterBank, n: int, grid) -> np.ndarray:
    """Band ``n`` filter evaluated at the frequencies in ``grid``."""
    bank._check_band(n)
    nu = np.asarray(grid, dtype=float)
    dnu = bank.delta_nu
    c = np.cos(2.0 * np.pi * nu / dnu)
    if n == 0:
        return 0.5 * (1.0 + c) * _gate(nu, dnu)
    centre = bank.centers[n]
    gates = _gate(nu - centre, dnu) + _gate(nu + centre, dnu)
    if n % 2 == 0:
        return 0.5 * (1.0 + c) * gates
    return 0.5 * (1.0 - c) * gates


def filter_bank_profiles(bank: FilterBank, grid) -> np.ndarray:
    """All band profiles stacked, shape ``(n_bands, len(grid))``."""
    return np.stack([cos_filter_profile(bank, n, grid) for n in range(bank.n_bands)])


def partition_of_unity_check(bank: FilterBank, grid) -> float:
    """Largest deviation of the summed profiles from 1 over ``|nu| <= nu_max``."""
    nu = np.asarray(grid, dtype=float)
    inside = np.abs(nu) <= bank.nu_max
    if not inside.any():
        return 0.0
    total = filter_bank_profiles(bank, nu[inside]).sum(axis=0)
    return float(np.max(np.abs(total - 1.0)))


def out_of_band_energy_fraction(signal: Signal, nu_max: float) -> float:
    spec = dft(signal)
    power = np.abs(spec.bins) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[np.abs(spec.nu) > nu_max].sum() / total)


def apply_profile(signal: Signal, profile, label=None) -> Signal:
    """Multiply the spectrum of ``signal`` by a real even ``profile`` and invert."""
    spec = dft(signal)
    filtered = Spectrum(spec.bins * profile, spec.dnu, spec.num_time_samples, spec.t0, spec.dt)
    return idft(filtered, label, scale=np.max(np.abs(spec.bins)))


def decompose(signal: Signal, bank: FilterBank) -> list[Signal]:
    """Band wavelets: inverse transforms of the spectrum times each band filter."""
    frac = out_of_band_energy_fraction(signal, bank.nu_max)
    if frac >= OUT_OF_BAND_ENERGY_LIMIT:
        warnings.warn(
            f"{frac:.2%} of the signal energy lies above nu_max={bank.nu_max}; "
            "the band wavelets will not reconstruct it",
            stacklevel=2,
        )
    spec = dft(signal)
    profiles = filter_bank_profiles(bank, spec.nu)
    scale = np.max(np.abs(spec.bins))
    out = []
    for n, prof in enumerate(profiles):
        s = Spectrum(spec.bins * prof, spec.dnu, spec.num_time_samples, spec.t0, spec.dt)
        out.append(idft(s, label=f"band{n}", scale=scale))
    return out


def band_rejection_profile(bank: FilterBank, n: int, delta_a: float, grid) -> np.ndarray:
    """``1 - delta_a * f_n(nu)``: attenuates band ``n`` by the fraction ``delta_a``."""
    if not 0.0 <= delta_a <= 1.0:
        raise ValueError(f"attenuation must lie in [0, 1], got {delta_a}")
    return 1.0 - delta_a * cos_filter_profile(bank, n, grid)


def attenuate_band(signal: Signal, bank: FilterBank, n: int, delta_a: float) -> Signal:
    """Signal with band ``n`` attenuated by ``delta_a``, via the band-rejection filter."""
    prof = band_rejection_profile(bank, n, delta_a, frequency_grid(signal))
    return apply_profile(signal, prof, label=f"band{n}@{delta_a:g}")


def system_response_profile(bank: FilterBank, factors, grid) -> np.ndarray:
    """Product of band-rejection filters, one per band, with the given factors."""
    factors = np.asarray(factors, dtype=float)
    if factors.shape != (bank.n_bands,):
        raise ValueError(f"expected {bank.n_bands} factors, got shape {factors.shape}")
    nu = np.asarray(grid, dtype=float)
    out = np.ones_like(nu)
    for n, a in enumerate(factors):
        if a != 0.0:
            out = out * (1.0 - a * cos_filter_profile(bank, n, nu))
    return out


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    """Columns ``nu,re,im,mag_normalized``, rows in ascending frequency."""
    order = np.argsort(spectrum.nu, kind="stable")
    mag = spectrum.magnitude_normalized()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu", "re", "im", "mag_normalized"])
        for k in order:
            z = spectrum.bins[k]
            w.writerow([repr(float(spectrum.nu[k])), repr(float(z.real)), repr(float(z.imag)), repr(float(mag[k]))])


def write_profile_csv(grid, values, path, header=("nu", "value")) -> None:
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(grid, kind="stable")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for k in order:
            w.writerow([repr(float(grid[k])), repr(float(values[k]))])
