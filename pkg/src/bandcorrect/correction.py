"""Altered-waveform sets, per-band datasets and the spectral correction pipeline."""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import NoiseConfig, simulate_acquisition
from .ann import N_CLASSES
from .essc import FINGERPRINT_SIZE, ConditioningConfig, essc
from .spectral import (
    FilterBank,
    apply_profile,
    attenuate_band,
    cos_filter_profile,
    frequency_grid,
    system_response_profile,
)
from .waveform import Signal, rms_error_percent

ATTENUATION_LEVELS = (1.0, 0.75, 0.5, 0.25, 0.0)
# attenuation assigned to each of the six classes; "not in this band" counts as none
CLASS_ATTENUATION = (1.0, 0.75, 0.5, 0.25, 0.0, 0.0)
FACTOR_CAP = 0.99


@dataclass(frozen=True)
class AwSet:
    band_index: int
    levels: tuple
    waveforms: tuple

    def __getitem__(self, c):
        """Waveform of 1-based class ``c``."""
        return self.waveforms[c - 1]


def build_awset(original: Signal, bank: FilterBank, n: int, levels=ATTENUATION_LEVELS) -> AwSet:
    levels = tuple(float(a) for a in levels)
    waves = tuple(attenuate_band(original, bank, n, a) for a in levels)
    return AwSet(n, levels, waves)


@dataclass
class Dataset:
    """Fingerprint rows with 1-based class labels.

    ``source_band`` and ``attenuation`` record which waveform produced each
    row; they are bookkeeping only and are not written to CSV.
    """

    features: np.ndarray
    labels: np.ndarray
    source_band: np.ndarray = None
    attenuation: np.ndarray = None

    def __len__(self):
        return len(self.labels)

    def class_counts(self):
        return {c: int((self.labels == c).sum()) for c in range(1, N_CLASSES + 1)}

    def write_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"p{i:02d}" for i in range(self.features.shape[1])] + ["label"])
            for row, lab in zip(self.features, self.labels):
                w.writerow([repr(float(v)) for v in row] + [int(lab)])

    @classmethod
    def read_csv(cls, path):
        with Path(path).open() as fh:
            header = fh.readline().strip().split(",")
        if header[-1] != "label" or len(header) != FINGERPRINT_SIZE + 1:
            raise ValueError(f"{path}: expected columns p00..p29,label")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, :-1], data[:, -1].astype(int))


def _split_evenly(total, parts):
    """``parts`` block sizes of ``total // parts``; the last one absorbs the remainder."""
    base = total // parts
    return [base] * (parts - 1) + [total - base * (parts - 1)]


def nb_donor_plan(samples_per_class, donor_bands, levels=ATTENUATION_LEVELS):
    """(band, attenuation, count) triples that make up the "not in this band" class."""
    nonzero = [a for a in levels if a != 0.0]
    plan = []
    for band, block in zip(donor_bands, _split_evenly(samples_per_class, len(donor_bands))):
        for a, k in zip(nonzero, _split_evenly(block, len(nonzero))):
            plan.append((band, a, k))
    return plan


def acquire_fingerprint(waveform, noise, conditioning, rng):
    return essc(simulate_acquisition(waveform, noise, rng), conditioning)


def build_training_dataset(original: Signal, bank: FilterBank, n: int, samples_per_class=1000,
                           noise: NoiseConfig = NoiseConfig(), seed=0,
                           conditioning: ConditioningConfig = ConditioningConfig(),
                           levels=ATTENUATION_LEVELS) -> Dataset:
    """Labelled fingerprints for the classifier of band ``n``.

    Classes 1-5 are fresh acquisitions of band ``n``'s aw-set members. Class 6
    draws evenly from the other bands' attenuated members (never the
    unattenuated one), each donor block split evenly over the non-zero
    attenuations with the last group taking any remainder.
    """
    bank._check_band(n)
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    rng = np.random.default_rng([seed, n])
    awsets = {b: build_awset(original, bank, b, levels) for b in range(bank.n_bands)}

    jobs = []  # (label, band, attenuation, count)
    for c, a in enumerate(levels, start=1):
        jobs.append((c, n, a, samples_per_class))
    donors = [b for b in range(bank.n_bands) if b != n]
    for band, a, k in nb_donor_plan(samples_per_class, donors, levels):
        jobs.append((len(levels) + 1, band, a, k))

    feats, labels, bands, atts = [], [], [], []
    for label, band, a, count in jobs:
        wave = awsets[band].waveforms[awsets[band].levels.index(a)]
        for _ in range(count):
            feats.append(acquire_fingerprint(wave, noise, conditioning, rng))
        labels += [label] * count
        bands += [band] * count
        atts += [a] * count
    return Dataset(np.array(feats), np.array(labels), np.array(bands), np.array(atts))


def mean_correction_factor(probabilities, class_attenuation=CLASS_ATTENUATION) -> float:
    """Expected attenuation under the classifier's class probabilities."""
    p = np.asarray(probabilities, dtype=float)
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return float(np.dot(np.asarray(class_attenuation, dtype=float), p))


def _check_factors(bank, factors, cap):
    f = np.asarray(factors, dtype=float)
    if f.shape != (bank.n_bands,):
        raise ValueError(f"expected {bank.n_bands} factors, got shape {f.shape}")
    if np.any(f < 0):
        raise ValueError(f"correction factors must be non-negative, got {f}")
    if np.any(f > cap):
        raise ValueError(f"correction factor {f.max():.6g} exceeds the cap {cap}; the inverse filter is singular at 1")
    return f


def compensation_profile(bank: FilterBank, factors, grid) -> np.ndarray:
    """Inverse of the system response for the given factors."""
    return 1.0 / system_response_profile(bank, factors, grid)


def corrected_signal(original: Signal, bank: FilterBank, factors, cap=FACTOR_CAP) -> Signal:
    """Pre-compensated input: the original filtered by the inverse system response."""
    f = _check_factors(bank, factors, cap)
    return apply_profile(original, compensation_profile(bank, f, frequency_grid(original)), label="corrected")


def series_multi_indices(n_terms, max_total_order):
    """All exponent tuples of length ``n_terms`` with sum <= ``max_total_order``."""
    for q in itertools.product(range(max_total_order + 1), repeat=n_terms):
        if sum(q) <= max_total_order:
            yield q


def generalized_wavelet(original: Signal, bank: FilterBank, powers) -> Signal:
    """Original filtered by the product of band profiles raised to ``powers``."""
    nu = frequency_grid(original)
    prof = np.ones_like(nu)
    for n, q in enumerate(powers):
        if q:
            prof = prof * cos_filter_profile(bank, n, nu) ** q
    return apply_profile(original, prof)


def corrected_signal_series(original: Signal, bank: FilterBank, factors, max_total_order: int) -> Signal:
    """Geometric-series expansion of :func:`corrected_signal`, truncated by total power.

    Sums ``prod_n factor_n**q_n`` times the generalized wavelet of exponents
    ``q`` over every ``q`` with ``sum(q) <= max_total_order``. The all-zero
    exponent contributes the original itself and the unit exponents give the
    first-order band wavelets. Bands whose factor is zero drop out.
    """
    f = np.asarray(factors, dtype=float)
    if f.shape != (bank.n_bands,):
        raise ValueError(f"expected {bank.n_bands} factors, got shape {f.shape}")
    if max_total_order < 0:
        raise ValueError("max_total_order must be >= 0")
    active = np.flatnonzero(f != 0)
    out = np.zeros(len(original))
    for q_active in series_multi_indices(active.size, max_total_order):
        powers = np.zeros(bank.n_bands, dtype=int)
        powers[active] = q_active
        coeff = float(np.prod(f[active] ** np.asarray(q_active)))
        if sum(q_active) == 0:
            out = out + original.samples
        else:
            out = out + coeff * generalized_wavelet(original, bank, powers).samples
    return original.with_samples(out, label=f"corrected_series{max_total_order}")


def system_output(signal: Signal, bank: FilterBank, factors) -> Signal:
    """Signal passed through the band-rejection product with the given factors."""
    prof = system_response_profile(bank, factors, frequency_grid(signal))
    return apply_profile(signal, prof, label="system_output")


@dataclass
class CorrectionResult:
    factors: np.ndarray
    corrected: Signal
    probabilities: np.ndarray
    fingerprints: np.ndarray
    capped: bool = False


def run_correction(real_input, original: Signal, models, bank: FilterBank,
                   conditioning: ConditioningConfig = ConditioningConfig(), cap=FACTOR_CAP) -> CorrectionResult:
    """Estimate per-band attenuations of an acquired waveform and pre-compensate the original.

    ``real_input`` may be one acquisition or a sequence of them; with several,
    each band's class probabilities are averaged over the acquisitions.
    Factors above ``cap`` are clipped to it with a warning.
    """
    inputs = [real_input] if isinstance(real_input, Signal) else list(real_input)
    if not inputs:
        raise ValueError("no input signals")
    models = list(models)
    if len(models) != bank.n_bands:
        raise ValueError(f"need one classifier per band ({bank.n_bands}), got {len(models)}")
    for n, m in enumerate(models):
        if m.band_index != n:
            raise ValueError(f"classifier at position {n} was trained for band {m.band_index}")

    fps = np.array([essc(s, conditioning) for s in inputs])
    probs = np.array([m.predict_proba(fps).mean(axis=0) for m in models])
    factors = np.array([mean_correction_factor(p) for p in probs])
    capped = bool(np.any(factors > cap))
    if capped:
        warnings.warn(f"correction factors {factors} clipped to {cap}", stacklevel=2)
        factors = np.minimum(factors, cap)
    return CorrectionResult(factors, corrected_signal(original, bank, factors, cap), probs, fps, capped)


@dataclass
class EndToEndResult:
    e_rms_percent: float
    correction: CorrectionResult
    true_factors: np.ndarray
    system_output: Signal
    acquired: list = field(default_factory=list)
    output: Signal = None


def end_to_end_eval(true_factors, models, bank: FilterBank, original: Signal, noise: NoiseConfig = NoiseConfig(),
                    rng=None, conditioning: ConditioningConfig = ConditioningConfig(), repeats=1) -> EndToEndResult:
    """Simulate a system, estimate its attenuations and score the corrected output.

    The original goes through the system, is acquired ``repeats`` times and
    fed to :func:`run_correction`; the corrected input is then passed through
    the same system and compared with the original by :func:`rms_error_percent`.
    """
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    true_factors = np.asarray(true_factors, dtype=float)
    distorted = system_output(original, bank, true_factors)
    acquired = [simulate_acquisition(distorted, noise, rng) for _ in range(repeats)]
    result = run_correction(acquired, original, models, bank, conditioning)
    out = system_output(result.corrected, bank, true_factors)
    return EndToEndResult(rms_error_percent(out, original), result, true_factors, distorted, acquired, out)


def pattern_count(n_levels=len(ATTENUATION_LEVELS), n_max=4) -> int:
    """Waveform patterns one band classifier must separate."""
    return n_levels + (n_levels - 1) * n_max


def global_pattern_count(n_levels=len(ATTENUATION_LEVELS), n_max=4) -> int:
    """Patterns a single all-band classifier would face."""
    return n_levels ** (n_max + 1)
