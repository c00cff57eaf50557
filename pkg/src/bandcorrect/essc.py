"""Signal conditioning and the 30-value ESSC fingerprint.

The fingerprint holds, for the conditioned waveform, its derivative and its
integral (in that order), ten statistics each::

    SSC amplitude mean, SSC period mean, SSC amplitude deviation,
    SSC period deviation, central moments 2..4, cumulants 3..5

Everything here runs in time linear in the number of samples: the median and
moving-mean filters use fixed windows, and the statistics are a mean pass plus
one accumulation pass. The plain numpy functions below are the readable
reference; :func:`fingerprint` runs the same arithmetic as a compiled kernel so
per-call overhead does not swamp the linear term on short records.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numba import njit
from scipy.ndimage import median_filter, uniform_filter1d

from .waveform import Signal, normalize

FINGERPRINT_SIZE = 30
SSC_THRESHOLD = 0.05
STAT_NAMES = (
    "ssc_amp_mean",
    "ssc_period_mean",
    "ssc_amp_dev",
    "ssc_period_dev",
    "moment2",
    "moment3",
    "moment4",
    "cumulant3",
    "cumulant4",
    "cumulant5",
)
FEATURE_NAMES = tuple(f"{src}_{stat}" for src in ("signal", "derivative", "integral") for stat in STAT_NAMES)


class NoPulseError(ValueError):
    """Conditioning found nothing above the pulse threshold."""


@dataclass(frozen=True)
class ConditioningConfig:
    median_window: int = 9
    mean_window: int = 61
    pulse_threshold_fraction: float = 0.1
    baseline_fraction: float = 0.1
    # length of the record kept around the detected pulse
    pulse_window_fraction: float = 0.9
    # SSC turning-point reversal, as a fraction of each waveform's peak-to-peak range
    ssc_threshold_fraction: float = 0.05

    def __post_init__(self):
        for name in ("median_window", "mean_window"):
            w = getattr(self, name)
            if int(w) != w or w < 1 or w % 2 == 0:
                raise ValueError(f"{name} must be an odd integer >= 1, got {w}")
        for name in ("pulse_threshold_fraction", "baseline_fraction"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0.0 <= self.ssc_threshold_fraction < 1.0:
            raise ValueError(f"ssc_threshold_fraction must lie in [0, 1), got {self.ssc_threshold_fraction}")
        if not 0.0 < self.pulse_window_fraction <= 1.0:
            raise ValueError(f"pulse_window_fraction must lie in (0, 1], got {self.pulse_window_fraction}")

    def to_dict(self):
        return asdict(self)


def baseline_level(x, fraction) -> float:
    """Mean of the ``fraction`` of samples lying closest to the median.

    Shifts exactly with a constant offset, so subtracting it cancels any DC
    pedestal while ignoring the pulse itself.
    """
    x = np.asarray(x, dtype=float)
    k = max(1, int(round(fraction * x.size)))
    med = np.median(x)
    nearest = np.argpartition(np.abs(x - med), k - 1)[:k]
    return float(x[nearest].mean())


def detect_pulse(x, threshold_fraction) -> tuple[int, int]:
    """Bounds ``[start, stop)`` of the contiguous run above threshold holding the peak."""
    a = np.abs(np.asarray(x, dtype=float))
    peak_idx = int(np.argmax(a))
    thr = threshold_fraction * a[peak_idx]
    above = a > thr
    if not above.any():
        raise NoPulseError("no samples exceed the pulse threshold")
    below = np.flatnonzero(~above)
    left = below[below < peak_idx]
    right = below[below > peak_idx]
    start = int(left[-1]) + 1 if left.size else 0
    stop = int(right[0]) if right.size else a.size
    return start, stop


def condition(raw: Signal, config: ConditioningConfig = ConditioningConfig()) -> Signal:
    """Filter, remove offset, locate and crop the pulse, then normalize.

    The kept window spans ``pulse_window_fraction`` of the record, centred on
    the run of samples above ``pulse_threshold_fraction`` of the peak that
    contains the peak, and is slid back inside the record when needed.
    """
    x = raw.samples
    if np.ptp(x) == 0:
        raise ValueError("cannot condition a constant signal")
    if config.median_window > 1:
        x = median_filter(x, size=config.median_window, mode="nearest")
    if config.mean_window > 1:
        x = uniform_filter1d(x, size=config.mean_window, mode="nearest")
    x = x - baseline_level(x, config.baseline_fraction)

    if np.max(np.abs(x)) == 0:
        raise NoPulseError("signal is flat after filtering")
    start, stop = detect_pulse(x, config.pulse_threshold_fraction)
    n = x.size
    width = max(2, int(round(config.pulse_window_fraction * n)))
    centre = (start + stop - 1) / 2.0
    lo = int(round(centre - (width - 1) / 2.0))
    lo = min(max(lo, 0), n - width)
    x = x[lo : lo + width]
    if np.ptp(x) == 0:
        raise NoPulseError("pulse window is flat")
    return normalize(Signal(x, raw.t0 + lo * raw.dt, raw.dt, raw.label))


def _derivative(x, dt):
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[-1] = (x[-1] - x[-2]) / dt
    return d


def _integral(x, dt):
    out = np.empty_like(x)
    out[0] = 0.0
    np.cumsum((x[1:] + x[:-1]) * (0.5 * dt), out=out[1:])
    return out


def derivative(signal: Signal) -> Signal:
    """Central differences, one-sided at the ends."""
    if len(signal) < 2:
        raise ValueError("derivative needs at least two samples")
    return signal.with_samples(_derivative(signal.samples, signal.dt))


def integral(signal: Signal) -> Signal:
    """Running trapezoidal integral starting at zero."""
    if len(signal) < 2:
        return signal.with_samples(np.zeros(1))
    return signal.with_samples(_integral(signal.samples, signal.dt))


def local_extrema(x) -> np.ndarray:
    """Indices of interior local extrema; a flat run counts once, at its midpoint."""
    x = np.asarray(x, dtype=float)
    d = np.diff(x)
    nz = np.flatnonzero(d != 0)
    if nz.size < 2:
        return np.empty(0, dtype=int)
    s = np.sign(d[nz])
    turn = np.flatnonzero(s[1:] != s[:-1])
    # the extremum (or plateau) spans samples nz[j] + 1 .. nz[j + 1]
    first = nz[turn] + 1
    last = nz[turn + 1]
    return (first + last) // 2


def turning_points(x, threshold=0.0) -> np.ndarray:
    """Interior extrema that survive a reversal of more than ``threshold``.

    Walks the local extrema keeping a running peak (or trough) and confirms it
    once the waveform has moved back by more than ``threshold``; smaller
    wiggles are absorbed into the current swing. With ``threshold=0`` this is
    exactly :func:`local_extrema`.
    """
    x = np.asarray(x, dtype=float)
    ext = local_extrema(x)
    if threshold <= 0 or ext.size == 0:
        return ext
    path = np.concatenate([[0], ext, [x.size - 1]])
    v = x[path].tolist()
    out = []
    trend, hi, lo, cur = 0, 0, 0, 0
    for k in range(1, len(v)):
        if trend == 0:
            if v[k] > v[hi]:
                hi = k
            if v[k] < v[lo]:
                lo = k
            if v[hi] - v[lo] > threshold:
                trend = 1 if hi > lo else -1
                cur = max(hi, lo)
        elif trend > 0:
            if v[k] > v[cur]:
                cur = k
            elif v[cur] - v[k] > threshold:
                out.append(cur)
                trend, cur = -1, k
        else:
            if v[k] < v[cur]:
                cur = k
            elif v[k] - v[cur] > threshold:
                out.append(cur)
                trend, cur = 1, k
    return path[np.array(out, dtype=int)]


def _ssc(x, dt, threshold_fraction):
    idx = turning_points(x, threshold_fraction * (x.max() - x.min()))
    if idx.size < 2:
        raise ValueError(f"SSC needs at least 2 local extrema, found {idx.size}")
    amp = np.abs(np.diff(x[idx]))
    period = (2.0 * dt) * np.diff(idx)
    am, pm = amp.mean(), period.mean()
    return [am, pm, np.abs(amp - am).mean(), np.abs(period - pm).mean()]


def ssc_params(signal: Signal, threshold_fraction=0.0) -> np.ndarray:
    """Hirsch-style SSC: mean and mean absolute deviation of segment amplitudes and periods.

    Segments run between consecutive turning points; a segment's amplitude is
    the absolute change between its end values and its period is twice its
    duration. ``threshold_fraction`` (of the peak-to-peak range) sets the
    reversal a turning point needs, so noise ripple does not split segments.
    """
    return np.array(_ssc(signal.samples, signal.dt, threshold_fraction))


def _moments(x):
    """Central moments of orders 2..5 from one pass over the deviations."""
    dev = x - x.mean()
    d2 = dev * dev
    d3 = d2 * dev
    return d2.mean(), d3.mean(), (d2 * d2).mean(), (d3 * d2).mean()


def central_moments(x, orders=(2, 3, 4)) -> np.ndarray:
    """``(1/N) sum (x - mean)^k`` for each requested order."""
    x = np.asarray(getattr(x, "samples", x), dtype=float)
    dev = x - x.mean()
    res = {}
    p = np.ones_like(dev)
    for k in range(1, max(orders) + 1):
        p = p * dev
        if k in orders:
            res[k] = float(p.mean())
    return np.array([res[k] for k in orders])


def _cumulants_from_moments(m2, m3, m4, m5):
    return m3, m4 - 3.0 * m2 * m2, m5 - 10.0 * m3 * m2


def cumulants(x, orders=(3, 4, 5)) -> np.ndarray:
    """Cumulants of orders 1..5 derived from the central moments."""
    x = np.asarray(getattr(x, "samples", x), dtype=float)
    m2, m3, m4, m5 = _moments(x)
    k3, k4, k5 = _cumulants_from_moments(m2, m3, m4, m5)
    table = {1: float(x.mean()), 2: m2, 3: k3, 4: k4, 5: k5}
    try:
        return np.array([table[k] for k in orders])
    except KeyError as exc:
        raise ValueError(f"cumulant order {exc.args[0]} not supported (1..5)") from None


def _stats(x, dt, ssc_threshold):
    m2, m3, m4, m5 = _moments(x)
    return [*_ssc(x, dt, ssc_threshold), m2, m3, m4, *_cumulants_from_moments(m2, m3, m4, m5)]


def waveform_stats(signal: Signal, ssc_threshold=SSC_THRESHOLD) -> np.ndarray:
    """The ten per-waveform statistics in fingerprint order."""
    return np.array(_stats(signal.samples, signal.dt, ssc_threshold))


@njit(cache=True)
def _stats_kernel(x, dt, frac, out, o):
    """Fused single-pass version of :func:`waveform_stats`; returns the turning-point count."""
    n = x.size
    mean = x.sum() / n
    s2 = s3 = s4 = s5 = 0.0
    lo_v = hi_v = x[0]
    for i in range(n):
        d = x[i] - mean
        d2 = d * d
        s2 += d2
        s3 += d2 * d
        s4 += d2 * d2
        s5 += d2 * d2 * d
        lo_v = min(lo_v, x[i])
        hi_v = max(hi_v, x[i])
    m2, m3, m4, m5 = s2 / n, s3 / n, s4 / n, s5 / n
    thr = frac * (hi_v - lo_v)

    # local extrema, plateaus collapsed to their midpoint; bracketed by the end
    # samples when a hysteresis pass follows
    hyst = thr > 0
    pos = np.empty(n + 2, np.int64)
    k = 0
    if hyst:
        pos[0] = 0
        k = 1
    prev_i, prev_s = -1, 0
    for i in range(n - 1):
        dd = x[i + 1] - x[i]
        if dd != 0:
            sgn = 1 if dd > 0 else -1
            if prev_s != 0 and sgn != prev_s:
                pos[k] = (prev_i + 1 + i) // 2
                k += 1
            prev_s, prev_i = sgn, i

    if hyst:
        if k == 1:
            k = 0
        else:
            pos[k] = n - 1
            k += 1
            tp = np.empty(k, np.int64)
            m = 0
            trend, hi, lo, cur = 0, 0, 0, 0
            for j in range(1, k):
                v = x[pos[j]]
                if trend == 0:
                    if v > x[pos[hi]]:
                        hi = j
                    if v < x[pos[lo]]:
                        lo = j
                    if x[pos[hi]] - x[pos[lo]] > thr:
                        trend = 1 if hi > lo else -1
                        cur = max(hi, lo)
                elif trend > 0:
                    if v > x[pos[cur]]:
                        cur = j
                    elif x[pos[cur]] - v > thr:
                        tp[m] = pos[cur]
                        m += 1
                        trend, cur = -1, j
                else:
                    if v < x[pos[cur]]:
                        cur = j
                    elif v - x[pos[cur]] > thr:
                        tp[m] = pos[cur]
                        m += 1
                        trend, cur = 1, j
            pos, k = tp, m

    am = pm = ad = pd = 0.0
    if k >= 2:
        for j in range(k - 1):
            am += abs(x[pos[j + 1]] - x[pos[j]])
            pm += 2.0 * dt * (pos[j + 1] - pos[j])
        am /= k - 1
        pm /= k - 1
        for j in range(k - 1):
            ad += abs(abs(x[pos[j + 1]] - x[pos[j]]) - am)
            pd += abs(2.0 * dt * (pos[j + 1] - pos[j]) - pm)
        ad /= k - 1
        pd /= k - 1
    out[o:o + 10] = (am, pm, ad, pd, m2, m3, m4, m3, m4 - 3.0 * m2 * m2, m5 - 10.0 * m3 * m2)
    return k


@njit(cache=True)
def _fingerprint_kernel(x, dt, frac):
    n = x.size
    d = np.empty(n)
    for i in range(1, n - 1):
        d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[n - 1] = (x[n - 1] - x[n - 2]) / dt
    c = np.empty(n)
    c[0] = 0.0
    for i in range(1, n):
        c[i] = c[i - 1] + 0.5 * dt * (x[i] + x[i - 1])
    out = np.empty(30)
    counts = np.empty(3, np.int64)
    counts[0] = _stats_kernel(x, dt, frac, out, 0)
    counts[1] = _stats_kernel(d, dt, frac, out, 10)
    counts[2] = _stats_kernel(c, dt, frac, out, 20)
    return out, counts


def fingerprint(conditioned: Signal, ssc_threshold=SSC_THRESHOLD) -> np.ndarray:
    """30-value ESSC feature vector of an already conditioned waveform.

    Computed by one compiled pass per waveform; it agrees with concatenating
    :func:`waveform_stats` of the signal, its derivative and its integral.
    """
    x = np.ascontiguousarray(conditioned.samples, dtype=float)
    if x.size < 3:
        raise ValueError("fingerprint needs at least three samples")
    fp, counts = _fingerprint_kernel(x, float(conditioned.dt), float(ssc_threshold))
    if counts.min() < 2:
        src = ("signal", "derivative", "integral")[int(np.argmin(counts))]
        raise ValueError(f"SSC needs at least 2 local extrema, found {counts.min()} in the {src}")
    if not np.all(np.isfinite(fp)):
        raise ValueError("fingerprint contains non-finite values")
    return fp


def essc(raw: Signal, config: ConditioningConfig = ConditioningConfig()) -> np.ndarray:
    """Conditioning followed by :func:`fingerprint`."""
    return fingerprint(condition(raw, config), config.ssc_threshold_fraction)
