"""Attenuating one band at a time: the aw-set of a pulse.

Each band classifier is trained on the family f - a * g_n for the five
attenuations a in {1, 0.75, 0.5, 0.25, 0}. Here we build those members and
look at how they move the time-domain statistics the classifier sees.
"""
import numpy as np

from bandcorrect.correction import build_awset
from bandcorrect.essc import FEATURE_NAMES, essc
from bandcorrect.spectral import FilterBank, attenuate_band, decompose
from bandcorrect.waveform import Signal, rms_error_percent, sinc_pulse

bank = FilterBank(7.5, 4)
f = sinc_pulse(10000)

# the band-rejection filter and the time-domain subtraction give the same member
g1 = decompose(f, bank)[1]
a = 0.5
via_time = f.samples - a * g1.samples
via_freq = attenuate_band(f, bank, 1, a).samples
print("time vs frequency path, max diff: %.1e" % np.abs(via_time - via_freq).max())

# distance of each member from the original, per band
print("\ne_RMS% of each member against the original")
print("band " + "".join("%8s" % ("%g%%" % (100 * a)) for a in (1, 0.75, 0.5, 0.25, 0)))
for n in range(bank.n_bands):
    aw = build_awset(f, bank, n)
    print("%4d " % n + "".join("%8.2f" % rms_error_percent(w, f) for w in aw.waveforms))

# fingerprints of the noise-free, decimated members of band 0
print("\nfirst SSC parameters of band 0 members (noise free, decimated by 10)")
aw = build_awset(f, bank, 0)
for a, w in zip(aw.levels, aw.waveforms):
    fp = essc(Signal(w.samples[::10], 0, w.dt * 10))
    print("a=%-5g " % a + "  ".join("%s=%.4f" % (FEATURE_NAMES[i], fp[i]) for i in range(4)))
