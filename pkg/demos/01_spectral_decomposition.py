"""Splitting a sinc pulse into cos-profile band wavelets.

The filter bank covers |nu| <= 7.5 with five overlapping cos-profile bands.
Because the profiles sum to one, the band wavelets add back up to the
band-limited pulse.
"""
import numpy as np

from bandcorrect.spectral import FilterBank, decompose, dft, filter_bank_profiles, frequency_grid
from bandcorrect.waveform import sinc_pulse

bank = FilterBank(nu_max=7.5, n_max=4)
print("band spacing", bank.delta_nu, "centres", bank.centers)

# the ideal pulse: 10000 samples on [0, 1], main lobe at t = 0.5
f = sinc_pulse(10000, center=0.5, bandwidth=3.75)
spec = dft(f)
nu = frequency_grid(f)

# profiles on a fine grid inside the covered range
grid = np.linspace(-bank.nu_max, bank.nu_max, 4096)
profiles = filter_bank_profiles(bank, grid)
print("max |sum of profiles - 1|:", np.abs(profiles.sum(axis=0) - 1).max())

# share of spectral energy that falls outside the bank
energy = np.abs(spec.bins) ** 2
print("energy outside |nu| <= 7.5: %.2e" % (energy[np.abs(nu) > bank.nu_max].sum() / energy.sum()))

# one wavelet per band, and how much of the pulse each carries
g = decompose(f, bank)
for n, w in enumerate(g):
    print("band %d  centre %5.3f  peak %+.4f  rms %.4f" % (n, bank.centers[n], w.samples[np.argmax(np.abs(w.samples))],
                                                          np.sqrt(np.mean(w.samples ** 2))))

# the wavelets reconstruct the pulse up to the out-of-band residue
rebuilt = np.sum([w.samples for w in g], axis=0)
print("reconstruction rms error: %.2e" % np.sqrt(np.mean((rebuilt - f.samples) ** 2)))
