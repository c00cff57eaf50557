"""Estimating a system's band attenuations and pre-compensating its input.

A simulated system attenuates band 0 by 50% and band 1 by 12.5%. Trained
band classifiers read five noisy acquisitions of its output, their softmax
outputs become per-band correction factors, and the corrected input is
pushed through the same system. With an oracle in place of the classifiers
the output would match the original exactly; the classifiers here are small
so the script finishes in seconds.
"""
import numpy as np

from bandcorrect.acquisition import NoiseConfig
from bandcorrect.ann import TrainConfig, train
from bandcorrect.correction import build_training_dataset, corrected_signal_series, end_to_end_eval
from bandcorrect.spectral import FilterBank
from bandcorrect.waveform import rms_error_percent, sinc_pulse

bank = FilterBank(7.5, 4)
f = sinc_pulse(10000)
true_factors = np.array([0.5, 0.125, 0, 0, 0])

# one classifier per band, 150 samples per class
models = []
for n in range(bank.n_bands):
    ds = build_training_dataset(f, bank, n, samples_per_class=150, seed=0)
    model, _ = train(ds.features, ds.labels, TrainConfig(), hidden_size=20, band_index=n)
    models.append(model)
    print("trained band %d, validation cross-entropy %.3f" % (n, model.validation_loss))

res = end_to_end_eval(true_factors, models, bank, f, NoiseConfig(), np.random.default_rng(3), repeats=5)
print("\ntrue factors     ", true_factors)
print("estimated factors", np.round(res.correction.factors, 3))
print("system output alone:   e_RMS%% = %.2f" % rms_error_percent(res.system_output, f))
print("with pre-compensation: e_RMS%% = %.2f" % res.e_rms_percent)

# the closed-form correction against its low-order series expansions
exact = res.correction.corrected
for k in (1, 2, 4, 6):
    approx = corrected_signal_series(f, bank, res.correction.factors, k)
    print("series order %d: distance to closed form %.2f%%" % (k, rms_error_percent(approx, exact)))
