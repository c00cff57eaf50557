"""Training a classifier for one band and reading its confusion matrix.

The full protocol uses 1000 samples per class and a hidden-size sweep over
5..40; this demo uses 200 per class and two sizes so it runs in
seconds. Pass a band index as the first argument (default 0).
"""
import sys

import numpy as np

from bandcorrect.acquisition import NoiseConfig
from bandcorrect.ann import CLASS_LABELS, TrainConfig, averaged_confusion_matrix, select_hidden_size
from bandcorrect.correction import build_training_dataset
from bandcorrect.spectral import FilterBank
from bandcorrect.waveform import sinc_pulse

band = int(sys.argv[1]) if len(sys.argv) > 1 else 0
per_class = 200

bank = FilterBank(7.5, 4)
f = sinc_pulse(10000)
noise = NoiseConfig()  # jitter, decimation by 10, gain, offset and 5% white noise

# classes 1-5: band `band` attenuated by 100..0%; class 6: other bands attenuated
train = build_training_dataset(f, bank, band, samples_per_class=per_class, noise=noise, seed=0)
test = build_training_dataset(f, bank, band, samples_per_class=per_class, noise=noise, seed=1)
print("train rows", len(train), "class counts", train.class_counts())

best, losses, models = select_hidden_size(train.features, train.labels, [10, 20], TrainConfig(), band_index=band)
for h, loss in losses.items():
    print("hidden %2d  validation cross-entropy %.4f%s" % (h, loss, "  <- chosen" if h == best else ""))

# 50 weighted-random predictions per test row, averaged
cm = averaged_confusion_matrix(models[best], test.features, test.labels, 50, np.random.default_rng(0))
frac = cm.row_fractions()
print("\nrow fractions, true class down, predicted across")
print("      " + "".join("%7s" % c for c in CLASS_LABELS))
for lab, row in zip(CLASS_LABELS, frac):
    print("%5s " % lab + "".join("%7.2f" % v for v in row))
