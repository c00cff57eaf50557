"""Fingerprint cost against record length.

The fingerprint is computed in a single pass per waveform, so doubling the
record should roughly double the time. The FFT column is there for scale.
"""
from bandcorrect.cli import run_benchmark

rows = run_benchmark(sizes=(1000, 10000, 100000), repeats=5)
print("%8s %10s %8s %10s %8s %8s" % ("N", "FP ms", "FP x2", "ESSC ms", "ESSC x2", "FFT x2"))
for r in rows:
    print("%8d %10.3f %8.2f %10.3f %8.2f %8.2f" % (r["n"], 1e3 * r["fingerprint_n"], r["fingerprint_doubling_ratio"],
                                                  1e3 * r["essc_n"], r["essc_doubling_ratio"],
                                                  r["fft_doubling_ratio"]))
