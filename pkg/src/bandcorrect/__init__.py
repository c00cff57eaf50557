"""Detect and correct band attenuations of pulse waveforms from time-domain statistics."""

__version__ = "0.1.0"
