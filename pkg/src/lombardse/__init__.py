"""Speech enhancement toolkit for Lombard-style speech.

Library + CLI covering the whole experimental chain: STFT analysis/synthesis,
speech-shaped-noise synthesis and SNR mixing, amplitude-mask estimation
networks trained from scratch, ESTOI scoring, Lombard feature analysis,
nonparametric statistics, a cross-validation harness, and the backend for
MUSHRA / keyword-intelligibility listening tests.
"""

__version__ = "0.1.0"
