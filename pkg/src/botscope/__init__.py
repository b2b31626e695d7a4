"""botscope: desk-scale social bot scoring.

Feature extraction over tweet/user payloads, an ensemble of specialized random
forests with posterior-calibrated scores, a metadata-only fast model with
principled training-set selection, a rate-limited scoring service, and the
statistical toolkit for comparing score distributions across tweet groups.
"""

__version__ = "0.1.0"
