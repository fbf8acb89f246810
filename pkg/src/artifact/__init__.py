"""Frame-quality triage and classical restoration for endoscopy-style video."""

__version__ = "0.1.0"
