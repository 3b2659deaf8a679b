"""Skip-gram biomarkers for MCI screening from interview transcripts."""

__version__ = "0.1.0"
