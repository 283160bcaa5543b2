"""Average finite-blocklength rate of RIS-aided links with a Gamma-matched SNR."""

__version__ = "0.1.0"
