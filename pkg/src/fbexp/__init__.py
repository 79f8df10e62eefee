"""Error exponents and Monte Carlo simulation for AWGN channels with rate-limited feedback."""

__version__ = "0.1.0"
