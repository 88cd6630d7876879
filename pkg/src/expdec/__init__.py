"""Sum-of-squares list decoding for Tanner, AEL and concatenated codes."""

__version__ = "0.1.0"
