"""Desk-scale end-to-end face swapping via adaptive latent code selection."""

__version__ = "0.1.0"
