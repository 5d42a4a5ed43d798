"""Gap probabilities of the generalized Bessel process."""

__version__ = "0.1.0"
