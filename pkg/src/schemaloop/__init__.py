"""Human-in-the-loop event schema induction pipeline."""

__version__ = "0.1.0"
