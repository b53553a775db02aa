"""Generalization certificates for a target model via a certified surrogate and their disagreement."""

__version__ = "0.1.0"
