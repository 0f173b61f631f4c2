"""Factual probability estimation by semantic integration.

Submodules: ``views`` (descriptions and exact laws), ``painting`` (the
parceled picture and its games), ``phenomena`` (random sources and the
pre-probability tree), ``semint`` (points-grid replicas and the estimator),
``analysis`` (baselines and law-of-large-numbers checks), ``cli``.
"""

__version__ = "0.1.0"
