"""Offline RL benchmark suite.

Model-free, model-based, and hybrid offline RL algorithm families, a
behavior-policy dataset generator, and a worst-case tenth-percentile
evaluation harness.
"""

__version__ = "0.1.0"
