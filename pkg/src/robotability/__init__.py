"""Robotability scoring engine.

Derives feature-importance weights from expert pairwise-comparison votes,
computes a polarity-controlled weighted score at every point of a
segmentized sidewalk network, aggregates and ranks zones, and serves
interactive robot-profile recomputation over HTTP.
"""

__version__ = "0.1.0"
