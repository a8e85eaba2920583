"""Multi-objective neural architecture search on pluggable evaluators.

An LSTM controller samples architectures slot by slot, evaluators score
them on accuracy and resource cost, rewards combine or constrain the two,
and a policy-gradient update steers the next samples. The engine tracks
the non-dominated front and search-efficiency statistics along the way.
"""

__version__ = "0.1.0"
