"""Defect-guided search-based test generation for MiniLang programs.

The package couples a many-objective genetic search over branch targets
with two ways of spending a defect predictor's output: allocating the
time budget across classes in proportion to their predicted defect
scores, and biasing the search's preference sorting toward targets that
sit in predicted-defective methods. A seeded-bug corpus and an
experiment harness with the accompanying statistics live alongside.
"""

__version__ = "0.1.0"
