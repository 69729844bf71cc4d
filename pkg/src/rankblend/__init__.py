"""Ensembling of binary-classifier predictions scored by AUROC.

Seed averaging, simple/rank/power averaging and Nelder-Mead weight search
over the simplex, learned on a labelled dev split and replayed on test.
"""

__version__ = "0.1.0"
