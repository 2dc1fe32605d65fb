"""Numerical toolkit for the fractional Laplace transform and its L_p bounds."""
