"""Selective inference for LASSO logistic regression with pooled, error-prone tests."""

__version__ = "0.1.0"
