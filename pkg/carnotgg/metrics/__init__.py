"""Convergence and summary helpers for verification reports."""
