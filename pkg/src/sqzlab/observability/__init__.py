"""Logging and metrics for sqzlab runs."""
