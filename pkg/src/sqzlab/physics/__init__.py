"""Closed-form physics: squeezing spectra, cavity response, pump budget and laser noise."""
