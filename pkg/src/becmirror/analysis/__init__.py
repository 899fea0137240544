"""Diagnostics: sections, spectra, stability and Lyapunov exponents."""
