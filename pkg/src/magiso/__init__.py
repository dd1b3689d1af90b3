"""Numerical laboratory for the magnetic Faber-Krahn inequality."""
