"""Exact surreal normal forms, lazy series, transseries and Borel summation."""
