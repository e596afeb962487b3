"""Discounting helpers shared by the storage-cost and phasing models."""

from __future__ import annotations


def annuity_factor(rate: float, years: int) -> float:
    """Present value of $1/y for `years` years at `rate` (end-of-year flows).

    Degenerates to `years` at zero rate.
    """
    if years < 0:
        raise ValueError("years must be >= 0")
    if rate == 0:
        return float(years)
    return (1.0 - (1.0 + rate) ** (-years)) / rate


def discount(rate: float, years_from_base: float) -> float:
    """Discount factor for a flow `years_from_base` years after the base year."""
    return (1.0 + rate) ** (-years_from_base)
