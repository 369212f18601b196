"""Discounted cash flow of a production profile."""
from __future__ import annotations

import numpy as np

from .model import EconomicParams


def discount_factors(t, econ: EconomicParams) -> np.ndarray:
    """``1 / (1 + b) ** (t / tau)`` for end-of-step times ``t`` in days."""
    t = np.asarray(t, dtype=float)
    return 1.0 / (1.0 + econ.b) ** (t / econ.tau)


def npv(profile, econ: EconomicParams) -> float:
    """Net present value in USD.

    ``profile`` needs per-step arrays ``dt``, ``t``, ``q_op``, ``q_wp``, ``q_wi``
    and ``q_gp`` (rates in m3/day, times in days, ``t`` at step end).
    """
    cash = (
        econ.r_gp * np.asarray(profile.q_gp, dtype=float)
        + econ.r_op * np.asarray(profile.q_op, dtype=float)
        - econ.c_wp * np.asarray(profile.q_wp, dtype=float)
        - econ.c_wi * np.asarray(profile.q_wi, dtype=float)
    )
    return float(np.sum(np.asarray(profile.dt, dtype=float) * discount_factors(profile.t, econ) * cash))
