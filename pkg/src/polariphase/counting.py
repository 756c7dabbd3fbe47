"""Monte Carlo detector counts for flipper-off/on scans.

Every random draw comes from its own numpy SeedSequence substream keyed
by (master seed, point index, flipper flag), so the output is bitwise
reproducible and independent of evaluation order.  The per-scan guide
field inhomogeneity factor beta has a dedicated substream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beamline import BeamlineConfig, ScanPlan, observed_intensity

__all__ = ["CountingPlan", "ScanRecord", "draw_beta", "simulate_scan", "expectation_scan"]

# Substream tags; point streams use (seed, _POINT_TAG, index, flipper).
_BETA_TAG = 0xB
_POINT_TAG = 0xC


@dataclass(frozen=True)
class CountingPlan:
    """Counting-statistics setup for one scan."""

    scan: ScanPlan
    counts_scale: float = 2000.0
    background: float = 0.0
    seed: int = 0
    live_time_s: float = 60.0

    def __post_init__(self):
        if self.counts_scale <= 0.0:
            raise ValueError("counts_scale must be positive")
        if self.background < 0.0:
            raise ValueError("background must be nonnegative")


@dataclass(frozen=True)
class ScanRecord:
    """One scan point: precession phase, turner position and raw counts.

    counts are integers from simulate_scan and real-valued expectations
    from expectation_scan.
    """

    index: int
    eta_rad: float
    position_mm: float
    counts_off: float
    counts_on: float
    live_time_s: float


def _point_rng(seed: int, index: int, flipper: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, _POINT_TAG, index, flipper])))


def draw_beta(cfg: BeamlineConfig, seed: int) -> float:
    """Single per-scan inhomogeneity scale in [-beta_max, beta_max]."""
    if cfg.inhomogeneity_beta_max == 0.0:
        return 0.0
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _BETA_TAG])))
    return float(rng.uniform(-cfg.inhomogeneity_beta_max, cfg.inhomogeneity_beta_max))


def _expected_counts(cfg: BeamlineConfig, plan: CountingPlan, eta: float,
                     flipper: bool, beta: float) -> float:
    i = observed_intensity(cfg.with_flipper(flipper), eta, beta=beta)
    return plan.counts_scale * i + plan.background


def simulate_scan(cfg: BeamlineConfig, plan: CountingPlan) -> list[ScanRecord]:
    """Poisson counts for both flipper settings at every scan point."""
    beta = draw_beta(cfg, plan.seed)
    records = []
    for i, eta in enumerate(plan.scan.eta_values):
        mu_off = _expected_counts(cfg, plan, eta, False, beta)
        mu_on = _expected_counts(cfg, plan, eta, True, beta)
        c_off = int(_point_rng(plan.seed, i, 0).poisson(mu_off))
        c_on = int(_point_rng(plan.seed, i, 1).poisson(mu_on))
        records.append(ScanRecord(i, eta, cfg.position_mm_from_eta(eta),
                                  c_off, c_on, plan.live_time_s))
    return records


def expectation_scan(cfg: BeamlineConfig, plan: CountingPlan) -> list[ScanRecord]:
    """Noise-free expected counts (real-valued, seed-independent).

    The inhomogeneity draw is a noise source, so it is pinned to 0 here.
    """
    records = []
    for i, eta in enumerate(plan.scan.eta_values):
        mu_off = _expected_counts(cfg, plan, eta, False, 0.0)
        mu_on = _expected_counts(cfg, plan, eta, True, 0.0)
        records.append(ScanRecord(i, eta, cfg.position_mm_from_eta(eta),
                                  mu_off, mu_on, plan.live_time_s))
    return records
