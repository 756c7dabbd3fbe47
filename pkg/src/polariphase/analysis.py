"""Data-analysis pipeline: mixing, harmonic fitting, phase extraction.

The intensity modulation has fundamental period pi in eta (the closed
form depends on eta only through sin^2(zeta + eta)), so the first-order
fit basis is {1, cos 2eta, sin 2eta}.  Second-order (lambda/2) neutrons
see half the rotation angles and contribute a period-2pi component
absorbed by the optional {cos eta, sin eta} terms.  Extrema come from
the fitted fundamental amplitude, not from raw samples, and their
covariance is propagated to the phase by the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .beamline import BeamlineConfig, observed_intensity, propagate_second_order
from .counting import CountingPlan, ScanRecord, _point_rng
from .spincore import mixed_state_phase

__all__ = [
    "GridMismatch",
    "WeightOutOfRange",
    "RankDeficient",
    "InsufficientSpan",
    "DegenerateDenominator",
    "OutOfPhysicalRange",
    "IntensityScan",
    "MixingSpec",
    "FitResult",
    "PhaseResult",
    "normalize_counts",
    "mix_scans",
    "fit_harmonic",
    "phase_from_extrema_pure",
    "phase_from_extrema_mixed",
    "run_pipeline",
    "bootstrap_phase_sigma",
]


class GridMismatch(ValueError):
    """Off and on scans were not taken on the same eta grid."""


class WeightOutOfRange(ValueError):
    """Requested polarization degree exceeds the incident one."""


class RankDeficient(ValueError):
    """Singular design matrix (e.g. all eta congruent mod pi)."""


class InsufficientSpan(ValueError):
    """Scan does not cover the period(s) required by the fit basis."""


class DegenerateDenominator(ValueError):
    """1 - I_max + I_min vanishes; the pure phase is undefined."""


class OutOfPhysicalRange(ValueError):
    """Phase radicand outside [0, 1] beyond 3 sigma."""


@dataclass(frozen=True)
class IntensityScan:
    """Normalized intensities with per-point standard errors."""

    eta: np.ndarray
    value: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("eta", "value", "sigma"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.eta.shape == self.value.shape == self.sigma.shape):
            raise ValueError("eta, value and sigma must have matching shapes")


@dataclass(frozen=True)
class MixingSpec:
    """Target polarization for the weighted off/on synthesis.

    The weight w = (1 + r_target/r0)/2 is the unique choice whose
    expectation reproduces the mixed-state intensity at r_target, given
    flipper-off polarization +r0 and flipper-on polarization -r0.
    """

    r_target: float
    r0: float

    def __post_init__(self):
        if not 0.0 < self.r0 <= 1.0:
            raise ValueError("r0 must lie in (0, 1]")
        if self.r_target < 0.0 or self.r_target > self.r0 + 1e-12:
            raise WeightOutOfRange("r_target must lie in [0, r0]")

    @property
    def weight(self) -> float:
        return 0.5 * (1.0 + self.r_target / self.r0)


@dataclass(frozen=True)
class FitResult:
    """Harmonic fit coefficients and the derived modulation extrema.

    coefficients: (a0, b1, b2, c1, c2) for the basis
    {1, cos 2eta, sin 2eta, cos eta, sin eta}; c1 = c2 = 0 when the
    second-order terms were excluded.
    """

    coefficients: np.ndarray
    covariance: np.ndarray
    i_min: float
    i_max: float
    sigma_min: float
    sigma_max: float
    cov_min_max: float
    chi2_reduced: float
    second_order_amplitude: float
    second_order_sigma: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PhaseResult:
    """Extracted |Phi| with its uncertainties and the closed-form value.

    ``sigma_phi`` is the statistical (fit-propagated) error;
    ``sigma_phi_sys`` the guide-field inhomogeneity systematic, kept
    separate and combined in quadrature by ``sigma_phi_total``.
    """

    phi: float
    sigma_phi: float
    r: float
    phi_theory: float
    method: str
    chi2_reduced: float = math.nan
    sigma_phi_sys: float = 0.0
    flags: tuple[str, ...] = ()

    @property
    def sigma_phi_total(self) -> float:
        return math.hypot(self.sigma_phi, self.sigma_phi_sys)


def _normalize(counts: np.ndarray, plan: CountingPlan) -> tuple[np.ndarray, np.ndarray]:
    counts = np.asarray(counts, dtype=float)
    value = (counts - plan.background) / plan.counts_scale
    # Poisson error; for zero counts fall back to the background model.
    floor = math.sqrt(max(plan.background, 1.0))
    sigma = np.where(counts > 0.0, np.sqrt(np.maximum(counts, 0.0)), floor)
    return value, sigma / plan.counts_scale


def normalize_counts(records: list[ScanRecord], plan: CountingPlan,
                     expectation: bool = False) -> tuple[IntensityScan, IntensityScan]:
    """Background-subtracted intensities (off, on), unclamped.

    With ``expectation`` the records hold noise-free real-valued counts;
    all sigmas are zero and downstream fits fall back to unweighted.
    """
    eta = np.array([rec.eta_rad for rec in records])
    off_counts = np.array([rec.counts_off for rec in records], dtype=float)
    on_counts = np.array([rec.counts_on for rec in records], dtype=float)
    v_off, s_off = _normalize(off_counts, plan)
    v_on, s_on = _normalize(on_counts, plan)
    if expectation:
        s_off = np.zeros_like(s_off)
        s_on = np.zeros_like(s_on)
    return IntensityScan(eta, v_off, s_off), IntensityScan(eta, v_on, s_on)


def mix_scans(off: IntensityScan, on: IntensityScan, spec: MixingSpec) -> IntensityScan:
    """w*I_off + (1-w)*I_on with errors combined in quadrature."""
    if off.eta.shape != on.eta.shape or not np.allclose(off.eta, on.eta, atol=1e-12):
        raise GridMismatch("off and on scans must share the eta grid")
    w = spec.weight
    value = w * off.value + (1.0 - w) * on.value
    sigma = np.sqrt((w * off.sigma) ** 2 + ((1.0 - w) * on.sigma) ** 2)
    return IntensityScan(off.eta, value, sigma)


def _design_matrix(eta: np.ndarray, include_second_order: bool) -> np.ndarray:
    cols = [np.ones_like(eta), np.cos(2.0 * eta), np.sin(2.0 * eta)]
    if include_second_order:
        cols += [np.cos(eta), np.sin(eta)]
    return np.column_stack(cols)


def fit_harmonic(scan: IntensityScan, include_second_order: bool = True) -> FitResult:
    """Weighted linear least squares on the harmonic basis.

    Per-point sigmas are taken as absolute errors; when every sigma is
    zero (expectation mode) the fit is unweighted and the covariance is
    scaled by the residual variance.
    """
    eta = scan.eta
    n_par = 5 if include_second_order else 3
    if eta.size < max(6, n_par + 1):
        raise InsufficientSpan("need at least 6 points")
    span = float(eta.max() - eta.min())
    needed = 2.0 * math.pi if include_second_order else math.pi
    if span <= needed:
        raise InsufficientSpan(
            f"eta span {span:.3f} must exceed {needed:.3f} for this basis")

    a = _design_matrix(eta, include_second_order)
    weighted = bool(np.any(scan.sigma > 0.0))
    if weighted and np.any(scan.sigma <= 0.0):
        raise ValueError("mixed zero and nonzero sigmas are not supported")
    dof = max(eta.size - n_par, 1)

    def solve(sigma):
        if sigma is not None:
            aw = a / sigma[:, None]
            yw = scan.value / sigma
        else:
            aw, yw = a, scan.value
        normal = aw.T @ aw
        if np.linalg.cond(normal) > 1e12:
            raise RankDeficient("design matrix is numerically singular")
        theta = np.linalg.solve(normal, aw.T @ yw)
        cov = np.linalg.inv(normal)
        resid = yw - aw @ theta
        return theta, cov, float(resid @ resid) / dof

    if weighted:
        theta, cov, chi2_red = solve(scan.sigma)
        # Reweight with model-based variances: weights tied to observed
        # counts correlate with the fluctuations and bias the fit low.
        # The Poisson variance is affine in the intensity, so fit that
        # relation and evaluate it at the first-pass prediction.
        basis = np.column_stack([np.ones_like(scan.value), scan.value])
        vco, *_ = np.linalg.lstsq(basis, scan.sigma ** 2, rcond=None)
        var = np.maximum(vco[0] + vco[1] * (a @ theta), 1e-12)
        theta, cov, chi2_red = solve(np.sqrt(var))
    else:
        theta, cov, chi2_red = solve(None)
        # Residual-based error scale for the noise-free/unweighted case.
        cov = cov * chi2_red

    full_theta = np.zeros(5)
    full_cov = np.zeros((5, 5))
    full_theta[:n_par] = theta
    full_cov[:n_par, :n_par] = cov

    a0, b1, b2, c1, c2 = full_theta
    r1 = math.hypot(b1, b2)
    flags: list[str] = []
    if r1 < 1e-12:
        flags.append("no_modulation")
        jac = np.array([[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0]])
    else:
        jac = np.array([
            [1.0, -b1 / r1, -b2 / r1, 0.0, 0.0],
            [1.0, b1 / r1, b2 / r1, 0.0, 0.0],
        ])
    cov2 = jac @ full_cov @ jac.T

    r2 = math.hypot(c1, c2)
    if include_second_order and r2 > 1e-15:
        jac2 = np.array([0.0, 0.0, 0.0, c1 / r2, c2 / r2])
        sig2 = math.sqrt(max(float(jac2 @ full_cov @ jac2), 0.0))
    else:
        sig2 = math.sqrt(max(full_cov[3, 3], full_cov[4, 4], 0.0)) if include_second_order else 0.0

    return FitResult(
        coefficients=full_theta,
        covariance=full_cov,
        i_min=a0 - r1,
        i_max=a0 + r1,
        sigma_min=math.sqrt(max(cov2[0, 0], 0.0)),
        sigma_max=math.sqrt(max(cov2[1, 1], 0.0)),
        cov_min_max=float(cov2[0, 1]),
        chi2_reduced=chi2_red,
        second_order_amplitude=r2,
        second_order_sigma=sig2,
        flags=tuple(flags),
    )


def _phase_from_radicand(num: float, tail: float, dq_dmin: float, dq_dmax: float,
                         sigma_min: float, sigma_max: float, cov: float,
                         flags: list[str]) -> tuple[float, float]:
    # radicand q = num / (num + tail); keeping the two parts separate
    # avoids the catastrophic loss of precision in acos(sqrt(q)) at q -> 1
    q = num / (num + tail)
    sigma_q = math.sqrt(max(
        dq_dmin ** 2 * sigma_min ** 2 + dq_dmax ** 2 * sigma_max ** 2
        + 2.0 * dq_dmin * dq_dmax * cov, 0.0))
    if q < 0.0 or q > 1.0:
        excess = -q if q < 0.0 else q - 1.0
        if sigma_q <= 0.0 or excess > 3.0 * sigma_q:
            raise OutOfPhysicalRange(
                f"phase radicand {q:.6g} outside [0, 1] beyond 3 sigma")
        q = min(max(q, 0.0), 1.0)
        flags.append("radicand_clipped")
    phi = math.atan2(math.sqrt(max(tail, 0.0)), math.sqrt(max(num, 0.0)))
    # Interval propagation: evaluate phi at q +- sigma_q and take the
    # wider half-interval.  Matches the first-order delta method in the
    # interior, stays finite where dphi/dq diverges at the physical
    # boundary, and is conservative for the skewed tail there.
    if sigma_q > 0.0:
        q_lo = max(q - sigma_q, 0.0)
        q_hi = min(q + sigma_q, 1.0)
        sigma_phi = max(math.acos(math.sqrt(q_lo)) - phi,
                        phi - math.acos(math.sqrt(q_hi)))
    else:
        sigma_phi = 0.0
    return phi, sigma_phi


def phase_from_extrema_pure(i_min: float, i_max: float,
                            sigma_min: float = 0.0, sigma_max: float = 0.0,
                            cov_min_max: float = 0.0,
                            phi_theory: float = math.nan) -> PhaseResult:
    """phi = arccos sqrt(I_min / (1 - I_max + I_min)), in [0, pi/2]."""
    if i_min > i_max:
        raise ValueError("I_min must not exceed I_max")
    tail = 1.0 - i_max
    denom = i_min + tail
    if denom <= 1e-12:
        raise DegenerateDenominator("1 - I_max + I_min vanishes; phase undefined")
    # q = N/D with N = I_min, D = 1 - I_max + I_min.
    dq_dmin = tail / denom ** 2
    dq_dmax = i_min / denom ** 2
    flags: list[str] = []
    phi, sigma = _phase_from_radicand(i_min, tail, dq_dmin, dq_dmax,
                                      sigma_min, sigma_max, cov_min_max, flags)
    return PhaseResult(phi, sigma, 1.0, phi_theory, "pure", flags=tuple(flags))


def phase_from_extrema_mixed(i_min: float, i_max: float, r: float,
                             sigma_min: float = 0.0, sigma_max: float = 0.0,
                             cov_min_max: float = 0.0,
                             phi_theory: float = math.nan) -> PhaseResult:
    """Mixed-state |Phi| from the fitted extrema.

    Phi = arccos sqrt((I_min - (1-r)/2) /
                      (r^2 [(1+r)/2 - I_max] + I_min - (1-r)/2)).
    Reduces to the pure-state formula at r = 1.  A radicand outside
    [0, 1] within 3 sigma is clipped and flagged; beyond that it raises.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    if i_min > i_max:
        raise ValueError("I_min must not exceed I_max")
    num = i_min - 0.5 * (1.0 - r)
    tail = r ** 2 * (0.5 * (1.0 + r) - i_max)
    denom = num + tail
    if abs(denom) <= 1e-12:
        raise DegenerateDenominator("phase denominator vanishes")
    dq_dmin = tail / denom ** 2
    dq_dmax = num * r ** 2 / denom ** 2
    flags: list[str] = []
    phi, sigma = _phase_from_radicand(num, tail, dq_dmin, dq_dmax,
                                      sigma_min, sigma_max, cov_min_max, flags)
    return PhaseResult(phi, sigma, r, phi_theory, "mixed", flags=tuple(flags))


@lru_cache(maxsize=128)
def _second_order_mixed_cached(cfg: BeamlineConfig, eta: tuple[float, ...],
                               weight: float) -> np.ndarray:
    off = np.array([propagate_second_order(cfg.with_flipper(False), e) for e in eta])
    on = np.array([propagate_second_order(cfg.with_flipper(True), e) for e in eta])
    out = weight * off + (1.0 - weight) * on
    out.setflags(write=False)
    return out


def _second_order_mixed_curve(cfg: BeamlineConfig, eta: np.ndarray,
                              weight: float) -> np.ndarray:
    return _second_order_mixed_cached(cfg, tuple(float(e) for e in eta), weight)


def _corrected_scan(scan: IntensityScan, cfg: BeamlineConfig, weight: float) -> IntensityScan:
    """Remove the known eps-weighted second-order model contribution."""
    eps = cfg.contamination_eps
    if eps == 0.0:
        return scan
    s2 = _second_order_mixed_curve(cfg, scan.eta, weight)
    value = (scan.value - eps * s2) / (1.0 - eps)
    return IntensityScan(scan.eta, value, scan.sigma / (1.0 - eps))


def _extract_phase(off: IntensityScan, on: IntensityScan, cfg: BeamlineConfig,
                   r: float, fit_mode: str) -> PhaseResult:
    if r <= 0.0:
        raise ValueError("phase extraction requires r > 0")
    spec = MixingSpec(r_target=r, r0=cfg.r0)
    mixed = mix_scans(off, on, spec)
    if fit_mode == "corrected":
        mixed = _corrected_scan(mixed, cfg, spec.weight)
        fit = fit_harmonic(mixed, include_second_order=False)
    elif fit_mode == "agnostic":
        fit = fit_harmonic(mixed, include_second_order=True)
    else:
        raise ValueError(f"unknown fit mode {fit_mode!r}")
    theory = abs(mixed_state_phase(r, cfg.coil_params))
    res = phase_from_extrema_mixed(fit.i_min, fit.i_max, r,
                                   fit.sigma_min, fit.sigma_max, fit.cov_min_max,
                                   phi_theory=theory)
    flags = res.flags + fit.flags
    if "no_modulation" in fit.flags:
        flags = flags + ("indeterminate",)
    return replace(res, chi2_reduced=fit.chi2_reduced, flags=flags)


def _model_scans(cfg: BeamlineConfig, eta: tuple[float, ...],
                 beta: float) -> tuple[IntensityScan, IntensityScan]:
    ea = np.array(eta)
    off = np.array([observed_intensity(cfg.with_flipper(False), e, beta=beta) for e in eta])
    on = np.array([observed_intensity(cfg.with_flipper(True), e, beta=beta) for e in eta])
    zero = np.zeros_like(off)
    return IntensityScan(ea, off, zero), IntensityScan(ea, on, zero)


@lru_cache(maxsize=256)
def _beta_systematic(cfg: BeamlineConfig, eta: tuple[float, ...],
                     r: float, fit_mode: str) -> float:
    """Phase shift induced by the +-beta_max guide-field scale error,
    evaluated on the noise-free model through the same analysis chain."""
    if cfg.inhomogeneity_beta_max == 0.0:
        return 0.0
    phis = []
    for beta in (0.0, cfg.inhomogeneity_beta_max, -cfg.inhomogeneity_beta_max):
        off, on = _model_scans(cfg, eta, beta)
        phis.append(_extract_phase(off, on, cfg, r, fit_mode).phi)
    return max(abs(phis[1] - phis[0]), abs(phis[2] - phis[0]))


def _phase_for_target(off: IntensityScan, on: IntensityScan, cfg: BeamlineConfig,
                      r: float, fit_mode: str) -> PhaseResult:
    res = _extract_phase(off, on, cfg, r, fit_mode)
    sys = _beta_systematic(cfg, tuple(float(e) for e in off.eta), float(r), fit_mode)
    return replace(res, sigma_phi_sys=sys)


def run_pipeline(off_records: list[ScanRecord], on_records: list[ScanRecord],
                 plan: CountingPlan, cfg: BeamlineConfig,
                 r_targets: list[float], fit_mode: str = "agnostic",
                 expectation: bool = False) -> list[PhaseResult]:
    """Mix, fit and extract |Phi| for r0 and each requested target.

    A failing target is reported as a PhaseResult with nan phase and an
    error flag instead of aborting the remaining targets.
    """
    off, _ = normalize_counts(off_records, plan, expectation)
    _, on = normalize_counts(on_records, plan, expectation)
    results = []
    targets = [cfg.r0] + [r for r in r_targets if abs(r - cfg.r0) > 1e-12]
    for r in targets:
        try:
            results.append(_phase_for_target(off, on, cfg, r, fit_mode))
        except (ValueError, np.linalg.LinAlgError) as exc:
            try:
                theory = abs(mixed_state_phase(r, cfg.coil_params))
            except ValueError:
                theory = math.nan
            results.append(PhaseResult(math.nan, math.nan, r, theory, "mixed",
                                       flags=("error:" + type(exc).__name__,)))
    return results


def bootstrap_phase_sigma(off_records: list[ScanRecord], on_records: list[ScanRecord],
                          plan: CountingPlan, cfg: BeamlineConfig, r_target: float,
                          n_replicas: int = 1000, seed: int = 1,
                          fit_mode: str = "agnostic") -> float:
    """Bootstrap standard error of |Phi|: re-draw Poisson counts around
    the observed ones and repeat the mix/fit/extract chain."""
    phis = []
    for k in range(n_replicas):
        rng = _point_rng(seed, k, 7)
        off_k = [replace(rec, counts_off=float(rng.poisson(max(rec.counts_off, 0.0))))
                 for rec in off_records]
        on_k = [replace(rec, counts_on=float(rng.poisson(max(rec.counts_on, 0.0))))
                for rec in on_records]
        off, _ = normalize_counts(off_k, plan)
        _, on = normalize_counts(on_k, plan)
        try:
            phis.append(_phase_for_target(off, on, cfg, r_target, fit_mode).phi)
        except (ValueError, np.linalg.LinAlgError):
            continue
    if len(phis) < 2:
        raise RuntimeError("too few successful bootstrap replicas")
    return float(np.std(phis, ddof=1))
