"""Forward model of the polarimeter.

The component chain, acting on a Bloch state polarized along +z:

    [pi flip (flipper on)] -> pi/2 turner -> precession eta about the
    guide field -> SU(2) coil -> precession 2n*pi - eta -> -pi/2 turner
    -> projection on |+z>

Sign conventions (fixed by requiring the ideal chain to reproduce the
closed-form intensity cos^2 xi cos^2 delta + sin^2 xi sin^2(zeta + eta)):
the transverse coil axis is +y and precession through an angle theta
about the guide field is implemented as a rotation through -theta about
+z, reflecting the negative neutron magnetic moment.

Second-order (lambda/2) neutrons travel at double velocity, so every
field-induced rotation angle is halved; the SU(2) coil is halved through
its axis-angle decomposition (same axis, half angle).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

import numpy as np

from . import constants
from .spincore import (
    AxisAngle,
    Su2Params,
    axis_angle_from_matrix,
    axis_angle_to_matrix,
    params_from_matrix,
    rotation,
    su2_from_params,
)

__all__ = [
    "ConfigError",
    "BeamlineConfig",
    "ScanPlan",
    "pure_intensity",
    "mixed_intensity",
    "analytic_extrema",
    "propagate",
    "propagate_second_order",
    "observed_intensity",
]

_AXIS_Y = (0.0, 1.0, 0.0)
_AXIS_Z = (0.0, 0.0, 1.0)


class ConfigError(ValueError):
    """Inconsistent or invalid beamline configuration."""


def pure_intensity(p: Su2Params, eta: float) -> float:
    """cos^2 xi cos^2 delta + sin^2 xi sin^2(zeta + eta)."""
    return (math.cos(p.xi) ** 2 * math.cos(p.delta) ** 2
            + math.sin(p.xi) ** 2 * math.sin(p.zeta + eta) ** 2)


def mixed_intensity(r: float, p: Su2Params, eta: float) -> float:
    """(1 - r)/2 + r * pure_intensity; reduces to the pure case at r = 1."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("polarization degree must lie in [0, 1]")
    return 0.5 * (1.0 - r) + r * pure_intensity(p, eta)


def analytic_extrema(r: float, p: Su2Params) -> tuple[float, float]:
    """Closed-form (I_min, I_max) of the eta modulation."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("polarization degree must lie in [0, 1]")
    i_min = 0.5 * (1.0 - r) + r * math.cos(p.xi) ** 2 * math.cos(p.delta) ** 2
    i_max = i_min + r * math.sin(p.xi) ** 2
    return i_min, i_max


@dataclass(frozen=True)
class BeamlineConfig:
    """Full physical description of one polarimeter setup.

    The SU(2) coil may be given either as Su2Params or as an AxisAngle
    whose axis lies in the xz-plane (the realizable coil geometry).
    When ``l0_cm`` is omitted it is derived from the winding number; when
    given it must match 2*n_wind*pi of precession within 0.1%.
    """

    r0: float
    su2: Su2Params | AxisAngle
    flipper: bool = False
    guide_field_gauss: float = 5.893
    wavelength_angstrom: float = 1.99
    n_wind: int = 1
    l0_cm: float | None = None
    contamination_eps: float = 0.072
    inhomogeneity_beta_max: float = 0.0
    turners_in_field: bool = False

    def __post_init__(self):
        if not 0.0 <= self.r0 <= 1.0:
            raise ConfigError("r0 must lie in [0, 1]")
        if not 0.0 <= self.contamination_eps <= 1.0:
            raise ConfigError("contamination_eps must lie in [0, 1]")
        if self.inhomogeneity_beta_max < 0.0:
            raise ConfigError("inhomogeneity_beta_max must be nonnegative")
        if self.n_wind < 1:
            raise ConfigError("n_wind must be a positive integer")
        if self.guide_field_gauss <= 0.0 or self.wavelength_angstrom <= 0.0:
            raise ConfigError("guide field and wavelength must be positive")
        if isinstance(self.su2, AxisAngle) and abs(self.su2.axis[1]) > 1e-9:
            raise ConfigError("SU(2) coil axis must lie in the xz-plane")
        nominal = constants.guide_distance_cm(
            self.n_wind, self.guide_field_gauss, self.wavelength_angstrom)
        if self.l0_cm is None:
            object.__setattr__(self, "l0_cm", nominal)
        elif abs(self.l0_cm - nominal) > 1e-3 * nominal:
            raise ConfigError(
                f"l0_cm={self.l0_cm:.4f} inconsistent with n_wind={self.n_wind} "
                f"(expected {nominal:.4f} cm within 0.1%)")

    @cached_property
    def velocity(self) -> float:
        return constants.neutron_velocity(self.wavelength_angstrom)

    @cached_property
    def omega(self) -> float:
        return constants.larmor_angular_frequency(self.guide_field_gauss)

    @cached_property
    def coil_matrix(self) -> np.ndarray:
        if isinstance(self.su2, Su2Params):
            return su2_from_params(self.su2)
        return axis_angle_to_matrix(self.su2)

    @cached_property
    def coil_params(self) -> Su2Params:
        if isinstance(self.su2, Su2Params):
            return self.su2
        return params_from_matrix(self.coil_matrix)

    @cached_property
    def coil_axis_angle(self) -> AxisAngle:
        if isinstance(self.su2, AxisAngle):
            return self.su2
        return axis_angle_from_matrix(self.coil_matrix)

    def with_flipper(self, on: bool) -> "BeamlineConfig":
        return replace(self, flipper=on)

    def eta_from_position_mm(self, x_mm: float) -> float:
        """Precession phase accumulated over a turner displacement in mm."""
        return self.omega * (x_mm * 1e-3) / self.velocity

    def position_mm_from_eta(self, eta: float) -> float:
        return eta * self.velocity / self.omega * 1e3


@dataclass(frozen=True)
class ScanPlan:
    """Ordered eta values of one scan (positions strictly monotone)."""

    eta_values: tuple[float, ...]

    def __post_init__(self):
        ev = tuple(float(e) for e in self.eta_values)
        if len(ev) >= 2 and any(b <= a for a, b in zip(ev, ev[1:])):
            raise ConfigError("scan eta values must be strictly increasing")
        object.__setattr__(self, "eta_values", ev)

    @property
    def span(self) -> float:
        return self.eta_values[-1] - self.eta_values[0] if self.eta_values else 0.0

    @staticmethod
    def default(cfg: BeamlineConfig, n_points: int = 41) -> "ScanPlan":
        """n_points uniformly over a turner travel of 4*L0."""
        total = cfg.eta_from_position_mm(4.0 * cfg.l0_cm * 10.0)
        plan = ScanPlan(tuple(np.linspace(0.0, total, n_points)))
        if plan.span <= 2.0 * math.pi:
            raise ConfigError("default scan must span more than 2*pi in eta")
        return plan


def _precession(theta: float) -> np.ndarray:
    # Negative moment: precession through +theta is a -theta rotation
    # about +z, i.e. diag(e^{i theta/2}, e^{-i theta/2}).
    p = cmath.exp(0.5j * theta)
    return np.array([[p, 0.0], [0.0, p.conjugate()]])


def _turner_ops(cfg: BeamlineConfig, order: int) -> tuple[np.ndarray, np.ndarray]:
    """The pi/2 and -pi/2 turner operators (angles halved at second order).

    With turners_in_field the turner field tilts towards the guide field:
    rotation about (+-B_t, B_z) with the angle scaled by the total field.
    """
    half = 0.5 if order == 2 else 1.0
    if not cfg.turners_in_field:
        return (rotation(_AXIS_Y, half * math.pi / 2.0),
                rotation(_AXIS_Y, -half * math.pi / 2.0))
    v = cfg.velocity
    lt = constants.TURNER_COIL_LENGTH_CM * constants.CM
    # Transverse field giving a quarter turn on its own over the coil depth.
    bt = 0.5 * math.pi * v / (2.0 * abs(constants.MU_NEUTRON) / constants.HBAR * lt)
    bz = cfg.guide_field_gauss * constants.GAUSS
    norm = math.hypot(bt, bz)
    angle = half * 0.5 * math.pi * norm / bt
    # Field along -y drives the +pi/2 turn (precession sense as above).
    t1 = rotation((0.0, -bt / norm, bz / norm), -angle)
    t2 = rotation((0.0, bt / norm, bz / norm), -angle)
    return t1, t2


@lru_cache(maxsize=64)
def _chain_ends(cfg: BeamlineConfig, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Eta-independent head (turner after optional flipper) and tail
    (coil excluded) of the component chain."""
    half = 0.5 if order == 2 else 1.0
    t1, t2 = _turner_ops(cfg, order)
    head = t1 @ rotation(_AXIS_Y, half * math.pi) if cfg.flipper else t1
    return head, t2


@lru_cache(maxsize=64)
def _coil(cfg: BeamlineConfig, order: int) -> np.ndarray:
    if order == 2:
        aa = cfg.coil_axis_angle
        return axis_angle_to_matrix(AxisAngle(aa.axis, 0.5 * aa.angle))
    return cfg.coil_matrix


def _chain(cfg: BeamlineConfig, eta: float, order: int) -> np.ndarray:
    half = 0.5 if order == 2 else 1.0
    head, tail = _chain_ends(cfg, order)
    p1 = cmath.exp(0.5j * half * eta)
    p2 = cmath.exp(0.5j * half * (2.0 * cfg.n_wind * math.pi - eta))
    u = _coil(cfg, order) @ (head * np.array([[p1], [p1.conjugate()]]))
    return tail @ (u * np.array([[p2], [p2.conjugate()]]))


def _detect(cfg: BeamlineConfig, eta: float, order: int) -> float:
    # <+z|U rho U^dag|+z> = 1/2 + (b_z/2)(2|U00|^2 - 1) for rho polarized
    # along z; equivalent to bloch_apply but cheaper.
    u00 = _chain(cfg, eta, order)[0, 0]
    return 0.5 + 0.5 * cfg.r0 * (2.0 * abs(u00) ** 2 - 1.0)


def propagate(cfg: BeamlineConfig, eta: float) -> float:
    """First-order detection probability <+z|rho_out|+z>.

    With all imperfections off this equals mixed_intensity(r0, p, eta)
    (flipper off) or its complement curve (flipper on).
    """
    return _detect(cfg, eta, order=1)


def propagate_second_order(cfg: BeamlineConfig, eta: float) -> float:
    """Detection probability of the lambda/2 population (all angles halved)."""
    return _detect(cfg, eta, order=2)


def observed_intensity(cfg: BeamlineConfig, eta: float, beta: float = 0.0) -> float:
    """(1 - eps) * first order + eps * second order at eta_eff = eta*(1+beta).

    ``beta`` is the per-scan systematic scale drawn once at scan
    construction (see the counting module); it defaults to the ideal 0.
    """
    eta_eff = eta * (1.0 + beta)
    eps = cfg.contamination_eps
    first = propagate(cfg, eta_eff) if eps < 1.0 else 0.0
    if eps == 0.0:
        return first
    return (1.0 - eps) * first + eps * propagate_second_order(cfg, eta_eff)
