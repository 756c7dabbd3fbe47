"""Exact spin-1/2 algebra.

Spinors are complex 2-vectors in the {|+z>, |-z>} basis, operators are
2x2 complex numpy arrays.  The module provides the two equivalent SU(2)
descriptions (the (xi, delta, zeta) parameterization and axis-angle),
density matrices as Bloch vectors, and the closed-form relative-phase
formulas for pure and mixed states.

Conventions
-----------
- ``rotation(axis, angle)`` implements ``cos(a/2) 1 - i sin(a/2) (n.sigma)``,
  a right-handed rotation of the Bloch vector through ``angle`` about
  ``axis`` under conjugation.
- Canonical parameter ranges: ``xi in [0, pi]`` (so ``sin xi >= 0``) and
  ``delta in (-pi/2, pi/2]``; the sign of ``cos xi`` absorbs the residual
  half-turn ambiguity ``(xi, delta) -> (pi - xi, delta + pi)``.
  ``zeta in (-pi, pi]``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SPIN_ALGEBRA_TOL",
    "NotSpecialUnitary",
    "ZeroAxis",
    "DegenerateCosXi",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "PAULI",
    "IDENTITY2",
    "KET_PLUS_Z",
    "KET_MINUS_Z",
    "Su2Params",
    "AxisAngle",
    "BlochState",
    "is_unitary",
    "is_special",
    "is_hermitian",
    "normalize_spinor",
    "su2_from_params",
    "params_from_matrix",
    "axis_angle_to_matrix",
    "axis_angle_from_matrix",
    "pancharatnam_phase",
    "mixed_state_phase",
    "bloch_apply",
]

SPIN_ALGEBRA_TOL = 1e-12


class NotSpecialUnitary(ValueError):
    """Matrix fails the det U = 1, U^dag U = 1 preconditions."""


class ZeroAxis(ValueError):
    """Rotation axis of negligible length with a nonzero angle."""


class DegenerateCosXi(ValueError):
    """cos(xi) vanishes, so the relative phase formulas are undefined."""


def _c2(m) -> np.ndarray:
    return np.asarray(m, dtype=complex)


PAULI_X = _c2([[0, 1], [1, 0]])
PAULI_Y = _c2([[0, -1j], [1j, 0]])
PAULI_Z = _c2([[1, 0], [0, -1]])
IDENTITY2 = _c2([[1, 0], [0, 1]])
PAULI = (PAULI_X, PAULI_Y, PAULI_Z)

KET_PLUS_Z = np.array([1.0 + 0j, 0.0 + 0j])
KET_MINUS_Z = np.array([0.0 + 0j, 1.0 + 0j])

for _m in (PAULI_X, PAULI_Y, PAULI_Z, IDENTITY2, KET_PLUS_Z, KET_MINUS_Z):
    _m.setflags(write=False)


def is_unitary(u, tol: float = SPIN_ALGEBRA_TOL) -> bool:
    u = _c2(u)
    return bool(np.max(np.abs(u.conj().T @ u - IDENTITY2)) < tol)


def is_special(u, tol: float = SPIN_ALGEBRA_TOL) -> bool:
    return bool(abs(np.linalg.det(_c2(u)) - 1.0) < tol)


def is_hermitian(u, tol: float = SPIN_ALGEBRA_TOL) -> bool:
    u = _c2(u)
    return bool(np.max(np.abs(u - u.conj().T)) < tol)


def normalize_spinor(psi) -> np.ndarray:
    """Return psi scaled to unit norm."""
    psi = np.asarray(psi, dtype=complex)
    n = float(np.linalg.norm(psi))
    if n < SPIN_ALGEBRA_TOL:
        raise ValueError("cannot normalize a zero spinor")
    return psi / n


def _wrap_pi(angle: float) -> float:
    """Map angle to (-pi, pi]."""
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class Su2Params:
    """The (xi, delta, zeta) parameterization of a special unitary.

    ``degeneracy`` records the convention used by the inverse map when
    xi sits on a degenerate point: "sin_zero" (zeta fixed to 0) or
    "cos_zero" (delta fixed to 0).
    """

    xi: float
    delta: float
    zeta: float
    degeneracy: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AxisAngle:
    """Rotation axis (unit 3-vector) and angle in [0, 2*pi)."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n < SPIN_ALGEBRA_TOL:
            if abs(self.angle) > SPIN_ALGEBRA_TOL:
                raise ZeroAxis("zero-length rotation axis with nonzero angle")
            ax = np.array([0.0, 0.0, 1.0])
            n = 1.0
        a = math.fmod(self.angle, 2.0 * math.pi)
        if a < 0.0:
            a += 2.0 * math.pi
        object.__setattr__(self, "axis", (ax[0] / n, ax[1] / n, ax[2] / n))
        object.__setattr__(self, "angle", a)


@dataclass(frozen=True)
class BlochState:
    """Spin-1/2 density matrix stored as its Bloch vector.

    The polarization degree r = |bloch| must lie in [0, 1]; the matrix
    rho = (1 + b.sigma)/2 is then Hermitian, unit trace and positive
    semidefinite by construction.
    """

    bloch: tuple[float, float, float]

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=float)
        if b.shape != (3,):
            raise ValueError("bloch vector must have 3 components")
        if np.linalg.norm(b) > 1.0 + 1e-9:
            raise ValueError("polarization degree r = |bloch| exceeds 1")
        object.__setattr__(self, "bloch", (float(b[0]), float(b[1]), float(b[2])))

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.bloch))

    @property
    def matrix(self) -> np.ndarray:
        b = self.bloch
        return 0.5 * (IDENTITY2 + b[0] * PAULI_X + b[1] * PAULI_Y + b[2] * PAULI_Z)

    @staticmethod
    def along_z(r: float) -> "BlochState":
        if not 0.0 <= r <= 1.0:
            raise ValueError("polarization degree must lie in [0, 1]")
        return BlochState((0.0, 0.0, r))


def su2_from_params(p: Su2Params) -> np.ndarray:
    """Matrix [[e^{i d} cos x, -e^{-i z} sin x], [e^{i z} sin x, e^{-i d} cos x]]."""
    c, s = math.cos(p.xi), math.sin(p.xi)
    ed, ez = cmath.exp(1j * p.delta), cmath.exp(1j * p.zeta)
    return np.array([[ed * c, -s / ez], [ez * s, c / ed]])


def params_from_matrix(u, tol: float = 1e-9) -> Su2Params:
    """Canonical (xi, delta, zeta) of a special unitary.

    Raises NotSpecialUnitary when u is not special unitary within tol.
    Degenerate points: at sin(xi) = 0 only delta is defined (zeta := 0);
    at cos(xi) = 0 only zeta is defined (delta := 0).  The choice is
    reported through the ``degeneracy`` field.
    """
    u = _c2(u)
    if u.shape != (2, 2):
        raise NotSpecialUnitary("expected a 2x2 matrix")
    if not (is_unitary(u, tol) and is_special(u, tol)):
        raise NotSpecialUnitary("matrix is not special unitary within tolerance")

    abs_c = abs(u[0, 0])
    abs_s = abs(u[1, 0])
    if abs_s < SPIN_ALGEBRA_TOL:
        # Diagonal: xi = 0, zeta is arbitrary by convention.
        return Su2Params(0.0, _wrap_pi(cmath.phase(u[0, 0])), 0.0, degeneracy="sin_zero")
    if abs_c < SPIN_ALGEBRA_TOL:
        return Su2Params(0.5 * math.pi, 0.0, _wrap_pi(cmath.phase(u[1, 0])),
                         degeneracy="cos_zero")

    delta = cmath.phase(u[0, 0])
    sign = 1.0
    # Fold delta into (-pi/2, pi/2]; the removed half turn flips cos(xi).
    if delta > 0.5 * math.pi or delta <= -0.5 * math.pi:
        delta = _wrap_pi(delta + math.pi)
        sign = -1.0
    xi = math.atan2(abs_s, sign * abs_c)
    zeta = _wrap_pi(cmath.phase(u[1, 0]))
    return Su2Params(xi, delta, zeta)


def axis_angle_to_matrix(aa: AxisAngle) -> np.ndarray:
    """cos(a/2) 1 - i sin(a/2) (n.sigma)."""
    n = np.asarray(aa.axis, dtype=float)
    nm = float(np.linalg.norm(n))
    if nm < SPIN_ALGEBRA_TOL:
        raise ZeroAxis("zero-length rotation axis")
    n = n / nm
    half = 0.5 * aa.angle
    ns = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    return math.cos(half) * IDENTITY2 - 1j * math.sin(half) * ns


def rotation(axis, angle: float) -> np.ndarray:
    """Shorthand for axis_angle_to_matrix(AxisAngle(axis, angle))."""
    return axis_angle_to_matrix(AxisAngle(tuple(axis), angle))


def axis_angle_from_matrix(u, tol: float = 1e-9) -> AxisAngle:
    """Axis-angle decomposition of a special unitary (matrix logarithm).

    The angle is read off the trace, the axis off the traceless part.
    For u = +-1 the axis is undefined; +z is returned by convention.
    """
    u = _c2(u)
    if not (is_unitary(u, tol) and is_special(u, tol)):
        raise NotSpecialUnitary("matrix is not special unitary within tolerance")
    c = 0.5 * float(np.real(np.trace(u)))
    sv = np.array([float(np.real(0.5j * np.trace(u @ sig))) for sig in PAULI])
    s = float(np.linalg.norm(sv))
    angle = 2.0 * math.atan2(s, c)
    if s < SPIN_ALGEBRA_TOL:
        return AxisAngle((0.0, 0.0, 1.0), angle)
    return AxisAngle(tuple(sv / s), angle)


def pancharatnam_phase(psi0, psi, tol: float = 1e-9) -> float | None:
    """arg<psi0|psi> in (-pi, pi], or None for (near-)orthogonal states."""
    psi0 = np.asarray(psi0, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    ov = complex(np.vdot(psi0, psi))
    if abs(ov) < tol:
        return None
    return _wrap_pi(cmath.phase(ov))


def arg_cos_xi(p: Su2Params, tol: float = SPIN_ALGEBRA_TOL) -> float:
    """0 for cos(xi) > 0, pi for cos(xi) < 0; raises at the degenerate point."""
    c = math.cos(p.xi)
    if abs(c) < tol:
        raise DegenerateCosXi("cos(xi) vanishes; relative phase undefined")
    return 0.0 if c > 0.0 else math.pi


def mixed_state_phase(r: float, p: Su2Params) -> float:
    """Relative phase arctan[r tan(delta + arg cos xi)] in [-pi/2, pi/2].

    The principal arctan branch is used, so adding arg cos xi (0 or pi)
    leaves the value unchanged; it is still evaluated to surface the
    degenerate cos(xi) = 0 case.  At delta = pi/2 (mod pi) the +-pi/2
    continuity limit is returned.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("polarization degree must lie in [0, 1]")
    arg_cos_xi(p)
    # Fold delta + arg cos xi into (-pi/2, pi/2]; tan is pi-periodic.
    d = _wrap_pi(p.delta)
    if d > 0.5 * math.pi or d <= -0.5 * math.pi:
        d = _wrap_pi(d + math.pi)
    if abs(math.cos(d)) < SPIN_ALGEBRA_TOL:
        return 0.5 * math.pi if r > 0.0 else 0.0
    return math.atan2(r * math.sin(d), math.cos(d))


def phase_is_singular(p: Su2Params, tol: float = SPIN_ALGEBRA_TOL) -> bool:
    """True when delta + arg cos xi sits at pi/2 (mod pi)."""
    return abs(math.cos(p.delta)) < tol


def bloch_apply(u, s: BlochState) -> BlochState:
    """State with matrix U rho U^dag; preserves the polarization degree."""
    u = _c2(u)
    b = np.asarray(s.bloch)
    out = np.empty(3)
    for i, sig_i in enumerate(PAULI):
        # R_ij = tr(sigma_i U sigma_j U^dag) / 2
        m = u.conj().T @ sig_i @ u
        out[i] = sum(0.5 * float(np.real(np.trace(m @ PAULI[j]))) * b[j] for j in range(3))
    return BlochState(tuple(out))
