import math

import numpy as np
import pytest

from polariphase.spincore import (
    AxisAngle,
    BlochState,
    DegenerateCosXi,
    IDENTITY2,
    KET_PLUS_Z,
    NotSpecialUnitary,
    PAULI_X,
    PAULI_Z,
    Su2Params,
    ZeroAxis,
    arg_cos_xi,
    axis_angle_from_matrix,
    axis_angle_to_matrix,
    bloch_apply,
    is_special,
    is_unitary,
    mixed_state_phase,
    pancharatnam_phase,
    params_from_matrix,
    phase_is_singular,
    rotation,
    su2_from_params,
)


def _random_params(rng, avoid_degenerate=True):
    xi = rng.uniform(0.0, math.pi)
    if avoid_degenerate:
        while min(abs(xi), abs(xi - math.pi), abs(xi - math.pi / 2)) < 5e-2:
            xi = rng.uniform(0.0, math.pi)
    delta = rng.uniform(-math.pi / 2 + 1e-2, math.pi / 2 - 1e-2)
    zeta = rng.uniform(-math.pi + 1e-6, math.pi)
    return Su2Params(xi, delta, zeta)


def test_su2_from_params_is_special_unitary():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        u = su2_from_params(_random_params(rng, avoid_degenerate=False))
        assert is_unitary(u)
        assert is_special(u)


def test_params_round_trip_on_canonical_ranges():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        p = _random_params(rng)
        q = params_from_matrix(su2_from_params(p))
        assert abs(q.xi - p.xi) < 1e-9
        assert abs(q.delta - p.delta) < 1e-9
        assert abs(((q.zeta - p.zeta + math.pi) % (2 * math.pi)) - math.pi) < 1e-9


def test_params_matrix_round_trip_everywhere():
    # even off the canonical branch, the recovered parameters must
    # regenerate the same matrix
    rng = np.random.default_rng(3)
    for _ in range(2_000):
        aa = AxisAngle(tuple(rng.normal(size=3)), rng.uniform(0, 2 * math.pi))
        u = axis_angle_to_matrix(aa)
        v = su2_from_params(params_from_matrix(u))
        assert np.max(np.abs(u - v)) < 1e-9


def test_degenerate_inverses_flagged():
    p = params_from_matrix(su2_from_params(Su2Params(0.0, 0.7, 0.0)))
    assert p.degeneracy == "sin_zero"
    assert p.zeta == 0.0
    q = params_from_matrix(su2_from_params(Su2Params(math.pi / 2, 0.0, 0.9)))
    assert q.degeneracy == "cos_zero"
    assert q.delta == 0.0


def test_params_from_matrix_rejects_non_special():
    with pytest.raises(NotSpecialUnitary):
        params_from_matrix(np.diag([2.0, 0.5]).astype(complex))
    with pytest.raises(NotSpecialUnitary):
        params_from_matrix(1j * IDENTITY2)   # determinant -1


def test_axis_angle_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(5_000):
        axis = rng.normal(size=3)
        angle = rng.uniform(1e-3, 2 * math.pi - 1e-3)
        aa = AxisAngle(tuple(axis), angle)
        back = axis_angle_from_matrix(axis_angle_to_matrix(aa))
        assert abs(back.angle - aa.angle) < 1e-9
        assert np.max(np.abs(np.array(back.axis) - np.array(aa.axis))) < 1e-9


def test_axis_angle_rejects_zero_axis():
    with pytest.raises(ZeroAxis):
        AxisAngle((0.0, 0.0, 0.0), 1.0)


def test_rotation_composes():
    rng = np.random.default_rng(5)
    for _ in range(200):
        a, b = rng.uniform(0, math.pi, size=2)
        u = rotation((0, 0, 1), a) @ rotation((0, 0, 1), b)
        v = rotation((0, 0, 1), a + b)
        assert np.max(np.abs(u - v)) < 1e-12


def test_pancharatnam_phase_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(5_000):
        p = _random_params(rng)
        u = su2_from_params(p)
        phi = pancharatnam_phase(KET_PLUS_Z, u @ KET_PLUS_Z)
        expected = p.delta + arg_cos_xi(p)
        expected = math.remainder(expected, 2 * math.pi)
        if expected <= -math.pi:
            expected += 2 * math.pi
        assert abs(phi - expected) < 1e-12


def test_pancharatnam_phase_orthogonal_is_none():
    u = su2_from_params(Su2Params(math.pi / 2, 0.0, 0.3))
    assert pancharatnam_phase(KET_PLUS_Z, u @ KET_PLUS_Z) is None


def test_mixed_state_phase_pure_limit_matches_pancharatnam():
    rng = np.random.default_rng(7)
    for _ in range(5_000):
        p = _random_params(rng)
        u = su2_from_params(p)
        phi = pancharatnam_phase(KET_PLUS_Z, u @ KET_PLUS_Z)
        # reduce to the principal arctan branch
        reduced = math.atan(math.tan(phi)) if abs(math.cos(phi)) > 1e-12 else math.copysign(math.pi / 2, math.sin(phi))
        assert abs(mixed_state_phase(1.0, p) - reduced) < 1e-12


def test_mixed_state_phase_singularity():
    assert phase_is_singular(Su2Params(0.3, math.pi / 2, 0.1))
    assert not phase_is_singular(Su2Params(0.3, 0.4, 0.1))
    with pytest.raises(DegenerateCosXi):
        arg_cos_xi(Su2Params(math.pi / 2, 0.3, 0.1))


def test_bloch_apply_preserves_norm_and_composes():
    rng = np.random.default_rng(8)
    for _ in range(2_000):
        u = su2_from_params(_random_params(rng, avoid_degenerate=False))
        v = su2_from_params(_random_params(rng, avoid_degenerate=False))
        vec = rng.normal(size=3)
        vec *= rng.uniform(0, 1) / np.linalg.norm(vec)
        s = BlochState(tuple(vec))
        assert abs(bloch_apply(u, s).r - s.r) < 1e-12
        lhs = bloch_apply(u @ v, s)
        rhs = bloch_apply(u, bloch_apply(v, s))
        assert np.max(np.abs(np.array(lhs.bloch) - np.array(rhs.bloch))) < 1e-12


def test_bloch_apply_rotates_z_to_x():
    u = rotation((0, 1, 0), math.pi / 2)
    s = bloch_apply(u, BlochState.along_z(1.0))
    assert np.max(np.abs(np.array(s.bloch) - np.array([1.0, 0.0, 0.0]))) < 1e-12


def test_pauli_constants_are_read_only():
    with pytest.raises(ValueError):
        PAULI_X[0, 0] = 5.0
    with pytest.raises(ValueError):
        PAULI_Z[0, 0] = 5.0
