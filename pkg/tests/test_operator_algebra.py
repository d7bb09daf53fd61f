import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwdirac import operator_algebra as alg
from qwdirac.operator_algebra import (
    CoinSet,
    GeneralizedWalkSpec,
    MasslessSetError,
    bcc_walk_spec,
    check_anticommuting,
    check_equal_norm,
    check_generalized_unitarity,
    check_parity_covariance,
    conjugate_set,
    make_dirac_set,
    make_line_set,
    make_weyl_set,
    projectors_from_delta,
    random_rotation,
    random_unitary,
    rotate_deltas,
    to_gamma,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_weyl_set_is_pauli():
    s = make_weyl_set()
    assert s.dim == 2 and s.q is None
    expected = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    for d, e in zip(s.deltas, expected):
        assert np.array_equal(d, e)
        assert np.array_equal(d @ d, np.eye(2))
    for a, b in itertools.combinations(s.deltas, 2):
        assert np.array_equal(a @ b + b @ a, np.zeros((2, 2)))


def test_weyl_equal_norm_by_hand():
    # P+_X = (I + sx)/2 and P+_Y = (I + sy)/2 written out
    px = np.array([[0.5, 0.5], [0.5, 0.5]])
    py = np.array([[0.5, -0.5j], [0.5j, 0.5]])
    assert np.allclose(px @ py @ px, 0.5 * px, atol=1e-15)
    pairs = make_weyl_set().pairs
    assert np.allclose(pairs[0].p_plus, px) and np.allclose(pairs[1].p_plus, py)


def test_dirac_set_layout():
    s = make_dirac_set()
    assert s.dim == 4
    assert np.array_equal(s.q, np.diag([1, 1, -1, -1]))
    assert np.trace(s.q) == 0
    ops = [s.q, *s.deltas]
    for a, b in itertools.combinations(ops, 2):
        assert alg.opnorm(a @ b + b @ a) == 0
    for pair in s.pairs:
        assert np.isclose(np.trace(pair.p_plus).real, 2) and np.isclose(np.trace(pair.p_minus).real, 2)
    gs = to_gamma(s)
    assert np.allclose(gs.g_spatial[0] @ gs.g_spatial[0], -np.eye(4), atol=0)


def test_projectors_from_delta():
    pp = projectors_from_delta(np.diag([1, -1]))
    assert np.array_equal(pp.p_plus, np.diag([1, 0])) and np.array_equal(pp.p_minus, np.diag([0, 1]))
    pp = projectors_from_delta(alg.SIGMA_X)
    assert np.isclose(np.trace(pp.p_plus), 1) and np.isclose(np.trace(pp.p_minus), 1)
    with pytest.raises(ValueError):
        projectors_from_delta(np.diag([1, 2]))
    with pytest.raises(ValueError):
        projectors_from_delta(np.array([[0, 1], [0, 0]]))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_projectors_of_conjugated_involution(seed):
    u = random_unitary(4, seed)
    delta = u @ np.diag([1, 1, -1, -1]) @ u.conj().T
    delta = (delta + delta.conj().T) / 2
    pp = projectors_from_delta(delta)
    assert np.array_equal(pp.p_plus + pp.p_minus, np.eye(4))
    assert alg.opnorm(pp.p_plus @ pp.p_plus - pp.p_plus) < 1e-12
    assert alg.opnorm(pp.p_plus @ pp.p_minus) < 1e-12


def test_conjugate_identity_is_noop():
    s = make_dirac_set()
    t = conjugate_set(s, np.eye(4))
    assert all(np.array_equal(a, b) for a, b in zip(s.deltas, t.deltas))
    assert np.array_equal(s.q, t.q)


def test_conjugate_rejects_non_unitary():
    with pytest.raises(ValueError):
        conjugate_set(make_dirac_set(), 2 * np.eye(4))


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_conjugation_preserves_certificates(seed):
    u = random_unitary(4, seed)
    t = conjugate_set(make_dirac_set(), u)
    assert check_anticommuting(t).residual_max < 1e-12
    assert check_equal_norm(t).passed
    assert check_parity_covariance(t).passed
    w = conjugate_set(make_weyl_set(), random_unitary(2, seed))
    assert check_equal_norm(w).passed


def test_equal_norm_examples():
    assert check_equal_norm(make_dirac_set()).residual_max < 1e-12
    assert check_equal_norm(make_weyl_set()).passed
    d = make_dirac_set()
    bad = CoinSet((d.deltas[0], d.deltas[0], d.deltas[2]), d.q)
    rep = check_equal_norm(bad)
    assert not rep.passed
    # P+_X P+_X P+_X - P+_X/2 = P+_X/2, operator norm 1/2
    assert np.isclose(rep.residual_max, 0.5)


def test_anticommuting_examples():
    assert check_anticommuting(make_dirac_set()).residual_max == 0
    z = np.diag([1.0, -1.0])
    rep = check_anticommuting(CoinSet((z, z, alg.SIGMA_X)))
    assert not rep.passed and np.isclose(rep.residual_max, 2.0)


def test_parity_covariance():
    assert check_parity_covariance(make_dirac_set()).passed
    d = make_dirac_set()
    assert not check_parity_covariance(CoinSet(d.deltas, np.eye(4))).passed
    with pytest.raises(MasslessSetError):
        check_parity_covariance(make_weyl_set())


def test_to_gamma_line_set():
    gs = to_gamma(make_line_set())
    assert np.array_equal(gs.g0, np.diag([1, -1]))
    assert np.array_equal(gs.g_spatial[0], np.array([[0, 1], [-1, 0]]))
    assert np.array_equal(gs.g_spatial[0] @ gs.g_spatial[0], -np.eye(2))
    assert np.allclose(np.linalg.eigvals(gs.g_spatial[0]), [1j, -1j]) or \
        np.allclose(np.linalg.eigvals(gs.g_spatial[0]), [-1j, 1j])


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_gamma_relations(seed):
    s = conjugate_set(make_dirac_set(), random_unitary(4, seed))
    gs = to_gamma(s)
    assert alg.opnorm(gs.g0 @ gs.g0 - np.eye(4)) < 1e-12
    for g in gs.g_spatial:
        assert alg.opnorm(g @ g + np.eye(4)) < 1e-12
        assert alg.opnorm(gs.g0 @ g + g @ gs.g0) < 1e-12
    assert alg.certify_gamma(gs).passed


def test_to_gamma_needs_q():
    with pytest.raises(MasslessSetError):
        to_gamma(make_weyl_set())


def test_rotate_identity_and_quarter_turn():
    s = make_dirac_set()
    same = rotate_deltas(s, np.eye(3))
    assert all(np.array_equal(a, b) for a, b in zip(s.deltas, same.deltas))
    rz = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    t = rotate_deltas(s, rz)
    # delta'_a = sum_b r[b, a] delta_b
    assert np.allclose(t.deltas[0], s.deltas[1])
    assert np.allclose(t.deltas[1], -s.deltas[0])
    assert np.allclose(t.deltas[2], s.deltas[2])
    assert check_anticommuting(t).passed


def test_rotate_rejects_non_orthogonal():
    with pytest.raises(ValueError):
        rotate_deltas(make_dirac_set(), np.diag([1.0, 2.0, 1.0]))


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_rotation_keeps_both_certificates(seed):
    r = random_rotation(seed)
    for s in (make_dirac_set(), make_weyl_set()):
        t = rotate_deltas(s, r)
        assert max(alg.opnorm(d @ d - np.eye(s.dim)) for d in t.deltas) < 1e-12
        assert check_anticommuting(t).residual_max < 1e-12
        assert check_equal_norm(t).passed


def _corrupted_sets(base, rng, count):
    out = []
    d = base.dim
    for i in range(count):
        u = random_unitary(d, rng)
        s = conjugate_set(base, u)
        if i % 2 == 0:
            deltas = (s.deltas[0], s.deltas[0], s.deltas[2])
        else:
            # biased projector: trace(delta) != 0
            biased = np.eye(d)
            biased[-1, -1] = -1 if d > 2 else 1
            deltas = (s.deltas[0], s.deltas[1], u @ biased @ u.conj().T)
        out.append(CoinSet(deltas, s.q))
    return out


def test_equivalence_theorem(rng):
    for base in (make_weyl_set(), make_dirac_set()):
        for _ in range(60):
            s = conjugate_set(base, random_unitary(base.dim, rng))
            assert check_equal_norm(s).passed == check_anticommuting(s).passed is True
        for s in _corrupted_sets(base, rng, 12):
            assert not check_equal_norm(s).passed
            assert not check_anticommuting(s).passed


def test_generalized_unitarity_examples():
    spec = bcc_walk_spec(make_dirac_set())
    assert len(spec.ops) == 8
    assert {tuple(abs(x) for x in disp) for disp, _ in spec.ops} == {(1, 1, 1)}
    assert check_generalized_unitarity(spec).passed
    assert check_generalized_unitarity(GeneralizedWalkSpec((((0, 0, 0), np.eye(2)),))).passed
    a = np.eye(2) / np.sqrt(2)
    rep = check_generalized_unitarity(GeneralizedWalkSpec((((1, 0, 0), a), ((-1, 0, 0), a))))
    assert not rep.passed and np.isclose(rep.residual_max, 0.5)


def test_generalized_walk_validation():
    with pytest.raises(ValueError):
        GeneralizedWalkSpec((((0, 0, 0), np.eye(2)), ((1, 0, 0), np.eye(3))))
    with pytest.raises(ValueError):
        GeneralizedWalkSpec((((0, 0, 0), np.eye(2)), ((0, 0, 0), np.eye(2))))
    with pytest.raises(ValueError):
        GeneralizedWalkSpec(())


def test_minimality_at_dimension_two():
    best, cand = alg.search_fourth_anticommuting(alg.PAULI, step_deg=1.0)
    # any n.sigma has max_i |{n.sigma, sigma_i}| = 2 max_i |n_i| >= 2/sqrt(3)
    assert best > 1.0
    assert np.isclose(best, 2 / np.sqrt(3), atol=1e-6)
    # the search does find a fourth operator when one exists
    found, m = alg.search_fourth_anticommuting(alg.PAULI[:2], step_deg=1.0)
    assert found < 1e-6
    assert np.allclose(np.abs(m), np.abs(alg.SIGMA_Z), atol=1e-5)


def test_coin_set_json_round_trip(tmp_path):
    s = conjugate_set(make_dirac_set(), random_unitary(4, 7))
    path = tmp_path / "set.json"
    path.write_text(s.to_json())
    t = CoinSet.load(path)
    for a, b in zip(s.deltas + (s.q,), t.deltas + (t.q,)):
        assert np.array_equal(a, b)
    data = json.loads(s.to_json())
    data["extra"] = 1
    with pytest.raises(ValueError):
        CoinSet.from_json(json.dumps(data))


def test_cert_report_json():
    rep = check_anticommuting(make_dirac_set())
    data = json.loads(rep.to_json())
    assert set(data) == {"check", "residual_max", "tolerance", "pass", "details"}
    assert data["pass"] is True and len(data["details"]) == 6


def test_sub_epsilon_tolerance_never_certifies():
    assert not check_anticommuting(make_dirac_set(), tol=1e-30).passed
