import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import smoothgames as sg
from smoothgames.errors import (ArgumentError, DimensionError, DomainError,
                                ParseError, ResourceError)

from conftest import nonstrategic_offsets, random_game, random_interior

SHAPES = [(2, 2), (3, 2), (2, 4), (2, 3, 2), (3, 3, 3)]

seeds = st.integers(0, 2**32 - 1)


def pennies():
    return sg.bundled_game("matching_pennies")


# ---------------------------------------------------------------------------
# construction and validation

def test_game_requires_two_players():
    with pytest.raises(DimensionError):
        sg.NormalFormGame((np.zeros(3),))


def test_game_rejects_mismatched_tensor_shapes():
    with pytest.raises(DimensionError):
        sg.NormalFormGame((np.zeros((2, 2)), np.zeros((2, 3))))


def test_game_rejects_wrong_tensor_count():
    with pytest.raises(DimensionError):
        sg.NormalFormGame((np.zeros((2, 2, 2)), np.zeros((2, 2, 2))))


def test_game_rejects_nonfinite_payoffs():
    t = np.zeros((2, 2))
    t[0, 1] = np.nan
    with pytest.raises(ArgumentError):
        sg.NormalFormGame((t, np.zeros((2, 2))))


def test_game_rejects_oversized_tensors():
    big = np.zeros((220, 220, 220))  # 1.06e7 entries
    with pytest.raises(ResourceError):
        sg.NormalFormGame((big, big, big))


def test_strategy_rejects_negative_mass():
    with pytest.raises(DomainError):
        sg.JointStrategy((np.array([1.2, -0.2]), np.array([0.5, 0.5])))


def test_strategy_rejects_bad_sum():
    with pytest.raises(DomainError):
        sg.JointStrategy((np.array([0.6, 0.6]), np.array([0.5, 0.5])))


def test_pure_strategy_index_range():
    x = sg.pure_strategy((2, 3), (1, 2))
    assert x.blocks[0].tolist() == [0.0, 1.0]
    assert x.blocks[1].tolist() == [0.0, 0.0, 1.0]
    with pytest.raises(ArgumentError):
        sg.pure_strategy((2, 3), (1, 3))
    with pytest.raises(DimensionError):
        sg.pure_strategy((2, 3), (1,))


def test_supports_and_interiority():
    x = sg.JointStrategy((np.array([0.5, 0.5, 0.0]), np.array([1.0, 0.0])))
    assert x.supports()[0].tolist() == [0, 1]
    assert x.supports()[1].tolist() == [0]
    assert not x.is_interior
    assert sg.uniform_strategy((3, 2)).is_interior


def test_replace_block_validates():
    x = sg.uniform_strategy((2, 2))
    y = sg.replace_block(x, 1, np.array([0.9, 0.1]))
    assert y.blocks[0].tolist() == [0.5, 0.5]
    assert y.blocks[1].tolist() == [0.9, 0.1]
    with pytest.raises(DomainError):
        sg.replace_block(x, 1, np.array([0.9, 0.2]))


def test_tangent_vector_must_be_centered():
    sg.TangentVector((np.array([0.5, -0.5]), np.zeros(3)))
    with pytest.raises(DomainError):
        sg.TangentVector((np.array([0.5, -0.4]), np.zeros(3)))


# ---------------------------------------------------------------------------
# projections

def test_centering_projection_properties():
    for k in (2, 3, 7):
        pi = sg.centering_projection(k)
        np.testing.assert_allclose(pi @ pi, pi, atol=1e-14)
        np.testing.assert_allclose(pi, pi.T, atol=1e-14)
        np.testing.assert_allclose(pi @ np.ones(k), 0.0, atol=1e-14)


def test_face_projection_zero_off_support():
    p = sg.face_projection(4, [0, 2])
    assert np.all(p[:, [1, 3]] == 0.0) and np.all(p[[1, 3], :] == 0.0)
    sub = p[np.ix_([0, 2], [0, 2])]
    np.testing.assert_allclose(sub, sg.centering_projection(2), atol=1e-14)


def test_tangent_basis_orthonormal():
    for k, support in [(3, None), (4, [0, 2, 3]), (5, [1, 4])]:
        b = sg.tangent_basis(k, support)
        dim = (k if support is None else len(support)) - 1
        assert b.shape == (k, dim)
        np.testing.assert_allclose(b.T @ b, np.eye(dim), atol=1e-12)
        # columns live on the face and sum to zero
        np.testing.assert_allclose(b.sum(axis=0), 0.0, atol=1e-12)
        if support is not None:
            off = [i for i in range(k) if i not in support]
            assert np.all(b[off] == 0.0)


# ---------------------------------------------------------------------------
# utilities and derivatives

def test_utility_matches_table_entries():
    g = pennies()
    for i in range(2):
        for j in range(2):
            x = sg.pure_strategy((2, 2), (i, j))
            assert sg.utility(g, x, 0) == g.payoffs[0][i, j]
            assert sg.utility(g, x, 1) == g.payoffs[1][i, j]


@settings(max_examples=40, deadline=None)
@given(seed=seeds, shape=st.sampled_from(SHAPES), player=st.integers(0, 2),
       alpha=st.floats(0.0, 1.0))
def test_utility_multilinear(seed, shape, player, alpha):
    rng = np.random.default_rng(seed)
    n = player % len(shape)
    g = random_game(rng, shape)
    x = random_interior(rng, shape)
    a = random_interior(rng, shape).blocks[n]
    b = random_interior(rng, shape).blocks[n]
    mixed = sg.replace_block(x, n, alpha * a + (1 - alpha) * b)
    for p in range(len(shape)):
        lhs = sg.utility(g, mixed, p)
        rhs = (alpha * sg.utility(g, sg.replace_block(x, n, a), p)
               + (1 - alpha) * sg.utility(g, sg.replace_block(x, n, b), p))
        assert abs(lhs - rhs) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=seeds, shape=st.sampled_from(SHAPES))
def test_gradient_entries_are_pure_payoffs(seed, shape):
    rng = np.random.default_rng(seed)
    g = random_game(rng, shape)
    x = random_interior(rng, shape)
    for n, k in enumerate(shape):
        grad = sg.gradient(g, x, n)
        for i in range(k):
            e = np.zeros(k)
            e[i] = 1.0
            assert abs(grad[i] - sg.utility(g, sg.replace_block(x, n, e), n)) <= 1e-12


def test_cross_hessian_rejects_diagonal():
    g = pennies()
    with pytest.raises(ArgumentError):
        sg.cross_hessian(g, sg.uniform_strategy((2, 2)), 0, 0)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, shape=st.sampled_from([(2, 3, 2), (3, 3, 3)]))
def test_cross_hessian_is_mixed_second_difference(seed, shape):
    rng = np.random.default_rng(seed)
    g = random_game(rng, shape)
    x = random_interior(rng, shape)
    h = 1e-5
    for n in range(len(shape)):
        for m in range(len(shape)):
            if n == m:
                continue
            jnm = sg.cross_hessian(g, x, n, m)
            dn = rng.standard_normal(shape[n])
            dn -= dn.mean()
            dm = rng.standard_normal(shape[m])
            dm -= dm.mean()

            def f(s, t):
                y = sg.replace_block(x, n, x.blocks[n] + s * dn)
                y = sg.replace_block(y, m, y.blocks[m] + t * dm)
                return sg.utility(g, y, n)

            fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h)
            assert abs(dn @ jnm @ dm - fd) <= 1e-6


def test_strategic_decomposition_reconstructs_utility():
    rng = np.random.default_rng(7)
    for shape in SHAPES:
        g = random_game(rng, shape)
        for n in range(len(shape)):
            dec = sg.strategic_decompose(g, n)
            for _ in range(5):
                x = random_interior(rng, shape)
                rebuilt = dec.linear_part(x) @ x.blocks[n] + dec.offset_part(x)
                assert abs(rebuilt - sg.utility(g, x, n)) <= 1e-10
                assert abs(dec.linear_part(x).sum()) <= 1e-10


def test_strategic_part_ignores_offsets():
    rng = np.random.default_rng(11)
    shape = (2, 3, 2)
    g = random_game(rng, shape)
    shifted = sg.NormalFormGame(tuple(
        t + o for t, o in zip(g.payoffs, nonstrategic_offsets(rng, shape))))
    x = random_interior(rng, shape)
    for n in range(len(shape)):
        a = sg.strategic_decompose(g, n).linear_part(x)
        b = sg.strategic_decompose(shifted, n).linear_part(x)
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_canonical_form_centers_gradients():
    rng = np.random.default_rng(3)
    shape = (3, 2, 2)
    g = random_game(rng, shape)
    base = random_interior(rng, shape)
    canon = sg.to_canonical(g, base)
    x = random_interior(rng, shape)
    for n in range(len(shape)):
        grad = sg.gradient(g, x, n)
        np.testing.assert_allclose(sg.gradient(canon.game, x, n),
                                   grad - grad.mean(), atol=1e-12)
        for m in range(len(shape)):
            if m == n:
                continue
            np.testing.assert_allclose(sg.cross_hessian(canon.game, x, n, m),
                                       sg.cross_hessian(g, x, n, m), atol=1e-12)


def test_canonical_form_requires_interior_base():
    g = pennies()
    with pytest.raises(DomainError):
        sg.to_canonical(g, sg.pure_strategy((2, 2), (0, 0)))


def test_canonical_utility_at_origin():
    g = pennies()
    base = sg.uniform_strategy((2, 2))
    canon = sg.to_canonical(g, base)
    zero = sg.TangentVector((np.zeros(2), np.zeros(2)))
    for n in range(2):
        grad = sg.gradient(g, base, n)
        strategic = sg.utility(g, base, n) - grad.mean()
        assert abs(canon.utility(zero, n) - strategic) <= 1e-12


# ---------------------------------------------------------------------------
# best responses and Nash gap

def test_best_response_ties_at_uniform():
    value, ties = sg.best_response_values(pennies(), sg.uniform_strategy((2, 2)), 0)
    assert value == 0.0
    assert sorted(ties) == [0, 1]


def test_nash_gap_examples():
    g = sg.bundled_game("example_A")
    assert sg.epsilon_nash_gap(g, sg.pure_strategy((3, 3), (1, 1))) == 0.0
    assert sg.epsilon_nash_gap(g, sg.pure_strategy((3, 3), (0, 0))) == 2.0
    assert sg.epsilon_nash_gap(pennies(), sg.uniform_strategy((2, 2))) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=seeds, shape=st.sampled_from(SHAPES))
def test_nash_gap_nonnegative(seed, shape):
    rng = np.random.default_rng(seed)
    g = random_game(rng, shape)
    x = random_interior(rng, shape)
    assert sg.epsilon_nash_gap(g, x) >= 0.0


# ---------------------------------------------------------------------------
# serialization

def test_game_dict_round_trip():
    rng = np.random.default_rng(5)
    g = random_game(rng, (2, 3, 2))
    back = sg.game_from_dict(sg.game_to_dict(g))
    for a, b in zip(g.payoffs, back.payoffs):
        np.testing.assert_array_equal(a, b)


def test_save_load_round_trip(tmp_path):
    g = pennies()
    path = tmp_path / "pennies.json"
    sg.save_game(g, path)
    back = sg.load_game(path)
    np.testing.assert_array_equal(back.payoffs[0], g.payoffs[0])
    np.testing.assert_array_equal(back.payoffs[1], g.payoffs[1])


def test_bundled_games_present():
    names = sg.bundled_game_names()
    for name in ("matching_pennies", "coordination_2x2", "example_A"):
        assert name in names
        sg.bundled_game(name)
    with pytest.raises(ArgumentError):
        sg.bundled_game("no_such_game")


def test_load_game_falls_back_to_bundled_names(tmp_path):
    g = sg.load_game("matching_pennies")
    assert g.shape == (2, 2)
    with pytest.raises(FileNotFoundError):
        sg.load_game(tmp_path / "missing.json")


def test_game_from_dict_errors():
    with pytest.raises(ParseError):
        sg.game_from_dict({"players": 2, "shape": [2, 2]})  # no payoffs
    with pytest.raises(ParseError):
        sg.game_from_dict({"players": 2, "shape": [2, 2],
                           "payoffs": [[[0, 0], [0, 0]]]})  # one tensor
    with pytest.raises(ParseError):
        sg.game_from_dict({"players": 2, "shape": [2, 2],
                           "payoffs": [[[0, "x"], [0, 0]], [[0, 0], [0, 0]]]})
    with pytest.raises(ResourceError):
        sg.game_from_dict({"players": 2, "shape": [4000, 4000],
                           "payoffs": [[0.0], [0.0]], "name": "big"})


def test_game_json_is_plain_data(tmp_path):
    path = tmp_path / "g.json"
    sg.save_game(pennies(), path)
    data = json.loads(path.read_text())
    assert data["players"] == 2
    assert data["shape"] == [2, 2]
