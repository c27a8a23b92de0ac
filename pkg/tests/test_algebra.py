import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupoidqm import (
    ALPHA,
    ALPHA_INV,
    AlgebraElement,
    DensityMatrix,
    StateVector,
    UNIT_MINUS,
    UNIT_PLUS,
    algebra_unit,
    build_a2,
    build_from_table,
    build_pair_groupoid,
    commutator,
    convolve,
    delta,
    element_from_lines,
    element_from_matrix,
    element_to_lines,
    evolve_observable,
    fundamental_rep,
    heisenberg_rhs,
    involute,
    is_observable,
    lagrangian_element,
    operator_norm,
    pair_element,
    qubit_lagrangian,
    state_expectation,
)

A2 = build_a2()
P3 = build_pair_groupoid(3)

_coeff = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def elements_of(g):
    n = len(g.elements)
    return st.lists(_coeff, min_size=n, max_size=n).map(
        lambda cs: AlgebraElement(g, dict(zip(g.elements, cs)))
    )


def close(a: AlgebraElement, b: AlgebraElement, tol=1e-10) -> bool:
    return all(abs(a[e] - b[e]) <= tol for e in a.groupoid.elements)


def test_delta_products_match_table():
    assert convolve(delta(A2, ALPHA_INV), delta(A2, ALPHA)) == delta(A2, UNIT_PLUS)
    assert convolve(delta(A2, ALPHA), delta(A2, ALPHA_INV)) == delta(A2, UNIT_MINUS)
    # non-composable pairs vanish
    assert convolve(delta(A2, ALPHA), delta(A2, ALPHA)) == AlgebraElement(A2, {})


def test_unit_element():
    u = algebra_unit(A2)
    assert u[UNIT_PLUS] == 1 and u[UNIT_MINUS] == 1
    a = AlgebraElement(A2, {ALPHA: 2 - 1j, UNIT_MINUS: 0.5})
    assert convolve(u, a) == a
    assert convolve(a, u) == a


@given(elements_of(A2), elements_of(A2), elements_of(A2))
def test_associativity_a2(a, b, c):
    left = convolve(convolve(a, b), c)
    right = convolve(a, convolve(b, c))
    assert close(left, right)


@settings(max_examples=50)
@given(elements_of(P3), elements_of(P3), elements_of(P3))
def test_associativity_pair3(a, b, c):
    assert close(convolve(convolve(a, b), c), convolve(a, convolve(b, c)))


@given(elements_of(A2), elements_of(A2))
def test_involution_antihomomorphism(a, b):
    assert close(involute(convolve(a, b)), convolve(involute(b), involute(a)))


@given(elements_of(A2))
def test_involution_is_involutive(a):
    assert close(involute(involute(a)), a)


@given(elements_of(A2))
def test_rep_star_homomorphism(a):
    m = fundamental_rep(a)
    assert np.allclose(fundamental_rep(involute(a)), m.conj().T, atol=1e-12)


@given(elements_of(A2), elements_of(A2))
def test_rep_multiplicative(a, b):
    assert np.allclose(
        fundamental_rep(convolve(a, b)),
        fundamental_rep(a) @ fundamental_rep(b),
        atol=1e-10,
    )


@given(elements_of(A2))
def test_cstar_identity(a):
    n = operator_norm(a)
    assert abs(operator_norm(convolve(involute(a), a)) - n * n) <= 1e-9 * max(1.0, n * n)


def test_fundamental_rep_layout():
    a = AlgebraElement(
        A2, {UNIT_MINUS: 1.0, UNIT_PLUS: 2.0, ALPHA: 3.0, ALPHA_INV: 4.0}
    )
    m = fundamental_rep(a)
    # basis order (-, +); alpha: + -> - sits at row -, column +
    assert np.array_equal(m, np.array([[1.0, 3.0], [4.0, 2.0]], dtype=complex))
    assert np.array_equal(fundamental_rep(delta(A2, ALPHA)), np.array([[0, 1], [0, 0]], dtype=complex))


def test_operator_norm_of_transition_is_one():
    assert operator_norm(delta(A2, ALPHA)) == pytest.approx(1.0, abs=1e-14)
    assert operator_norm(algebra_unit(A2)) == pytest.approx(1.0, abs=1e-14)


def test_pair_groupoid_matrix_isomorphism_integer_exact():
    rng = np.random.default_rng(11)
    g = build_pair_groupoid(4)
    names = [(g.target[e], g.source[e]) for e in g.elements]
    idx = {o: k for k, o in enumerate(g.outcomes)}
    for _ in range(100):
        ca = rng.integers(-9, 10, size=len(g.elements))
        cb = rng.integers(-9, 10, size=len(g.elements))
        a = AlgebraElement(g, dict(zip(g.elements, (complex(int(x)) for x in ca))))
        b = AlgebraElement(g, dict(zip(g.elements, (complex(int(x)) for x in cb))))
        ma = np.zeros((4, 4), dtype=complex)
        mb = np.zeros((4, 4), dtype=complex)
        for e, (t, s) in zip(g.elements, names):
            ma[idx[t], idx[s]] = a[e]
            mb[idx[t], idx[s]] = b[e]
        prod = convolve(a, b)
        mprod = ma @ mb
        for e, (t, s) in zip(g.elements, names):
            assert prod[e] == mprod[idx[t], idx[s]]


def test_element_from_matrix_round_trip():
    g = build_pair_groupoid(3)
    a = AlgebraElement(g, {e: complex(i, -i) for i, e in enumerate(g.elements)})
    assert element_from_matrix(g, fundamental_rep(a)) == a


def test_element_from_matrix_refuses_non_injective_rep():
    g = build_from_table(
        """
outcomes: o
element: e o o
element: s o o
unit: o e
inverse: e e
inverse: s s
compose: e e = e
compose: e s = s
compose: s e = s
compose: s s = e
"""
    )
    with pytest.raises(ValueError, match="not injective"):
        element_from_matrix(g, np.array([[1.0]], dtype=complex))


def test_commutator_of_transition_pair():
    c = commutator(delta(A2, ALPHA), delta(A2, ALPHA_INV))
    assert c == AlgebraElement(A2, {UNIT_MINUS: 1, UNIT_PLUS: -1})


def test_lagrangian_element_is_observable():
    ell = qubit_lagrangian(0.7, -0.3, 1.1, 0.25)
    a = lagrangian_element(ell)
    assert is_observable(a)
    assert a[ALPHA] == 1.1 + 0.25j
    assert a[ALPHA_INV] == 1.1 - 0.25j


def test_heisenberg_rhs_is_ihbar_commutator():
    a = AlgebraElement(A2, {ALPHA: 1j, ALPHA_INV: -1j})
    h = lagrangian_element(qubit_lagrangian(0.2, 0.4, 0.9, 0.0))
    hbar = 0.7
    got = heisenberg_rhs(a, h, hbar)
    want = (1j * hbar) * commutator(a, h)
    assert close(got, want, tol=1e-14)


def test_heisenberg_rhs_requires_self_adjoint_h():
    h = delta(A2, ALPHA)
    with pytest.raises(ValueError):
        heisenberg_rhs(algebra_unit(A2), h, 1.0)


def test_evolve_observable_with_unit_hamiltonian_is_identity():
    a = AlgebraElement(A2, {ALPHA: 2.0, ALPHA_INV: 2.0, UNIT_MINUS: -1.0, UNIT_PLUS: -1.0})
    got = evolve_observable(a, algebra_unit(A2), t=1.37, hbar=0.5)
    assert close(got, a, tol=1e-12)


def test_evolve_observable_derivative_matches_commutator():
    # d/dt e^{itH/h} A e^{-itH/h} at t=0 equals (i/h)[h, a]
    a = AlgebraElement(A2, {ALPHA: 1.0, ALPHA_INV: 1.0})
    h = lagrangian_element(qubit_lagrangian(0.3, -0.2, 0.8, 0.1))
    hbar = 1.0
    eps = 1e-4
    fwd = evolve_observable(a, h, t=eps, hbar=hbar)
    bwd = evolve_observable(a, h, t=-eps, hbar=hbar)
    fd = (1.0 / (2 * eps)) * (fwd - bwd)
    want = (1j / hbar) * commutator(h, a)
    assert close(fd, want, tol=1e-6)


def test_evolve_observable_preserves_norm_and_adjointness():
    a = lagrangian_element(qubit_lagrangian(1.0, 2.0, -0.5, 0.3))
    h = lagrangian_element(qubit_lagrangian(0.1, 0.9, 0.4, -0.2))
    moved = evolve_observable(a, h, t=2.1, hbar=1.3)
    assert is_observable(moved, tol=1e-9)
    assert operator_norm(moved) == pytest.approx(operator_norm(a), abs=1e-10)


def test_state_expectation_pure():
    minus = StateVector((1.0, 0.0))
    assert state_expectation(minus, delta(A2, UNIT_MINUS)) == pytest.approx(1.0)
    assert state_expectation(minus, delta(A2, UNIT_PLUS)) == pytest.approx(0.0)
    # unnormalized states are normalized internally
    big = StateVector((2.0, 0.0))
    assert state_expectation(big, delta(A2, UNIT_MINUS)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        state_expectation(StateVector((0.0, 0.0)), delta(A2, UNIT_MINUS))


def test_state_expectation_density_positive():
    rng = np.random.default_rng(5)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = v / np.linalg.norm(v)
    rho = DensityMatrix(np.outer(v, v.conj()))
    for _ in range(20):
        cs = rng.normal(size=4) + 1j * rng.normal(size=4)
        a = AlgebraElement(A2, dict(zip(A2.elements, cs)))
        val = state_expectation(rho, convolve(involute(a), a))
        assert val.real >= -1e-12
        assert abs(val.imag) <= 1e-12


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.7, 0.0], [0.0, 0.7]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1.5, 0.0], [0.0, -0.5]]))


def test_element_serialization_round_trip():
    a = AlgebraElement(A2, {ALPHA: 0.5 - 2j, UNIT_PLUS: math.pi})
    text = element_to_lines(a)
    assert element_from_lines(A2, text) == a
    assert f"{ALPHA} = 0.5,-2" in text


def test_element_from_lines_rejects_unknown_name():
    with pytest.raises(ValueError, match="unknown element"):
        element_from_lines(A2, "nope = 1,0\n")


def test_scalar_and_linear_ops():
    a = delta(A2, ALPHA, 2.0)
    b = delta(A2, ALPHA_INV, 3.0)
    assert (a + b)[ALPHA] == 2.0
    assert (a - b)[ALPHA_INV] == -3.0
    assert (2j * a)[ALPHA] == 4j
    assert (-a)[ALPHA] == -2.0


def test_cross_groupoid_operations_rejected():
    with pytest.raises(ValueError):
        convolve(delta(A2, ALPHA), delta(P3, pair_element("x1", "x2")))
