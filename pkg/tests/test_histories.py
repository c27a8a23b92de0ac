import cmath
import math

import numpy as np
import pytest

from groupoidqm import (
    ALPHA,
    ALPHA_INV,
    EnumerationCapExceeded,
    OutcomeBias,
    QLagrangian,
    Segment,
    TimeGrid,
    UNIT_MINUS,
    UNIT_PLUS,
    action,
    amplitude_via_reference,
    build_a2,
    build_pair_groupoid,
    compose_histories,
    decompose_history,
    enumerate_histories,
    history_amplitude,
    history_from_text,
    history_to_text,
    invert_history,
    is_loop,
    make_history,
    n_step_path_sum,
    qubit_bias,
    qubit_lagrangian,
    single_step_matrix,
    total_variation,
    unit_history,
)

A2 = build_a2()


def hist(steps, start=None, t_start=0.0, tau=1.0, orientation=+1):
    grid = TimeGrid(t_start, tau, len(steps))
    if not steps:
        return make_history(A2, grid, (), start=start)
    return make_history(A2, grid, ((orientation, tuple(steps)),), start=start)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.0, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, -1.0, 3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, -1)
    assert TimeGrid(1.0, 0.5, 4).t_end == 3.0


def test_qubit_lagrangian_values():
    ell = qubit_lagrangian(1.0, 2.0, 3.0, 0.5)
    assert ell[UNIT_PLUS] == -1.0
    assert ell[UNIT_MINUS] == -2.0
    assert ell[ALPHA] == 3.0 + 0.5j
    assert ell[ALPHA_INV] == 3.0 - 0.5j


def test_history_chaining_diagnostics():
    with pytest.raises(ValueError, match="step 2"):
        hist([ALPHA, ALPHA])  # alpha ends at -, alpha does not leave -
    with pytest.raises(ValueError, match="declared start"):
        hist([ALPHA], start="-")  # alpha leaves +
    with pytest.raises(ValueError):
        make_history(A2, TimeGrid(0.0, 1.0, 2), ((1, (ALPHA,)),))  # step count mismatch


def test_history_times_and_ticks():
    w = make_history(
        A2,
        TimeGrid(0.0, 0.5, 3),
        ((+1, (ALPHA_INV, UNIT_PLUS)), (-1, (ALPHA,))),
    )
    assert w.start_outcome == "-"
    assert w.end_outcome == "-"
    assert w.net_ticks == 2 - 1
    assert w.end_time == pytest.approx(0.5)
    assert w.steps() == (ALPHA_INV, UNIT_PLUS, ALPHA)


def test_enumeration_two_step_minus_to_plus():
    found = enumerate_histories(A2, "-", "+", 2)
    step_sets = {w.steps() for w in found}
    assert step_sets == {(UNIT_MINUS, ALPHA_INV), (ALPHA_INV, UNIT_PLUS)}
    for w in found:
        assert w.start_outcome == "-" and w.end_outcome == "+"
        assert w.segments[0].orientation == 1


def test_enumeration_count_doubles_per_step():
    for n in range(1, 7):
        assert len(enumerate_histories(A2, "-", "-", n)) == 2 ** (n - 1)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapExceeded) as exc:
        enumerate_histories(A2, "-", "-", 12, cap=100)
    assert exc.value.required == 2 ** 11
    assert exc.value.cap == 100


def test_total_variation_examples():
    assert total_variation(hist([ALPHA_INV, UNIT_PLUS])) == ALPHA_INV
    assert total_variation(hist([ALPHA_INV, ALPHA])) == UNIT_MINUS
    assert total_variation(unit_history(A2, "+")) == UNIT_PLUS


def test_compose_and_invert_round_trip():
    w1 = hist([ALPHA_INV])
    w2 = hist([ALPHA], t_start=1.0)
    w = compose_histories(w2, w1)
    assert w.steps() == (ALPHA_INV, ALPHA)
    assert w.n_steps == 2
    assert is_loop(w)
    back = invert_history(w)
    assert back.steps() == (ALPHA_INV, ALPHA)
    assert back.segments[0].orientation == -1
    assert back.start_time == pytest.approx(2.0)
    again = invert_history(back)
    assert again == w


def test_compose_rejects_mismatches():
    with pytest.raises(ValueError, match="ends at"):
        compose_histories(hist([ALPHA], t_start=1.0), hist([UNIT_MINUS]))
    with pytest.raises(ValueError, match="t="):
        compose_histories(hist([ALPHA], t_start=5.0), hist([ALPHA_INV]))


def test_is_loop_cases():
    assert is_loop(unit_history(A2, "-"))
    assert is_loop(hist([ALPHA_INV, ALPHA]))
    assert not is_loop(hist([ALPHA_INV]))
    # same endpoints but net ticks 2 over a 4-step span: 2 % 4 != 0
    w = make_history(
        A2,
        TimeGrid(0.0, 1.0, 4),
        ((+1, (ALPHA_INV, ALPHA, ALPHA_INV)), (-1, (ALPHA,))),
    )
    assert w.start_outcome == w.end_outcome == "-"
    assert w.net_ticks == 2
    assert not is_loop(w)


def test_action_frozen_values():
    mu, delta_, v_plus, v_minus, tau = 1.3, 0.4, 0.9, -0.2, 0.75
    ell = qubit_lagrangian(v_plus, v_minus, mu, delta_)
    w = hist([ALPHA_INV, UNIT_PLUS], tau=tau)
    expected = ((mu - 1j * delta_) + (-v_plus)) * tau
    assert action(w, ell) == pytest.approx(expected)
    back = invert_history(w)
    assert action(back, ell) == pytest.approx(-expected.conjugate())


def test_action_additive_and_anticonjugate():
    ell = qubit_lagrangian(0.3, 1.1, -0.7, 0.2)
    w1 = hist([ALPHA_INV])
    w2 = hist([UNIT_PLUS, ALPHA], t_start=1.0)
    w = compose_histories(w2, w1)
    assert action(w, ell) == pytest.approx(action(w1, ell) + action(w2, ell))
    assert action(invert_history(w), ell) == pytest.approx(-action(w, ell).conjugate())


def test_amplitude_half_i():
    # one alpha step at mu*tau/hbar = pi/2 with even bias
    ell = qubit_lagrangian(0.0, 0.0, math.pi / 2, 0.0)
    bias = qubit_bias(0.5)
    w = hist([ALPHA])
    amp = history_amplitude(w, ell, bias, hbar=1.0)
    assert amp == pytest.approx(0.5j)


def test_amplitude_cocycle():
    ell = qubit_lagrangian(0.2, -0.4, 0.8, 0.1)
    bias = qubit_bias(0.3)
    w1 = hist([ALPHA_INV])
    w2 = hist([UNIT_PLUS], t_start=1.0)
    w = compose_histories(w2, w1)
    lhs = history_amplitude(w2, ell, bias, 1.0) * history_amplitude(w1, ell, bias, 1.0)
    rhs = bias["+"] * history_amplitude(w, ell, bias, 1.0)
    assert lhs == pytest.approx(rhs)


def test_two_step_return_amplitude_interferes():
    # [-][-] entry at N=2: 1/4 + exp(2 i theta)/4, vanishing at theta = pi/2
    for theta in (0.0, 0.7, math.pi / 2, 2.0):
        ell = qubit_lagrangian(0.0, 0.0, theta, 0.0)
        bias = qubit_bias(0.5)
        m = n_step_path_sum(A2, ell, bias, 1.0, 1.0, 2)
        expected = 0.25 + cmath.exp(2j * theta) / 4
        assert m[0, 0] == pytest.approx(expected, abs=1e-15)
    ell = qubit_lagrangian(0.0, 0.0, math.pi / 2, 0.0)
    m = n_step_path_sum(A2, ell, qubit_bias(0.5), 1.0, 1.0, 2)
    assert abs(m[0, 0]) < 1e-16


def test_path_sum_equals_matrix_power():
    ell = qubit_lagrangian(0.4, -0.9, 1.2, 0.15)
    bias = qubit_bias(0.35)
    u1 = single_step_matrix(A2, ell, bias, 0.8, 1.1)
    for n in range(1, 7):
        ps = n_step_path_sum(A2, ell, bias, 0.8, 1.1, n)
        assert np.allclose(ps, np.linalg.matrix_power(u1, n), atol=1e-13)


def test_path_sum_equals_matrix_power_pair3():
    g = build_pair_groupoid(3)
    idx = {o: i for i, o in enumerate(g.outcomes)}
    ell = QLagrangian(
        g, {e: 0.3 * (idx[g.target[e]] + idx[g.source[e]]) + 0.5j * (idx[g.target[e]] - idx[g.source[e]]) for e in g.elements}
    )
    bias = OutcomeBias.uniform(g)
    u1 = single_step_matrix(g, ell, bias, 1.0, 1.0)
    for n in (1, 2, 3, 4):
        ps = n_step_path_sum(g, ell, bias, 1.0, 1.0, n)
        assert np.allclose(ps, np.linalg.matrix_power(u1, n), atol=1e-13)


def test_path_sum_semigroup():
    ell = qubit_lagrangian(0.1, 0.6, -0.8, 0.05)
    bias = qubit_bias(0.25)
    m5 = n_step_path_sum(A2, ell, bias, 1.0, 1.0, 5)
    m2 = n_step_path_sum(A2, ell, bias, 1.0, 1.0, 2)
    m3 = n_step_path_sum(A2, ell, bias, 1.0, 1.0, 3)
    assert np.allclose(m5, m3 @ m2, atol=1e-14)


def test_path_sum_single_step_is_exact():
    ell = qubit_lagrangian(0.4, -0.9, 1.2, 0.15)
    bias = qubit_bias(0.35)
    assert np.array_equal(
        n_step_path_sum(A2, ell, bias, 0.8, 1.1, 1),
        single_step_matrix(A2, ell, bias, 0.8, 1.1),
    )


def test_path_sum_respects_cap():
    g = build_pair_groupoid(5)
    ell = QLagrangian(g, {e: 0.0 for e in g.elements})
    with pytest.raises(EnumerationCapExceeded):
        n_step_path_sum(g, ell, OutcomeBias.uniform(g), 1.0, 1.0, 4, cap=100)


def test_decompose_four_step_loop():
    w = hist([ALPHA_INV, ALPHA])
    w_ref = hist([UNIT_MINUS, UNIT_MINUS])
    sigma = decompose_history(w, w_ref)
    assert sigma.n_steps == 4
    assert is_loop(sigma)
    assert sigma.steps() == (ALPHA_INV, ALPHA, UNIT_MINUS, UNIT_MINUS)
    assert total_variation(sigma) == UNIT_MINUS
    recomposed = compose_histories(w_ref, sigma)
    assert total_variation(recomposed) == total_variation(w)


def test_decompose_requires_shared_endpoints():
    with pytest.raises(ValueError, match="endpoints"):
        decompose_history(hist([ALPHA_INV]), hist([UNIT_MINUS]))


def test_reference_independence_quick():
    ell = qubit_lagrangian(0.2, -0.1, 0.9, 0.12)
    bias = qubit_bias(0.4)
    base = hist([UNIT_MINUS, ALPHA_INV])
    ref1 = hist([ALPHA_INV, UNIT_PLUS])
    ref2 = base
    a1 = amplitude_via_reference(ref1, base, ell, bias, hbar=1.0)
    a2 = amplitude_via_reference(ref2, base, ell, bias, hbar=1.0)
    assert a1 == pytest.approx(a2, abs=1e-15)
    # gauge fixes the base reference to its bare weight
    want = bias["-"] ** 0.5 * bias["+"] ** 0.5 * cmath.exp(
        1j * action(base, ell).conjugate()
    )
    assert a2 == pytest.approx(want, abs=1e-14)


def test_history_text_round_trip():
    w = make_history(
        A2,
        TimeGrid(0.0, 1.0, 3),
        ((+1, (ALPHA_INV, UNIT_PLUS)), (-1, (ALPHA,))),
    )
    text = history_to_text(w)
    assert text == f"+:{ALPHA_INV},{UNIT_PLUS};-:{ALPHA}"
    assert history_from_text(A2, text) == w
    empty = unit_history(A2, "+")
    assert history_from_text(A2, history_to_text(empty), start="+") == empty
