import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_net
from trackguard.errors import LogicEvaluationError
from trackguard.logic import (
    Abs,
    And,
    BinOp,
    Cmp,
    Const,
    Implies,
    Neg,
    Not,
    Or,
    Output,
    Var,
    constraint_loss,
    eval_exact,
    eval_truth,
    evaluate_constraint,
    match_robustness,
    robustness_body,
    substitute,
)

IDENTITY = dense_net(([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]))


def atom(truth: float) -> Cmp:
    """陡度为 1 时真值恰为 truth 的比较原子"""
    return Cmp("<=", Const(1.0 - truth), Const(0.0))


def fuzzy(formula, **env) -> float:
    return eval_truth(formula, env, IDENTITY, sharpness=1.0)


def exact(formula, **env) -> bool:
    return eval_exact(formula, env, IDENTITY)


def test_conjunction_is_min():
    assert fuzzy(And(atom(0.3), atom(0.7))) == pytest.approx(0.3)


def test_disjunction_is_max():
    assert fuzzy(Or(atom(0.3), atom(0.7))) == pytest.approx(0.7)


def test_implication_residuum():
    assert fuzzy(Implies(atom(0.2), atom(0.5))) == 1.0
    assert fuzzy(Implies(atom(0.7), atom(0.5))) == pytest.approx(0.5)


@pytest.mark.parametrize("truth", [0.0, 0.5, 1.0])
def test_implication_between_equal_truths_holds(truth):
    assert fuzzy(Implies(atom(truth), atom(truth))) == 1.0
    assert fuzzy(Implies(atom(0.0), atom(truth))) == 1.0


def test_negation_is_complement():
    assert fuzzy(Not(atom(0.25))) == pytest.approx(0.75)


@pytest.mark.parametrize("x, y", list(itertools.product([0, 1], repeat=2)))
def test_crisp_connectives_match_classical_tables(x, y):
    a, b = atom(float(x)), atom(float(y))
    assert fuzzy(And(a, b)) == float(x and y)
    assert fuzzy(Or(a, b)) == float(x or y)
    assert fuzzy(Implies(a, b)) == float((not x) or y)
    assert fuzzy(Not(a)) == float(not x)


def test_comparison_clamp_boundaries():
    satisfied = Cmp("<=", Const(0.05), Const(0.1))
    assert constraint_loss(satisfied, {}, IDENTITY, sharpness=0.1) == 0.0
    violated = Cmp("<=", Const(0.3), Const(0.1))
    assert constraint_loss(violated, {}, IDENTITY, sharpness=0.2) == pytest.approx(1.0)
    assert constraint_loss(violated, {}, IDENTITY, sharpness=0.4) == pytest.approx(0.5)


def test_reversed_comparison_is_oriented():
    assert fuzzy(Cmp(">=", Const(0.0), Const(0.25))) == pytest.approx(0.75)


def test_robustness_violation_of_half_sharpness_gives_half_loss():
    body = robustness_body(0.1)
    env = {"x": np.array([0.15, 0.0]), "x0": np.array([0.0, 0.0])}
    assert constraint_loss(body, env, IDENTITY) == pytest.approx(0.5, abs=1e-6)


def test_sharpness_defaults_to_delta_parameter():
    body = And(
        Cmp("<=", Abs(BinOp("-", Output("N", "x", 0), Output("N", "x0", 0))), Var("delta")),
        Cmp("<=", Abs(BinOp("-", Output("N", "x", 1), Output("N", "x0", 1))), Var("delta")),
    )
    env = {"x": np.array([0.0, 0.3]), "x0": np.array([0.0, 0.0]), "delta": 0.2}
    assert eval_truth(body, env, IDENTITY) == pytest.approx(0.5, abs=1e-6)


def test_exact_semantics_distinguishes_strictness():
    assert exact(Cmp("<=", Const(0.05), Const(0.1)))
    assert exact(Cmp("<=", Const(0.1), Const(0.1)))
    assert not exact(Cmp("<", Const(0.1), Const(0.1)))
    assert exact(Implies(Cmp("<", Const(1.0), Const(0.0)), Cmp("<", Const(1.0), Const(0.0))))


def test_arithmetic_expressions():
    expr = BinOp("/", BinOp("*", Neg(Const(2.0)), Var("a")), BinOp("+", Const(1.0), Const(1.0)))
    assert exact(Cmp("<=", expr, Const(-3.0)), a=3.0)
    assert not exact(Cmp("<", expr, Const(-3.0)), a=3.0)


def test_unbound_variable_is_an_error():
    with pytest.raises(LogicEvaluationError, match="未绑定"):
        fuzzy(Cmp("<=", Var("missing"), Const(0.0)))
    with pytest.raises(LogicEvaluationError):
        fuzzy(Cmp("<=", Output("N", "x", 0), Const(0.0)))


def test_division_by_zero_is_an_error():
    with pytest.raises(LogicEvaluationError, match="除以零"):
        fuzzy(Cmp("<=", BinOp("/", Const(1.0), Var("z")), Const(0.0)), z=0.0)


def test_output_index_out_of_range():
    with pytest.raises(LogicEvaluationError, match="越界"):
        fuzzy(Cmp("<=", Output("N", "x", 5), Const(0.0)), x=np.zeros(2))


def test_match_robustness_extracts_delta():
    assert match_robustness(robustness_body(0.25)) == 0.25
    with_param = substitute(robustness_body(0.0), {})
    assert match_robustness(with_param) == 0.0
    swapped = Cmp("<=", Abs(BinOp("-", Output("N", "x0", 0), Output("N", "x", 0))), Var("delta"))
    assert match_robustness(And(swapped, swapped), {"delta": 0.1}) == 0.1
    assert match_robustness(Or(atom(1.0), atom(1.0))) is None
    mixed = And(robustness_body(0.1, output_dim=1), robustness_body(0.2, output_dim=1))
    assert match_robustness(mixed) is None


def test_constraint_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    net = dense_net((rng.normal(size=(3, 2)), rng.normal(size=3)), (rng.normal(size=(2, 3)), rng.normal(size=2)),
                    activations=["tanh"], dtype=np.float64)
    body = robustness_body(0.0)
    x0 = np.array([0.2, -0.4])
    x = np.array([0.5, 0.1])

    def loss(point):
        return constraint_loss(body, {"x": point, "x0": x0}, net, sharpness=10.0)

    result = evaluate_constraint(body, {"x": x, "x0": x0}, net, 10.0, input_grads=True, parameter_grads=True)
    h = 1e-6
    for i in range(2):
        step = np.eye(2)[i] * h
        numeric = (loss(x + step) - loss(x - step)) / (2 * h)
        assert result.input_grads["x"][i] == pytest.approx(numeric, rel=1e-5, abs=1e-8)
    weight = net.layers[0].params["weight"]
    analytic = result.parameter_grads.tensors[0]["weight"]
    for index in [(0, 0), (1, 1), (2, 0)]:
        original = weight[index]
        weight[index] = original + h
        up = loss(x)
        weight[index] = original - h
        down = loss(x)
        weight[index] = original
        assert analytic[index] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-8)


def test_batched_evaluation_matches_single_samples():
    rng = np.random.default_rng(1)
    xs = rng.uniform(-1, 1, size=(5, 2))
    x0 = np.array([0.1, 0.1])
    body = robustness_body(0.3)
    batched = evaluate_constraint(body, {"x": xs, "x0": x0[None]}, IDENTITY, batched=True)
    single = [eval_truth(body, {"x": x, "x0": x0}, IDENTITY) for x in xs]
    np.testing.assert_allclose(batched.truth, single)


names = st.sampled_from(["a", "b", "c"])


def formulas(atoms, connectives):
    return st.recursive(atoms, lambda inner: st.one_of(
        *[st.builds(c, inner, inner) if c is not Not else st.builds(Not, inner) for c in connectives]
    ), max_leaves=8)


margin_atoms = st.builds(lambda name, bound: Cmp("<=", Var(name), Const(bound)), names, st.floats(-2.0, 2.0))
scalar_envs = st.fixed_dictionaries({n: st.floats(-2.0, 2.0) for n in ["a", "b", "c"]})


@settings(max_examples=300, deadline=None)
@given(formulas(margin_atoms, [And, Or, Implies, Not]), scalar_envs)
def test_truth_is_always_in_unit_interval(formula, env):
    truth = fuzzy(formula, **env)
    assert 0.0 <= truth <= 1.0


@settings(max_examples=300, deadline=None)
@given(formulas(margin_atoms, [And, Or]), scalar_envs, st.floats(0.0, 1.0))
def test_raising_every_margin_never_lowers_truth(formula, env, shift):
    lowered_env = {name: value - shift for name, value in env.items()}
    assert fuzzy(formula, **lowered_env) >= fuzzy(formula, **env) - 1e-12


@settings(max_examples=300, deadline=None)
@given(formulas(margin_atoms, [And, Or, Implies]), scalar_envs)
def test_satisfied_atoms_give_zero_loss(formula, env):
    # 把所有变量压到最小界以下，使每个原子都成立
    low = {name: -3.0 for name in env}
    assert exact(formula, **low)
    assert fuzzy(formula, **low) == 1.0


crisp_atoms = st.builds(lambda satisfied: Cmp("<=", Const(0.0 if satisfied else 1.0), Const(0.0)), st.booleans())


@settings(max_examples=300, deadline=None)
@given(formulas(crisp_atoms, [And, Or, Implies, Not]))
def test_crisp_fuzzy_semantics_agrees_with_exact(formula):
    assert fuzzy(formula) == float(exact(formula))
