# 逻辑包
# 约束语法树、Gödel 模糊语义、可微约束损失与经典求值
from .ast import (
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
    conjunction,
    constant_value,
    conjuncts,
    match_robustness,
    output_variables,
    robustness_body,
    substitute,
)
from .semantics import (
    DEFAULT_SHARPNESS,
    EXACT,
    FUZZY,
    SURROGATE,
    ConstraintEvaluation,
    constraint_loss,
    eval_exact,
    eval_truth,
    evaluate_constraint,
    resolve_sharpness,
)

__all__ = [
    "Abs",
    "And",
    "BinOp",
    "Cmp",
    "Const",
    "ConstraintEvaluation",
    "DEFAULT_SHARPNESS",
    "EXACT",
    "FUZZY",
    "Implies",
    "Neg",
    "Not",
    "Or",
    "Output",
    "SURROGATE",
    "Var",
    "conjunction",
    "constant_value",
    "conjuncts",
    "constraint_loss",
    "eval_exact",
    "eval_truth",
    "evaluate_constraint",
    "match_robustness",
    "output_variables",
    "resolve_sharpness",
    "robustness_body",
    "substitute",
]
