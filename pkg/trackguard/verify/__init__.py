# 验证包
# 区间界传播、鲁棒性检查（区间界 + PGD 证伪 + 输入划分）与报告
from .bounds import IntervalTensor, denormalize_bounds, format_pixel_bounds, formula_holds, propagate_bounds
from .checker import FALSIFIED, UNKNOWN, VERIFIED, RobustnessChecker, Verdict, check_property, check_robustness
from .report import format_bounds_table, format_report

__all__ = [
    "FALSIFIED",
    "IntervalTensor",
    "RobustnessChecker",
    "UNKNOWN",
    "VERIFIED",
    "Verdict",
    "check_property",
    "check_robustness",
    "denormalize_bounds",
    "format_bounds_table",
    "format_pixel_bounds",
    "format_report",
    "formula_holds",
    "propagate_bounds",
]
