from pathlib import Path
from typing import List, Optional, Sequence

from .bounds import IntervalTensor, denormalize_bounds, format_pixel_bounds
from .checker import FALSIFIED, UNKNOWN, Verdict

REPORT_PREFIX = "trackguard.verify"


def format_bounds(bounds: IntervalTensor) -> str:
    return " ".join(f"[{float(lo):.8g}, {float(hi):.8g}]" for lo, hi in zip(bounds.lower, bounds.upper))


def format_report(verdict: Verdict, side: int = 112, counterexample_path: Optional[Path] = None) -> str:
    """验证报告文本

    首行是检查器名称，随后缩进的 result:、time: 行；falsified 附偏差与反例文件，unknown 附输出界。
    """
    lines = [f"{REPORT_PREFIX}.{verdict.checker}", f"  result: {verdict.result}", f"  time: {verdict.elapsed:.4f}"]
    if verdict.boxes > 1:
        lines.append(f"  boxes: {verdict.boxes}")
    if verdict.result == FALSIFIED:
        lines.append(f"  violation: {verdict.violation:.8g}")
        if counterexample_path is not None:
            lines.append(f"  counterexample: {counterexample_path}")
    if verdict.result == UNKNOWN and verdict.bounds is not None:
        lines.append(f"  bounds: {format_bounds(verdict.bounds)}")
        lines.append(f"  pixel_bounds: {format_pixel_bounds(denormalize_bounds(verdict.bounds, side))}")
    return "\n".join(lines) + "\n"


def format_bounds_table(epsilons: Sequence[float], names: Sequence[str],
                        rows: Sequence[Sequence[IntervalTensor]], side: int = 112) -> str:
    """多个模型在多个 epsilon 下的像素输出界表：每行一个 epsilon，每个模型每个坐标一列"""
    header: List[str] = ["epsilon"]
    for name in names:
        header += [f"{name}:x", f"{name}:y", f"{name}:width"]
    lines = ["\t".join(header)]
    for epsilon, per_model in zip(epsilons, rows):
        cells = [f"{epsilon:.6g}"]
        for bounds in per_model:
            pixels = denormalize_bounds(bounds, side)
            cells += [format_pixel_bounds([p]) for p in pixels[:2]]
            cells.append(" ".join(str(hi - lo) for lo, hi in pixels[:2]))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
