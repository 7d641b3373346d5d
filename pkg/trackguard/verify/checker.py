import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from ..logic import EXACT, evaluate_constraint, robustness_body
from ..logic.semantics import split_env
from ..models import VerifyConfig
from ..netcore import Network
from ..train.pgd import pgd_attack
from .bounds import IntervalTensor, formula_holds, propagate_bounds

logger = logging.getLogger(__name__)

VERIFIED = "verified"
FALSIFIED = "falsified"
UNKNOWN = "unknown"


@dataclass
class Verdict:
    """验证结论

    Attributes:
        result: verified / falsified / unknown
        bounds: 输出界（unknown 时为所有叶子盒输出界的并）
        counterexample: falsified 时盒内的反例输入
        violation: falsified 时反例处的输出偏差（鲁棒性形状）或约束损失
        boxes: 检查过的叶子盒数量
        checker: ibp 或 bab（发生过输入划分）
        elapsed: 耗时（秒）
    """

    result: str
    bounds: Optional[IntervalTensor] = None
    counterexample: Optional[np.ndarray] = None
    violation: Optional[float] = None
    boxes: int = 1
    checker: str = "ibp"
    elapsed: float = 0.0
    center: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def verified(self) -> bool:
        return self.result == VERIFIED

    @property
    def falsified(self) -> bool:
        return self.result == FALSIFIED


class RobustnessChecker:
    """区间界验证 + PGD 证伪 + 可选的输入划分

    每个盒先做区间传播，在输出界上判定约束；判定不了就在盒内跑 PGD（abs 次梯度取 +1 与 -1 各一次），
    用经典语义确认反例；仍不确定且叶子盒数量未超过预算时，沿 半径 x 输入影响 最大的坐标二分。
    """

    def __init__(self, net: Network, body, x0: np.ndarray, epsilon: float, config: VerifyConfig = VerifyConfig(), *,
                 var: str = "x", anchor: str = "x0", extra_env: Optional[Mapping[str, Any]] = None,
                 delta: Optional[float] = None):
        self.net = net
        self.body = body
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.epsilon = float(epsilon)
        self.config = config
        self.var = var
        self.anchor = anchor
        self.extra_env = dict(extra_env or {})
        self.scalars, _ = split_env(self.extra_env)
        self.delta = delta
        self.center = net.forward_batch(net.as_batch(self.x0, batched=False))[0]
        self.influence = np.abs(net.input_influence()).reshape(-1)

    def _env(self, x: np.ndarray) -> Dict[str, Any]:
        env = dict(self.extra_env)
        env.update({self.var: x, self.anchor: self.x0})
        return env

    def bound_box(self, box: IntervalTensor, parent: Optional[IntervalTensor] = None) -> IntervalTensor:
        bounds = propagate_bounds(self.net, box)
        return bounds.intersect(parent) if parent is not None else bounds

    def decide_point(self, box: IntervalTensor) -> Optional[bool]:
        """退化盒只含一个点，直接用经典语义判定"""
        if np.any(box.upper > box.lower):
            return None
        exact = evaluate_constraint(self.body, self._env(box.lower.astype(np.float64)), self.net, mode=EXACT)
        return bool(exact.truth[0])

    def decide(self, bounds: IntervalTensor) -> Optional[bool]:
        outputs = {
            self.var: (bounds.lower.astype(np.float64), bounds.upper.astype(np.float64)),
            self.anchor: (self.center, self.center),
        }
        return formula_holds(self.body, outputs, self.scalars)

    def falsify(self, box: IntervalTensor) -> Optional[np.ndarray]:
        """在盒内搜索经典语义下不成立的点"""
        pgd = self.config.pgd
        for tiebreak in (1.0, -1.0):
            x_star = pgd_attack(
                self.net, self.body, self.x0, self.epsilon, pgd.steps, pgd.step_size, pgd.seed, pgd.random_start,
                var=self.var, anchor=self.anchor, extra_env=self.extra_env, sharpness=self.config.sharpness,
                abs_tiebreak=tiebreak, lower=box.lower, upper=box.upper,
            )
            exact = evaluate_constraint(self.body, self._env(x_star), self.net, mode=EXACT)
            if not exact.truth[0]:
                return x_star
        return None

    def violation(self, x_star: np.ndarray) -> float:
        output = self.net.forward_batch(self.net.as_batch(x_star, batched=False))[0]
        if self.delta is not None:
            return float(np.max(np.abs(output - self.center)))
        fuzzy = evaluate_constraint(self.body, self._env(x_star), self.net, self.config.sharpness)
        return float(fuzzy.loss[0])

    def split(self, box: IntervalTensor):
        """沿 半径 x 输入影响 最大的坐标二分；盒已退化时返回 None"""
        radius = box.radius.reshape(-1)
        if not np.any(radius > 0):
            return None
        score = radius * self.influence
        coordinate = int(np.argmax(score)) if np.any(score > 0) else int(np.argmax(radius))
        middle = (box.lower.reshape(-1)[coordinate] + box.upper.reshape(-1)[coordinate]) / 2.0
        left_upper = box.upper.copy().reshape(-1)
        right_lower = box.lower.copy().reshape(-1)
        left_upper[coordinate] = middle
        right_lower[coordinate] = middle
        return (
            IntervalTensor(box.lower, left_upper.reshape(box.shape)),
            IntervalTensor(right_lower.reshape(box.shape), box.upper),
        )

    def _falsified(self, x_star: np.ndarray, bounds: IntervalTensor, leaves: int, start: float) -> Verdict:
        return Verdict(
            result=FALSIFIED,
            bounds=bounds,
            counterexample=x_star,
            violation=self.violation(x_star),
            boxes=leaves,
            checker="bab" if leaves > 1 else "ibp",
            elapsed=time.perf_counter() - start,
            center=self.center,
        )

    def run(self) -> Verdict:
        start = time.perf_counter()
        root = IntervalTensor.ball(self.x0, self.epsilon)
        root_bounds = self.bound_box(root)
        decided = self.decide(root_bounds)
        if decided is None:
            decided = self.decide_point(root)
        if decided:
            return Verdict(VERIFIED, root_bounds, elapsed=time.perf_counter() - start, center=self.center)
        x_star = self.falsify(root)
        if x_star is not None:
            return self._falsified(x_star, root_bounds, 1, start)

        budget = self.config.split_budget
        pending = deque([(root, root_bounds)])
        settled: List[IntervalTensor] = []
        leaves = 1
        while pending and leaves + 1 <= budget:
            box, bounds = pending.popleft()
            children = self.split(box)
            if children is None:
                settled.append(bounds)
                continue
            leaves += 1
            for child in children:
                child_bounds = self.bound_box(child, bounds)
                if self.decide(child_bounds):
                    settled.append(child_bounds)
                    continue
                x_star = self.falsify(child)
                if x_star is not None:
                    return self._falsified(x_star, child_bounds, leaves, start)
                pending.append((child, child_bounds))
            logger.debug(f"划分后叶子盒 {leaves} 个，待定 {len(pending)} 个")
        checker = "bab" if leaves > 1 else "ibp"
        elapsed = time.perf_counter() - start
        if not pending and leaves > 1 and all(self.decide(b) for b in settled):
            return Verdict(VERIFIED, IntervalTensor.hull(settled), boxes=leaves, checker=checker,
                           elapsed=elapsed, center=self.center)
        hull = IntervalTensor.hull(settled + [b for _, b in pending])
        return Verdict(UNKNOWN, hull, boxes=leaves, checker=checker, elapsed=elapsed, center=self.center)


def check_property(net: Network, body, x0: np.ndarray, epsilon: float, config: VerifyConfig = VerifyConfig(),
                   **options) -> Verdict:
    """检查 x0 的 epsilon 球内任意 x 都满足约束"""
    verdict = RobustnessChecker(net, body, x0, epsilon, config, **options).run()
    logger.info(f"验证结论: {verdict.result}（{verdict.boxes} 个叶子盒，{verdict.elapsed:.3f}s）")
    return verdict


def check_robustness(net: Network, x0: np.ndarray, epsilon: float, delta: float,
                     config: VerifyConfig = VerifyConfig()) -> Verdict:
    """局部鲁棒性：球内任意 x 满足 |N(x) - N(x0)|∞ <= delta

    Returns:
        Verdict: verified、falsified（附反例与偏差）或 unknown（附输出界）
    """
    body = robustness_body(delta, net.output_dim)
    return check_property(net, body, x0, epsilon, config, delta=delta)
