import math
from enum import IntEnum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class LayerKind(IntEnum):
    """层类型，数值即 NNW 文件中的 kindTag"""

    CONV2D = 0
    RELU = 1
    MAXPOOL2D = 2
    FLATTEN = 3
    LINEAR = 4
    TANH = 5


class LayerSpec(BaseModel):
    """层配置模型

    描述一层的类型和超参数；参数张量由层实例持有。
    """

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    in_channels: Optional[int] = None  # Conv2D 输入通道
    out_channels: Optional[int] = None  # Conv2D 输出通道
    kernel_size: Optional[int] = None  # Conv2D / MaxPool2D
    stride: Optional[int] = None
    padding: Optional[int] = None
    in_features: Optional[int] = None  # Linear 输入维度；Flatten 的输出维度
    out_features: Optional[int] = None  # Linear 输出维度

    @model_validator(mode="after")
    def _check_required(self) -> "LayerSpec":
        required = {
            LayerKind.CONV2D: ("in_channels", "out_channels", "kernel_size", "stride", "padding"),
            LayerKind.MAXPOOL2D: ("kernel_size", "stride"),
            LayerKind.FLATTEN: ("in_features",),
            LayerKind.LINEAR: ("in_features", "out_features"),
        }.get(self.kind, ())
        for name in required:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{self.kind.name} 缺少字段 {name}")
            if value < 0 or (value == 0 and name != "padding"):
                raise ValueError(f"{self.kind.name}.{name} 非法: {value}")
        return self


def _ordered(value: Tuple[float, float], name: str) -> Tuple[float, float]:
    lo, hi = value
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"{name} 区间非法: {value}")
    return value


class GenConfig(BaseModel):
    """合成赛道数据集的生成配置

    几何范围以像素为单位；留空时按图像边长等比例取默认值。
    """

    count: int = Field(385, ge=1)
    side: int = Field(112, ge=8)  # 网络输入边长
    track_width: Optional[Tuple[float, float]] = None  # 路面宽度（像素）
    line_width: Optional[Tuple[float, float]] = None  # 中心线宽度（像素）
    angle: Tuple[float, float] = (-30.0, 30.0)  # 中心线相对竖直方向的角度（度）
    offset: Optional[Tuple[float, float]] = None  # 参考行处中心线相对图像中心的偏移（像素）
    brightness: Tuple[float, float] = (0.7, 1.2)  # 全局亮度系数
    noise_sigma: float = Field(0.02, ge=0.0)  # 加性高斯噪声标准差（[0,1] 灰度）
    reference_row: float = Field(0.75, gt=0.0, lt=1.0)  # 标签参考行占图像高度的比例
    color: bool = False  # True 时以 2 倍分辨率写出 RGB(P6) 图像
    seed: int = 0

    @field_validator("angle", "brightness")
    @classmethod
    def _check_range(cls, value, info):
        return _ordered(value, info.field_name)

    @model_validator(mode="after")
    def _fill_defaults(self) -> "GenConfig":
        side = self.side
        if self.track_width is None:
            self.track_width = (side * 0.25, side * 0.5)
        if self.line_width is None:
            self.line_width = (max(1.0, side * 0.018), max(1.5, side * 0.036))
        if self.offset is None:
            reach = max(0.0, min(side * 0.32, side / 2 - 4))
            self.offset = (-reach, reach)
        for name in ("track_width", "line_width", "offset"):
            _ordered(getattr(self, name), name)
        if self.track_width[0] <= 0 or self.line_width[0] <= 0:
            raise ValueError("路面宽度和中心线宽度必须为正")
        if self.brightness[0] <= 0:
            raise ValueError("亮度系数必须为正")
        # 标签与图像边缘至少相距 4 像素
        if side / 2 + self.offset[0] < 4 or side / 2 + self.offset[1] > side - 4:
            raise ValueError(f"offset {self.offset} 会使标签距边缘不足 4 像素")
        return self


class OptimizerConfig(BaseModel):
    """优化器配置（默认 Adam）"""

    kind: Literal["adam", "sgd"] = "adam"
    learning_rate: float = Field(1e-3, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)


class PgdConfig(BaseModel):
    """PGD 反例搜索配置"""

    epsilon: float = Field(4.0 / 255.0, ge=0.0)
    steps: int = Field(10, ge=0)
    step_size: Optional[float] = Field(None, ge=0.0)  # 留空时取 epsilon / 4
    random_start: bool = False
    seed: int = 0


class GradNormConfig(BaseModel):
    """GradNorm 损失权重自适应配置"""

    alpha: float = Field(1.5, ge=0.0)
    learning_rate: float = Field(0.025, gt=0.0)
    max_lambda: Optional[float] = Field(2.0, gt=0.0)  # λ = w1/w0 的上限，None 表示只按 1e-4 截断


class TrainConfig(BaseModel):
    """训练配置"""

    epochs: int = Field(100, ge=1)
    batch_size: int = Field(16, ge=1)
    constrained: bool = False
    delta: float = Field(0.1, ge=0.0)
    sharpness: Optional[float] = Field(None, gt=0.0)  # 比较原子的模糊化尺度 γ，留空取 delta
    pgd: PgdConfig = Field(default_factory=lambda: PgdConfig(random_start=True))
    eval_pgd: PgdConfig = Field(default_factory=lambda: PgdConfig(random_start=False))
    gradnorm: GradNormConfig = Field(default_factory=GradNormConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    seed: int = 0


class VerifyConfig(BaseModel):
    """鲁棒性验证配置"""

    split_budget: int = Field(0, ge=0)  # 叶子盒数量上限，0 表示只做一次区间传播
    pgd: PgdConfig = Field(default_factory=lambda: PgdConfig(random_start=False))
    sharpness: Optional[float] = Field(None, gt=0.0)


class GradNormState(BaseModel):
    """GradNorm 状态：任务权重 (w0 对应 L_MSE，w1 对应 L_phi)"""

    weights: List[float] = Field(default_factory=lambda: [1.0, 1.0])
    initial_losses: Optional[List[float]] = None
    step: int = Field(0, ge=0)

    @field_validator("weights")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if any(not (w > 0 and math.isfinite(w)) for w in value):
            raise ValueError(f"任务权重必须为正: {value}")
        return value

    @property
    def lambda_(self) -> float:
        return self.weights[1] / self.weights[0]


class LossBreakdown(BaseModel):
    """一个批次的损失分解"""

    prediction_loss: float = Field(ge=0.0, allow_inf_nan=False)
    constraint_loss: float = Field(ge=0.0, allow_inf_nan=False)
    combined: float = Field(ge=0.0, allow_inf_nan=False)


class EpochMetrics(BaseModel):
    """每个 epoch 输出到指标 CSV 的一行"""

    model_config = ConfigDict(populate_by_name=True)

    epoch: int = Field(ge=0)
    train_p_loss: float = Field(alias="Train-P-Loss")
    train_c_loss: float = Field(alias="Train-C-Loss")
    test_p_loss: float = Field(alias="Test-P-Loss")
    test_c_acc: float = Field(alias="Test-C-Acc", ge=0.0, le=1.0)
    lambda_: float = Field(alias="lambda")


class EvaluationResult(BaseModel):
    """评估结果：预测损失、约束准确率、对抗样本上的预测损失"""

    p_loss: float = Field(ge=0.0)
    c_acc: float = Field(ge=0.0, le=1.0)
    adversarial_p_loss: float = Field(ge=0.0)


class RunManifest(BaseModel):
    """训练产物的元数据（写在权重文件旁边，不含时间戳）"""

    config: TrainConfig
    input_side: int
    parameter_counts: List[int]
    train_samples: int
    test_samples: int
    metrics: List[EpochMetrics]
