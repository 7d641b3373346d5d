# 训练包
# 损失、PGD 反例搜索、GradNorm、训练循环、评估与指标 CSV
from .evaluation import evaluate
from .gradnorm import gradnorm_update
from .losses import mse_loss, mse_loss_with_grad, mse_per_sample
from .metrics import METRICS_HEADER, read_metrics_csv, write_metrics_csv
from .pgd import attack_box, pgd_attack, pgd_attack_batch
from .trainer import Trainer, steps_per_epoch, train_epochs

__all__ = [
    "METRICS_HEADER",
    "Trainer",
    "attack_box",
    "evaluate",
    "gradnorm_update",
    "mse_loss",
    "mse_loss_with_grad",
    "mse_per_sample",
    "pgd_attack",
    "pgd_attack_batch",
    "read_metrics_csv",
    "steps_per_epoch",
    "train_epochs",
    "write_metrics_csv",
]
