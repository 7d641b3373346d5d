import csv
from pathlib import Path
from typing import List, Sequence, Union

from ..models import EpochMetrics

METRICS_HEADER = ["epoch", "Train-P-Loss", "Train-C-Loss", "Test-P-Loss", "Test-C-Acc", "lambda"]


def _number(value: float) -> str:
    return f"{value:.8g}"


def metrics_row(metrics: EpochMetrics) -> List[str]:
    data = metrics.model_dump(by_alias=True)
    return [str(metrics.epoch)] + [_number(data[name]) for name in METRICS_HEADER[1:]]


def write_metrics_csv(path: Union[str, Path], metrics: Sequence[EpochMetrics]) -> None:
    """写指标 CSV：表头加每个 epoch 一行，数值保留 8 位有效数字"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for row in metrics:
            writer.writerow(metrics_row(row))


def read_metrics_csv(path: Union[str, Path]) -> List[EpochMetrics]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [EpochMetrics.model_validate(row) for row in csv.DictReader(f)]
