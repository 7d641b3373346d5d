import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .data import write_unit_image
from .models import RunManifest
from .netcore import Network

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ArtifactManager:
    """
    产物管理器
    负责训练与验证产物的写出：运行清单、验证报告、反例图像与权重导出。
    写出的内容不含时间戳，同样的输入得到逐字节相同的文件（报告的 time 行除外）。
    """

    def __init__(self, root: Optional[PathLike] = None):
        """
        初始化产物管理器

        Args:
            root: 相对路径的基准目录，默认当前目录
        """
        self.root = Path(root) if root is not None else None

    def resolve(self, path: PathLike) -> Path:
        path = Path(path)
        if self.root is not None and not path.is_absolute():
            path = self.root / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def manifest_path(weights_path: PathLike) -> Path:
        """清单与权重文件同名，后缀为 .json"""
        return Path(weights_path).with_suffix(".json")

    def write_manifest(self, weights_path: PathLike, manifest: RunManifest) -> Path:
        path = self.resolve(self.manifest_path(weights_path))
        data = manifest.model_dump(mode="json", by_alias=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
            f.write("\n")
        logger.info(f"运行清单已保存: {path}")
        return path

    def read_manifest(self, weights_path: PathLike) -> RunManifest:
        with open(self.manifest_path(weights_path), "r", encoding="utf-8") as f:
            return RunManifest.model_validate(json.load(f))

    def write_text(self, path: PathLike, text: str) -> Path:
        path = self.resolve(path)
        path.write_text(text, encoding="utf-8")
        logger.debug(f"已写出 {path}")
        return path

    def write_counterexample(self, path: PathLike, image: np.ndarray) -> Path:
        """反例写成 8 位 PGM（像素值量化到 0..255）"""
        path = self.resolve(path)
        write_unit_image(path, np.asarray(image).reshape(np.asarray(image).shape[-2:]))
        logger.info(f"反例图像已保存: {path}")
        return path

    @staticmethod
    def default_counterexample_path(report_path: Optional[PathLike]) -> Path:
        if report_path is None:
            return Path("counterexample.pgm")
        report_path = Path(report_path)
        return report_path.with_name(report_path.stem + ".counterexample.pgm")

    @staticmethod
    def weight_arrays(net: Network) -> Dict[str, np.ndarray]:
        return {f"layer{index}_{name}": param for index, name, param in net.parameters()}

    def export_weights(self, net: Network, path: PathLike, fmt: str = "npz") -> Path:
        """导出权重：npz 为 numpy 归档，json 包含层结构与参数"""
        path = self.resolve(path)
        if fmt == "npz":
            with open(path, "wb") as f:
                np.savez(f, input_shape=np.asarray(net.input_shape), **self.weight_arrays(net))
        elif fmt == "json":
            layers = []
            for layer in net.layers:
                entry: Dict[str, Any] = {"kind": layer.kind.name, "dims": list(layer.record_dims())}
                for name, param in layer.params.items():
                    entry[name] = param.astype(np.float64).tolist()
                layers.append(entry)
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"input_shape": list(net.input_shape), "layers": layers}, f)
                f.write("\n")
        else:
            raise ValueError(f"不支持的导出格式: {fmt}")
        logger.info(f"权重已导出 ({fmt}): {path}")
        return path


# 全局产物管理器实例
artifact_manager = ArtifactManager()
