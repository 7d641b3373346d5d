import importlib
import logging
from typing import Dict, Tuple, Type

from ...errors import WeightFormatError
from ...models import LayerKind, LayerSpec
from .base import BaseLayer

logger = logging.getLogger(__name__)

BUILTIN_MODULES = ("conv", "pooling", "dense", "activation")


class LayerLoader:
    """层加载器

    负责登记层类型，并按配置或 NNW 记录构造层实例
    """

    def __init__(self, package: str = __package__):
        """初始化层加载器

        Args:
            package: 内置层模块所在的包
        """
        self.package = package
        self.registered: Dict[LayerKind, Type[BaseLayer]] = {}
        self._builtins_loaded = False

    def register(self, layer_class: Type[BaseLayer]) -> Type[BaseLayer]:
        """登记层类（用作类装饰器）"""
        if not issubclass(layer_class, BaseLayer):
            raise TypeError(f"{layer_class.__name__} 没有继承 BaseLayer")
        self.registered[layer_class.kind] = layer_class
        return layer_class

    def load_builtin_layers(self) -> None:
        """导入内置层模块，触发其中的登记"""
        if self._builtins_loaded:
            return
        for module in BUILTIN_MODULES:
            importlib.import_module(f"{self.package}.{module}")
        self._builtins_loaded = True
        logger.debug(f"已登记 {len(self.registered)} 种层: {[k.name for k in self.registered]}")

    def layer_class(self, kind: LayerKind) -> Type[BaseLayer]:
        self.load_builtin_layers()
        try:
            return self.registered[LayerKind(kind)]
        except (KeyError, ValueError):
            raise ValueError(f"未知层类型: {kind}") from None

    def build(self, spec: LayerSpec) -> BaseLayer:
        """按配置构造层实例"""
        return self.layer_class(spec.kind)(spec)

    def build_from_record(self, record: int, tag: int, dims: Tuple[int, ...]) -> BaseLayer:
        """按 NNW 记录构造层实例

        Raises:
            WeightFormatError: 未知类型或维度字段不合法，错误中带记录序号
        """
        try:
            kind = LayerKind(tag)
        except ValueError:
            raise WeightFormatError(f"未知层类型标签 {tag}", record=record) from None
        layer_class = self.layer_class(kind)
        try:
            spec = layer_class.spec_from_record(dims)
        except ValueError as e:
            raise WeightFormatError(f"{kind.name} 维度字段非法: {e}", record=record) from None
        return layer_class(spec)


# 全局层加载器实例
layer_loader = LayerLoader()
