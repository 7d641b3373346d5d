from typing import Optional


class TrackGuardError(Exception):
    """所有运行时错误的基类

    Attributes:
        component: 出错组件名称（netcore、data、logic、speclang、train、verify、cli）
    """

    component = "trackguard"

    def __init__(self, message: str, component: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if component is not None:
            self.component = component

    def __str__(self) -> str:
        return self.message


class ShapeMismatchError(TrackGuardError, ValueError):
    """张量形状与网络/层不匹配"""

    component = "netcore"


class WeightFormatError(TrackGuardError):
    """NNW 权重文件格式错误

    Attributes:
        record: 出错记录的序号（文件头为 None）
    """

    component = "netcore"

    def __init__(self, message: str, record: Optional[int] = None):
        if record is not None:
            message = f"记录 #{record}: {message}"
        super().__init__(message)
        self.record = record


class DatasetError(TrackGuardError):
    """数据集目录、标签文件或图像文件错误"""

    component = "data"

    def __init__(self, message: str, row: Optional[int] = None, path: Optional[str] = None):
        if row is not None:
            message = f"labels.csv 第 {row} 行: {message}"
        super().__init__(message)
        self.row = row
        self.path = path


class LogicEvaluationError(TrackGuardError):
    """约束求值失败（未绑定变量、除零等）"""

    component = "logic"


class SpecError(TrackGuardError):
    """属性规约语言错误，带行列位置

    Attributes:
        kind: lexical / syntax / undeclared / duplicate
        line: 行号（从 1 开始）
        column: 列号（从 1 开始）
    """

    component = "speclang"

    def __init__(self, kind: str, message: str, line: int, column: int):
        super().__init__(f"{kind} error at {line}:{column}: {message}")
        self.kind = kind
        self.line = line
        self.column = column


class InstantiationError(TrackGuardError):
    """属性实例化失败（锚点图像缺失、形状不符、参数未声明）"""

    component = "speclang"


class UsageError(TrackGuardError):
    """命令行用法或配置错误，对应退出码 1"""

    component = "cli"
