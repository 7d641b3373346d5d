# 子命令路由包
# 数据、模型与验证三组子命令
from . import data, model, verification

routers = [data.router, model.router, verification.router]

__all__ = ["routers"]
