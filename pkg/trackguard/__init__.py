# trackguard
# 赛道中心回归网络：可微逻辑约束训练（Gödel 语义、GradNorm、PGD 反例）与区间界鲁棒性验证
__version__ = "1.0.0"
