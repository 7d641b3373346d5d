import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class SplitMix64:
    """计数器式 splitmix64 随机流

    第 i 个输出只依赖 (seed, i)，可整块向量化生成，结果与平台无关。
    """

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & _MASK)
        self.position = 0

    def next_u64(self, count: int) -> np.ndarray:
        index = np.arange(self.position + 1, self.position + count + 1, dtype=np.uint64)
        self.position += count
        z = self.seed + index * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int) -> np.ndarray:
        """[0, 1) 上的 float64 均匀随机数（取高 53 位）"""
        return (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
