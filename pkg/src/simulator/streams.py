"""
DPM (Diamond Polymer Moments) - Counter-Based Streams
(seed, generation, block) 로 색인되는 Philox 난수 스트림
"""

from typing import Iterator, Tuple

import numpy as np

BLOCK_SIZE = 1024   # 표본 블록 크기 (작업자 수와 무관한 분할 단위)


def block_generator(seed: int, generation: int, block: int) -> np.random.Generator:
    """카운터 [0, 0, block, generation] 에서 시작하는 독립 스트림"""
    bit_generator = np.random.Philox(key=int(seed), counter=[0, 0, int(block), int(generation)])
    return np.random.Generator(bit_generator)


def iter_blocks(count: int, block_size: int = BLOCK_SIZE) -> Iterator[Tuple[int, int, int]]:
    """(block, start, stop)"""
    for block, start in enumerate(range(0, count, block_size)):
        yield block, start, min(start + block_size, count)
