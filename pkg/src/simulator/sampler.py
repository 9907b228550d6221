"""
DPM (Diamond Polymer Moments) - Exact Samplers
실제 다이아몬드 그래프 위 W_n 표본 추출과 작은 그래프 전수 열거
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from src.core.exceptions import BudgetExceededError, CapExceededError, DomainError
from src.core.models import MomentVector
from src.disorder.laws import DisorderModel, exact_support, log_mgf
from src.simulator.streams import BLOCK_SIZE, block_generator, iter_blocks

DEFAULT_BOND_BUDGET = 2 ** 26      # 표본 하나당 본드 추출 한도
CHUNK_BONDS = 2 ** 20              # 한 번에 벡터화하는 본드 수
ENUMERATION_CAP = 10 ** 7          # 열거 구성 수 한도


# ==================== 표본 추출 ====================

def _leaf_weights(generator: np.random.Generator, model: DisorderModel, beta: float,
                  normalizer: float, size: int) -> np.ndarray:
    """e^{βω}/E[e^{βω}]"""
    if beta == 0:
        return np.ones(size)
    return np.exp(beta * model.sample(generator, size) - normalizer)


def _sample_level(generator: np.random.Generator, model: DisorderModel, beta: float, normalizer: float,
                  b: int, s: int, level: int, count: int) -> np.ndarray:
    """
    count 개의 독립 W_level 표본

    (b·s)^level·count 가 CHUNK_BONDS 이하면 한 번에, 아니면 나눠서 재귀
    """
    width = b * s
    bonds = width ** level
    if bonds * count <= CHUNK_BONDS:
        values = _leaf_weights(generator, model, beta, normalizer, bonds * count)
        for _ in range(level):
            values = values.reshape(-1, b, s).prod(axis=2).mean(axis=1)
        return values
    if count > 1:
        per_chunk = max(1, CHUNK_BONDS // bonds)
        parts = []
        for start in range(0, count, per_chunk):
            size = min(per_chunk, count - start)
            parts.append(_sample_level(generator, model, beta, normalizer, b, s, level, size))
        return np.concatenate(parts)
    children = _sample_level(generator, model, beta, normalizer, b, s, level - 1, width)
    return np.array([children.reshape(b, s).prod(axis=1).mean()])


def sample_w_batch(b: int, model: DisorderModel, beta: float, n: int, count: int, seed: int,
                   s: Optional[int] = None, workers: int = 1,
                   budget: int = DEFAULT_BOND_BUDGET) -> np.ndarray:
    """
    독립 W_n 표본 count 개

    BLOCK_SIZE 블록마다 (seed, n, block) 스트림을 쓰므로 workers 와 무관하게 같은 결과

    Raises:
        BudgetExceededError: (b·s)^n > budget
    """
    s = b if s is None else s
    if n < 0 or count < 1:
        raise DomainError(f"sample_w_batch needs n >= 0 and count >= 1, got n={n}, count={count}")
    bonds = (b * s) ** n
    if bonds > budget:
        raise BudgetExceededError(f"W_{n} sample needs {bonds} bond draws, budget {budget}",
                                  required=bonds, budget=budget)
    normalizer = log_mgf(model, beta) if beta != 0 else 0.0

    def run_block(task) -> np.ndarray:
        block, start, stop = task
        generator = block_generator(seed, n, block)
        return _sample_level(generator, model, beta, normalizer, b, s, n, stop - start)

    tasks = list(iter_blocks(count, BLOCK_SIZE))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(run_block, tasks))
    else:
        parts = [run_block(task) for task in tasks]
    logger.debug(f"sample_w_batch b={b} s={s} n={n} beta={beta:.6g}: {count} samples")
    return np.concatenate(parts)


def sample_w_exact(b: int, model: DisorderModel, beta: float, n: int, seed: int,
                   s: Optional[int] = None, budget: int = DEFAULT_BOND_BUDGET) -> float:
    """seed 로 결정되는 W_n 표본 하나"""
    return float(sample_w_batch(b, model, beta, n, 1, seed, s=s, budget=budget)[0])


# ==================== 전수 열거 ====================

def _combine(distribution: Dict[Fraction, Fraction], b: int, s: int) -> Dict[Fraction, Fraction]:
    """자식 b·s 개의 모든 값 조합으로 한 단계 위 분포"""
    items = list(distribution.items())
    result: Dict[Fraction, Fraction] = {}
    for combination in itertools.product(items, repeat=b * s):
        probability = Fraction(1)
        total = Fraction(0)
        for branch in range(b):
            product = Fraction(1)
            for value, p in combination[branch * s:(branch + 1) * s]:
                product *= value
                probability *= p
            total += product
        value = total / b
        result[value] = result.get(value, Fraction(0)) + probability
    return result


def enumerate_small(b: int, model: DisorderModel, beta: float, n: int, m_max: int = 4,
                    s: Optional[int] = None, cap: int = ENUMERATION_CAP) -> MomentVector:
    """
    모든 무질서 구성 열거로 정확한 ρ^(2..m_max)(W_n)

    Raises:
        CapExceededError: |support|^{(b·s)^n} > cap
    """
    s = b if s is None else s
    if not model.is_discrete:
        raise DomainError(f"enumerate_small needs a finite-support law, got {model.label}")
    support = exact_support(model, beta)
    configurations = len(support) ** ((b * s) ** n)
    if configurations > cap:
        raise CapExceededError(f"{configurations} disorder configurations exceed cap {cap}",
                               required=configurations, budget=cap)

    distribution: Dict[Fraction, Fraction] = {}
    for probability, weight in support:
        distribution[weight] = distribution.get(weight, Fraction(0)) + probability
    for _ in range(n):
        distribution = _combine(distribution, b, s)

    moments: List[Fraction] = []
    for m in range(2, m_max + 1):
        moments.append(sum((p * (w - 1) ** m for w, p in distribution.items()), Fraction(0)))
    logger.debug(f"enumerate_small b={b} n={n} {model.label}: {configurations} configurations, "
                 f"{len(distribution)} distinct values")
    return MomentVector(moments, exact=True)
