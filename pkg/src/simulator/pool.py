"""
DPM (Diamond Polymer Moments) - Population Dynamics Pool
W_{n+1} = (1/b) Σ_i Π_j W_n^(i,j) 분포 점화식의 풀 근사와 풀 파일 입출력
"""

import struct
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.core.exceptions import DomainError
from src.core.models import GenerationStats, SamplePool
from src.disorder.laws import DisorderModel, log_mgf
from src.simulator.statistics import batch_means_se
from src.simulator.streams import BLOCK_SIZE, block_generator, iter_blocks

MIN_POOL_SIZE = 1000
POOL_MAGIC = b"DPMP"
POOL_HEADER = struct.Struct("<4sIQ")   # magic, generation, count (16 bytes)


def _initial_pool(model: DisorderModel, beta: float, pool_size: int, seed: int,
                  executor: Optional[ThreadPoolExecutor]) -> np.ndarray:
    normalizer = log_mgf(model, beta) if beta != 0 else 0.0

    def run_block(task) -> np.ndarray:
        block, start, stop = task
        if beta == 0:
            return np.ones(stop - start)
        generator = block_generator(seed, 0, block)
        return np.exp(beta * model.sample(generator, stop - start) - normalizer)

    tasks = list(iter_blocks(pool_size, BLOCK_SIZE))
    parts = list(executor.map(run_block, tasks)) if executor else [run_block(t) for t in tasks]
    return np.concatenate(parts)


def _next_generation(previous: np.ndarray, b: int, s: int, generation: int, seed: int,
                     executor: Optional[ThreadPoolExecutor]) -> np.ndarray:
    """새 표본마다 이전 세대에서 b·s 개를 복원추출 (이전 세대는 읽기 전용)"""
    size = previous.shape[0]

    def run_block(task) -> np.ndarray:
        block, start, stop = task
        generator = block_generator(seed, generation, block)
        indices = generator.integers(0, size, size=(stop - start, b, s))
        return previous[indices].prod(axis=2).mean(axis=1)

    tasks = list(iter_blocks(size, BLOCK_SIZE))
    parts = list(executor.map(run_block, tasks)) if executor else [run_block(t) for t in tasks]
    return np.concatenate(parts)


def _generation_stats(samples: np.ndarray, generation: int) -> GenerationStats:
    mean, se = batch_means_se(samples)
    stats = GenerationStats(generation=generation, mean=mean, se=se)
    if not stats.drift_ok:
        logger.warning(f"pool generation {generation}: mean {mean:.6f} drifts beyond 4 SE ({se:.3g})")
    return stats


def pool_evolve(b: int, model: DisorderModel, beta: float, n_generations: int, pool_size: int,
                seed: int, s: Optional[int] = None, workers: int = 1) -> SamplePool:
    """
    세대 0 = 정규화 가중치 e^{βω}/E[e^{βω}], 이후 n_generations 회 재표본 결합

    (seed, generation, block) 스트림만 쓰므로 workers 수와 무관하게 같은 풀
    """
    s = b if s is None else s
    if pool_size < MIN_POOL_SIZE:
        raise DomainError(f"pool_size must be >= {MIN_POOL_SIZE}, got {pool_size}", value=pool_size)
    if n_generations < 0:
        raise DomainError(f"n_generations must be >= 0, got {n_generations}", value=n_generations)

    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        samples = _initial_pool(model, beta, pool_size, seed, executor)
        history = [_generation_stats(samples, 0)]
        for generation in range(1, n_generations + 1):
            samples = _next_generation(samples, b, s, generation, seed, executor)
            history.append(_generation_stats(samples, generation))
            logger.debug(f"pool generation {generation}: mean={history[-1].mean:.6f}")
    finally:
        if executor is not None:
            executor.shutdown()

    logger.info(f"pool_evolve b={b} {model.label} beta={beta:.6g}: {n_generations} generations, "
                f"size {pool_size}, drift ok={all(h.drift_ok for h in history)}")
    return SamplePool(generation=n_generations, samples=samples, seed=seed, b=b, s=s, history=history)


# ==================== 풀 파일 ====================

def write_pool_binary(pool: SamplePool, path: Union[str, Path]) -> Path:
    """16 바이트 헤더 + little-endian float64"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(POOL_HEADER.pack(POOL_MAGIC, pool.generation, pool.size))
        f.write(np.asarray(pool.samples, dtype="<f8").tobytes())
    return path


def read_pool_binary(path: Union[str, Path]) -> Tuple[int, np.ndarray]:
    """(generation, samples)"""
    data = Path(path).read_bytes()
    if len(data) < POOL_HEADER.size:
        raise DomainError(f"{path}: truncated pool header")
    magic, generation, count = POOL_HEADER.unpack_from(data)
    if magic != POOL_MAGIC:
        raise DomainError(f"{path}: bad pool magic {magic!r}")
    samples = np.frombuffer(data, dtype="<f8", count=count, offset=POOL_HEADER.size)
    return generation, samples.astype(float)


def write_pool_csv(pool: SamplePool, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# generation={pool.generation} seed={pool.seed} b={pool.b} s={pool.s}\n")
        pd.DataFrame({"w": pool.samples}).to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path
