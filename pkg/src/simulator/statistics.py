"""
DPM (Diamond Polymer Moments) - Empirical Moments
표본 중심 모멘트와 배치평균 표준오차
"""

import math
from typing import Tuple, Union

import numpy as np

from src.core.exceptions import TooFewSamplesError
from src.core.models import EmpiricalMoments, SamplePool

MIN_SAMPLES = 100


def _as_samples(data: Union[SamplePool, np.ndarray]) -> np.ndarray:
    samples = data.samples if isinstance(data, SamplePool) else data
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < MIN_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_SAMPLES} samples, got {samples.size}",
                                 count=int(samples.size))
    return samples


def batch_count(count: int) -> int:
    return max(2, math.isqrt(count))


def batch_means_se(values: np.ndarray) -> Tuple[float, float]:
    """(평균, √N 배치 평균의 표준오차)"""
    values = np.asarray(values, dtype=float)
    batches = np.array_split(values, batch_count(values.size))
    means = np.array([batch.mean() for batch in batches])
    return float(values.mean()), float(means.std(ddof=1) / math.sqrt(len(means)))


def empirical_moments(data: Union[SamplePool, np.ndarray], m_max: int) -> EmpiricalMoments:
    """
    표본 평균 기준 중심 모멘트 ρ^(2..m_max)

    표준오차: 같은 전체 평균 기준으로 √N 배치마다 모멘트를 구해 배치 간 산포로 계산
    """
    samples = _as_samples(data)
    mean = float(samples.mean())
    deviations = samples - mean
    batches = np.array_split(deviations, batch_count(samples.size))

    estimates, errors = [], []
    for m in range(2, m_max + 1):
        powered = deviations ** m
        estimates.append(float(powered.mean()))
        per_batch = np.array([(batch ** m).mean() for batch in batches])
        errors.append(float(per_batch.std(ddof=1) / math.sqrt(len(per_batch))))
    return EmpiricalMoments(m_max=m_max, estimates=estimates, standard_errors=errors,
                            count=int(samples.size), mean=mean, batches=len(batches))
