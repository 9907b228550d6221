"""
DPM (Diamond Polymer Moments) - Diamond Graph Counts
계층 다이아몬드 격자 D_n 의 본드 수, 경로 수, 경로 길이
"""

from src.core.exceptions import DomainError
from src.core.models import GraphStats


def graph_stats(b: int, s: int, n: int) -> GraphStats:
    """
    |E_n| = (b·s)^n, 경로 길이 s^n, |Γ_{k+1}| = b·|Γ_k|^s (|Γ_0| = 1)

    Python 정수로 정확히 계산
    """
    if b < 1 or s < 1 or n < 0:
        raise DomainError(f"graph_stats needs b, s >= 1 and n >= 0, got b={b}, s={s}, n={n}")
    paths = 1
    for _ in range(n):
        paths = b * paths ** s
    return GraphStats(b=b, s=s, n=n, bond_count=(b * s) ** n, path_count=paths, path_length=s ** n)
