"""
DPM (Diamond Polymer Moments) - Run Configuration
settings.yaml + .env + 명령행 플래그를 하나의 RunConfig 로 병합/검증
"""

import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from loguru import logger

from src.core.exceptions import ConfigurationError, DomainError
from src.core.models import BranchingParams, PrecisionPolicy
from src.disorder.laws import DisorderModel
from src.disorder.scaling import CALIBRATED, LITERAL

DEFAULT_CONFIG_PATH = "config/settings.yaml"

COMMANDS = ("constants", "maps", "pm", "limits", "mc", "verify")
CRITICAL_COMMANDS = frozenset(COMMANDS)
FORMATS = ("csv", "json")
ROUTES = ("ladder", "profile")

# 결과 파일에 영향을 주지 않는 실행 옵션
RUNTIME_KEYS = frozenset({"workers", "out"})


@dataclass
class RunConfig:
    """배치 실행 설정"""
    command: str = "constants"
    b: int = 2
    s: Optional[int] = None              # 생략 시 s = b
    m_max: int = 4
    model: str = "gaussian"              # gaussian | rademacher | bernoulli:p | uniform
    r_min: float = -10.0
    r_max: float = 1.0
    r_step: float = 1.0
    n_max_exp: int = 20                  # 래더 상한 2^n_max_exp
    pool_size: int = 100_000
    generations: int = 64                # mc: 풀 세대 수 (= 스케줄 n)
    mc_r: float = 0.0                    # mc: 스케줄 오프셋 r
    beta: Optional[float] = None         # mc: 지정 시 스케줄 대신 사용
    seed: int = 20240917
    out: str = "results"
    format: str = "csv"
    workers: int = 1
    route: str = "ladder"                # limits: ladder | profile
    schedule_form: str = CALIBRATED
    precision: PrecisionPolicy = field(default_factory=PrecisionPolicy)

    def __post_init__(self):
        if self.s is None:
            self.s = self.b

    # ---------- 파생 ----------

    @property
    def params(self) -> BranchingParams:
        return BranchingParams(self.b, self.s)

    @property
    def disorder(self) -> DisorderModel:
        return DisorderModel.parse(self.model)

    @property
    def policy(self) -> PrecisionPolicy:
        return replace(self.precision, ladder_max_exponent=self.n_max_exp)

    def r_grid(self) -> List[float]:
        """r_min..r_max (양끝 포함, r_step 간격)"""
        count = int(np.floor((self.r_max - self.r_min) / self.r_step + 1e-9)) + 1
        return [float(round(self.r_min + i * self.r_step, 12)) for i in range(count)]

    # ---------- 검증 ----------

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command '{self.command}'", key="command")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}", key="format")
        if self.route not in ROUTES:
            raise ConfigurationError(f"route must be one of {ROUTES}", key="route")
        if self.schedule_form not in (CALIBRATED, LITERAL):
            raise ConfigurationError(f"unknown schedule_form '{self.schedule_form}'", key="schedule_form")
        if self.b < 2:
            raise ConfigurationError("b must be >= 2", key="b")
        if self.s < 1:
            raise ConfigurationError("s must be >= 1", key="s")
        if self.command in CRITICAL_COMMANDS and self.s != self.b and not (
                self.command == "mc" and self.beta is not None):
            raise ConfigurationError(f"'{self.command}' needs the critical case s = b "
                                     f"(got b={self.b}, s={self.s})", key="s")
        if self.m_max < 2:
            raise ConfigurationError("m_max must be >= 2", key="m_max")
        if not self.r_step > 0 or self.r_max < self.r_min:
            raise ConfigurationError("r grid needs r_step > 0 and r_min <= r_max", key="r_step")
        if self.pool_size < 1000:
            raise ConfigurationError("pool_size must be >= 1000", key="pool_size")
        if self.generations < 1:
            raise ConfigurationError("generations must be >= 1", key="generations")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1", key="workers")
        try:
            self.disorder
            self.policy
        except DomainError as e:
            raise ConfigurationError(str(e), key="model") from e
        return self

    # ---------- 직렬화 ----------

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "precision"}
        data["precision"] = self.precision.to_dict()
        return data


def _field_names() -> List[str]:
    return [f.name for f in fields(RunConfig)]


def _from_mapping(data: Dict[str, Any]) -> RunConfig:
    unknown = sorted(set(data) - set(_field_names()))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {unknown}", key=unknown[0])
    values = dict(data)
    precision = values.pop("precision", None) or {}
    if not isinstance(precision, dict):
        raise ConfigurationError("precision must be a mapping", key="precision")
    known = {f.name for f in fields(PrecisionPolicy)}
    unknown = sorted(set(precision) - known)
    if unknown:
        raise ConfigurationError(f"unknown precision keys: {unknown}", key=f"precision.{unknown[0]}")
    try:
        return RunConfig(precision=PrecisionPolicy(**precision), **values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"bad config value: {e}") from e


def _environment_overrides() -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if os.getenv("DPM_WORKERS"):
        try:
            overrides["workers"] = int(os.environ["DPM_WORKERS"])
        except ValueError as e:
            raise ConfigurationError("DPM_WORKERS must be an integer", key="workers") from e
    if os.getenv("DPM_OUT_DIR"):
        overrides["out"] = os.environ["DPM_OUT_DIR"]
    return overrides


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    설정 로드: YAML 파일 → 환경변수 (DPM_WORKERS, DPM_OUT_DIR) → 플래그

    path 를 명시했는데 파일이 없으면 ConfigurationError, 기본 경로가 없으면 기본값 사용
    """
    data: Dict[str, Any] = {}
    config_file = Path(path or DEFAULT_CONFIG_PATH)
    if config_file.exists():
        with open(config_file, "r", encoding="utf-8") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"cannot parse {config_file}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"{config_file} must contain a mapping")
        logger.debug(f"Config loaded: {config_file}")
    elif path is not None:
        raise ConfigurationError(f"Config not found: {config_file}", key="config")

    data.update(_environment_overrides())
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "precision":
            data.setdefault("precision", {}).update(value)
        else:
            data[key] = value
    return _from_mapping(data).validate()


def config_hash(config: RunConfig) -> str:
    """실행 옵션을 뺀 설정의 정규 JSON SHA-256 앞 16자리"""
    data = {k: v for k, v in config.to_dict().items() if k not in RUNTIME_KEYS}
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
