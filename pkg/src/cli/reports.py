"""
DPM (Diamond Polymer Moments) - Report Writers
CSV (주석 헤더 + 17 자리) / JSON (정렬 키) 결과 파일
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src import __version__
from src.cli.config import RunConfig, config_hash


def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_jsonable) + "\n"


def output_path(config: RunConfig, stem: str, suffix: Optional[str] = None) -> Path:
    directory = Path(config.out)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{stem}.{suffix or config.format}"


def header_line(config: RunConfig) -> str:
    return f"# config_hash={config_hash(config)} version={__version__}\n"


def write_csv(rows: Sequence[Dict[str, Any]], path: Path, config: RunConfig,
              columns: Optional[List[str]] = None) -> Path:
    frame = pd.DataFrame(list(rows), columns=columns)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(header_line(config))
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    return path


def write_json(data: Any, path: Path) -> Path:
    path.write_text(dumps(data), encoding="utf-8")
    return path


def write_table(rows: Sequence[Dict[str, Any]], config: RunConfig, stem: str,
                columns: Optional[List[str]] = None) -> Path:
    """config.format 에 맞춰 표 저장 (JSON 은 config_hash/version 을 함께 기록)"""
    path = output_path(config, stem)
    if config.format == "csv":
        return write_csv(rows, path, config, columns)
    payload = {"config_hash": config_hash(config), "version": __version__, "rows": list(rows)}
    return write_json(payload, path)
