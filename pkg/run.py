"""
DPM (Diamond Polymer Moments) - Main Entry Point
실행 스크립트: python run.py <command> [options]
"""

import argparse
import os
import sys

# UTF-8 인코딩 설정
if sys.stdout:
    sys.stdout.reconfigure(encoding='utf-8', errors='replace')
if sys.stderr:
    sys.stderr.reconfigure(encoding='utf-8', errors='replace')

# 프로젝트 루트 추가
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

from dotenv import load_dotenv
from loguru import logger

from src import __version__
from src.cli.config import COMMANDS, load_config
from src.cli.commands import dispatch
from src.core.exceptions import DPMException

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def setup_logging(level: str):
    """콘솔 + 일별 파일 로그"""
    os.makedirs("logs", exist_ok=True)
    logger.remove()
    logger.add(
        sys.stdout,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>",
        level=level
    )
    logger.add(
        "logs/dpm_{time:YYYY-MM-DD}.log",
        rotation="1 day",
        retention="7 days",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {message}",
        level="DEBUG"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="run.py", description="Diamond polymer moment computations")
    parser.add_argument("--version", action="version", version=f"DPM {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML config path (default config/settings.yaml)")
    parser.add_argument("--b", type=int)
    parser.add_argument("--s", type=int)
    parser.add_argument("--m-max", dest="m_max", type=int)
    parser.add_argument("--model", help="gaussian | rademacher | bernoulli:p | uniform")
    parser.add_argument("--r-min", dest="r_min", type=float)
    parser.add_argument("--r-max", dest="r_max", type=float)
    parser.add_argument("--r-step", dest="r_step", type=float)
    parser.add_argument("--n-max-exp", dest="n_max_exp", type=int)
    parser.add_argument("--pool-size", dest="pool_size", type=int)
    parser.add_argument("--generations", type=int)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--route", choices=("ladder", "profile"))
    parser.add_argument("--log-level", dest="log_level")
    return parser


def main(argv=None) -> int:
    """메인 함수"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging((args.log_level or os.getenv("DPM_LOG_LEVEL") or "INFO").upper())

    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "log_level")}
    try:
        config = load_config(args.config, overrides)
        logger.info(f"DPM {__version__}: {config.command} (b={config.b}, m_max={config.m_max})")
        result = dispatch(config)
    except DPMException as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return EXIT_UNEXPECTED

    for path in result.get("paths", []):
        logger.info(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
