# CLI Module - run configuration, batch commands, reports and the verification suite
from src.cli.config import COMMANDS, RunConfig, config_hash, load_config
from src.cli.commands import (
    COMMAND_TABLE, cmd_constants, cmd_limits, cmd_maps, cmd_mc, cmd_pm, cmd_verify, dispatch,
)
from src.cli.verification import CheckResult, VerificationSuite

__all__ = [
    "COMMANDS", "RunConfig", "config_hash", "load_config",
    "COMMAND_TABLE", "cmd_constants", "cmd_limits", "cmd_maps", "cmd_mc", "cmd_pm", "cmd_verify", "dispatch",
    "CheckResult", "VerificationSuite",
]
