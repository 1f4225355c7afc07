"""Config file loading and flag/env/file precedence.

Settings resolve as CLI flag > environment variable > config file > default.
The config file is JSON with flat keys: endpoint, api_key, model,
memory_length, aggregator (kind string or {kind, params}), budget, strategy,
separator, truncate_budget.
"""

from __future__ import annotations

import json
import os
from typing import Optional

from .aggregation import Aggregator, aggregator_from_spec
from .errors import ConfigurationError, InvalidParameterError


def load_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return config


def setting(cli_value, env_key: Optional[str], file_config: dict, file_key: str,
            default=None, env=os.environ):
    if cli_value is not None:
        return cli_value
    if env_key is not None and env_key in env:
        return env[env_key]
    if file_key in file_config:
        return file_config[file_key]
    return default


def aggregator_from_config(kind: Optional[str], file_config: dict, client=None) -> Aggregator:
    """Aggregator from the resolved kind plus kind-specific file settings."""
    spec = setting(kind, None, file_config, "aggregator", "concat")
    if isinstance(spec, dict):
        resolved_kind = spec.get("kind")
        params = spec.get("params") or {}
    else:
        resolved_kind = spec
        params = {}
        if resolved_kind == "concat" and "separator" in file_config:
            params["separator"] = file_config["separator"]
        if resolved_kind == "truncate" and "truncate_budget" in file_config:
            params["budget"] = file_config["truncate_budget"]
    try:
        return aggregator_from_spec(resolved_kind, params, client=client)
    except InvalidParameterError as exc:
        raise ConfigurationError(str(exc)) from exc
