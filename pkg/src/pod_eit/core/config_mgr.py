import json
import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import ValidationError

from pod_eit.core.artifacts import atomic_write_text
from pod_eit.core.exceptions import ConfigError
from pod_eit.core.models import SystemConfig

CONFIG_FORMAT = Literal["yaml", "json"]

ENV_CONFIG_PATH = "POD_EIT_CONFIG_PATH"
ENV_OUTPUT_DIR = "POD_EIT_OUTPUT_DIR"
DEFAULT_CONFIG_BASENAME = "config.yaml"


def _find_config_upwards(start: Path, basename: str = DEFAULT_CONFIG_BASENAME) -> Path | None:
    for directory in (start, *start.parents):
        candidate = directory / basename
        if candidate.is_file():
            return candidate
    return None


def resolve_config_path(path: Path | str | None = None) -> Path:
    """Explicit path, then env POD_EIT_CONFIG_PATH, then the nearest config.yaml above CWD."""
    if path is not None:
        return Path(path)
    env_path = (os.getenv(ENV_CONFIG_PATH) or "").strip()
    if env_path:
        return Path(env_path)
    cwd = Path.cwd()
    return _find_config_upwards(cwd) or cwd / DEFAULT_CONFIG_BASENAME


def resolve_output_path(path: Path | str, config: SystemConfig | None = None) -> Path:
    """Anchor a relative output path at env POD_EIT_OUTPUT_DIR, else config.output_dir."""
    target = Path(path)
    if target.is_absolute():
        return target
    base = (os.getenv(ENV_OUTPUT_DIR) or "").strip()
    if not base and config is not None and config.output_dir:
        base = config.output_dir
    return Path(base) / target if base else target


def detect_config_format(text: str, path: Path | None = None) -> CONFIG_FORMAT:
    """JSON when the file is named ``*.json`` or starts with a brace, YAML otherwise."""
    if path is not None and path.suffix.lower() == ".json":
        return "json"
    stripped = text.lstrip()
    return "json" if stripped[:1] in ("{", "[") else "yaml"


def _parse_config(text: str, fmt: CONFIG_FORMAT) -> dict:
    try:
        data = json.loads(text) if fmt == "json" else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"unparseable {fmt} config: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a mapping of sections, got {type(data).__name__}")
    return data


def load_config(path: Path | str | None = None) -> SystemConfig:
    """Validated ``SystemConfig``; a missing file yields the defaults."""
    resolved = resolve_config_path(path)
    if not resolved.exists():
        return SystemConfig()
    text = resolved.read_text(encoding="utf-8")
    data = _parse_config(text, detect_config_format(text, resolved)) if text.strip() else {}
    try:
        return SystemConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{resolved}: {exc}") from exc


def dump_config(config: SystemConfig, fmt: CONFIG_FORMAT = "yaml", minimal: bool = False) -> str:
    data = config.model_dump(mode="json", exclude_defaults=minimal, exclude_none=minimal)
    if fmt == "json":
        return json.dumps(data, ensure_ascii=False, indent=2) + "\n"
    return yaml.safe_dump(data, allow_unicode=True, sort_keys=False)


def save_config(
    config: SystemConfig,
    path: Path | str | None = None,
    fmt: Optional[CONFIG_FORMAT] = None,
    minimal: bool = False,
) -> None:
    """Atomic write keeping the previous file as ``<name>.bak``."""
    resolved = resolve_config_path(path)
    if fmt is None:
        existing = resolved.read_text(encoding="utf-8") if resolved.exists() else ""
        fmt = detect_config_format(existing, resolved)
    atomic_write_text(resolved, dump_config(config, fmt, minimal), backup=True)
