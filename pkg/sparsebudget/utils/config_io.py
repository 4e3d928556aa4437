"""
INI experiment files <-> ExperimentConfig
"""
import configparser
import logging
from pathlib import Path

from pydantic import ValidationError

from sparsebudget.core.errors import ConfigurationError
from sparsebudget.schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

SECTIONS = (
    "experiment",
    "data",
    "budget",
    "optimizer",
    "schedule",
    "exploit_schedule",
    "hybrid",
    "output",
)


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys such as T, K, L_s are case-sensitive
    return parser


def _format_errors(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_experiment_config(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate INI text; relative csv paths resolve against base_dir"""
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f"malformed config: {e}") from e

    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ConfigurationError(f"unknown config sections: {', '.join(unknown)}")

    raw = {}
    for name in parser.sections():
        # blank values mean "use the default"
        raw[name] = {key: value for key, value in parser[name].items() if value.strip() != ""}

    csv_path = raw.get("data", {}).get("csv_path")
    if csv_path and not Path(csv_path).is_absolute():
        raw["data"]["csv_path"] = str(base_dir / csv_path)

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config: {_format_errors(e)}") from e


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    logger.info(f"📄 Loaded config {path}")
    return parse_experiment_config(text, base_dir=path.parent)


def _ini_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return " ".join(str(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_resolved_config(config: ExperimentConfig) -> str:
    """Every section with every resolved field; unset optionals are omitted"""
    dump = config.model_dump(mode="json", exclude_none=True)
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_ini_value(value)}" for key, value in dump[name].items())
        lines.append("")
    return "\n".join(lines)


def write_resolved_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(render_resolved_config(config), encoding="utf-8")
    return path
