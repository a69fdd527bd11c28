import hashlib
import json
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping, MutableMapping, Optional, Type, TypeVar

from coveo_functools.casing import flexfactory
from coveo_styles.styles import ExitWithFailure

from label_subversion.exceptions import ConfigError, SubversionException

T = TypeVar("T")


def load_json_from_path(json_path: Path) -> MutableMapping[str, Any]:
    """Loads a json object from path or raise ExitWithFailure on failure."""
    return _load_json_from_content(json_path.read_text(encoding="utf-8"), json_path)


def _load_json_from_content(json_content: str, json_path: Path) -> MutableMapping[str, Any]:
    try:
        content = json.loads(json_content)
    except json.JSONDecodeError as ex:
        lineno, colno = ex.lineno, ex.colno
        raise ExitWithFailure(
            suggestions=f"{json_path}:{lineno}:{colno} parse error", exit_code=1
        ) from ex

    if not isinstance(content, dict):
        raise ExitWithFailure(
            suggestions=f"{json_path}: the configuration must be a json object", exit_code=1
        ) from TypeError(f"Expected a json object, got {type(content).__name__}")

    return content


def derive_seed(*parts: Any) -> int:
    """A reproducible 32-bit seed from printable parts such as a master seed, names or budgets."""
    digest = hashlib.blake2b("|".join(map(str, parts)).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def _flat_key(key: str) -> str:
    return key.replace("-", "").replace("_", "").lower()


def find_option(config: Mapping[str, Any], name: str) -> Optional[str]:
    """The key of `config` that spells `name`, in any casing (kebab, snake, camel)."""
    return next((key for key in config if _flat_key(key) == _flat_key(name)), None)


def config_factory(cls: Type[T], config: Mapping[str, Any], **overrides: Any) -> T:
    """Build a dataclass from a kebab- or snake-case mapping. Unknown keys raise ConfigError."""
    options = fields(cls)  # type: ignore[arg-type]
    known = {_flat_key(option.name): option.name for option in options}
    if unknown := sorted(key for key in config if _flat_key(key) not in known):
        raise ConfigError(
            f"{cls.__name__}: unknown option(s) {unknown};"
            f" expected some of {sorted(known.values())}"
        )
    try:
        options = {known[_flat_key(key)]: value for key, value in config.items()}
        return flexfactory(cls, **{**options, **overrides})
    except (TypeError, ValueError, SubversionException) as exception:
        raise ConfigError(f"{cls.__name__}: {exception}") from exception
