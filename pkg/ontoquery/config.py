"""
Runtime settings.

Every tunable can be set through an ONTOQUERY_<FIELD> environment variable;
the CLI uses these values as argparse defaults so explicit flags win.
"""

import os
from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional

from .errors import ConfigError

ENV_PREFIX = "ONTOQUERY_"

VARIANT_CHOICES = ("wide", "reduced", "bitvec")
EMIT_CHOICES = ("dl", "sql", "fo")


@dataclass(frozen=True)
class Settings:
    steps: Optional[int] = None
    variant: str = "wide"
    emit: str = "dl"
    timeout_ms: int = 60000
    atom_cap: int = 1_000_000
    materialize_limit: int = 20000
    max_width: int = 16
    workers: int = 1
    numeric_domain: bool = False

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        """Build settings from ONTOQUERY_* variables, ignoring unset ones"""
        environ = os.environ if environ is None else environ
        overrides = {}
        for field in fields(cls):
            raw = environ.get(ENV_PREFIX + field.name.upper())
            if raw is None or raw == "":
                continue
            overrides[field.name] = _coerce(field.name, raw)
        return replace(cls(), **overrides)


def timeout_seconds(milliseconds: Optional[int]) -> Optional[float]:
    """A budget in seconds, or None when milliseconds is unset or not positive"""
    if not milliseconds or milliseconds <= 0:
        return None
    return milliseconds / 1000.0


def _coerce(name: str, raw: str):
    if name in ("steps", "timeout_ms", "atom_cap", "materialize_limit", "max_width", "workers"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{ENV_PREFIX}{name.upper()} must be an integer, got {raw!r}")
    if name == "numeric_domain":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if name == "variant" and raw.lower() not in VARIANT_CHOICES:
        raise ConfigError(f"{ENV_PREFIX}VARIANT must be one of {', '.join(VARIANT_CHOICES)}")
    if name == "emit" and raw.lower() not in EMIT_CHOICES:
        raise ConfigError(f"{ENV_PREFIX}EMIT must be one of {', '.join(EMIT_CHOICES)}")
    return raw.lower()
