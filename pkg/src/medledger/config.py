"""Deployment configuration.

A deployment directory holds one TOML config file next to the chain log,
the blob vault, and the key store. Relative paths in the config resolve
against the directory containing the file.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_BASENAME = "medledger.toml"
CONFIG_ENV_VAR = "MEDLEDGER_CONFIG"

DEFAULT_DIFFICULTY_BITS = 12
DEFAULT_SESSION_TTL_MS = 3_600_000
DEFAULT_LISTEN_ADDR = "127.0.0.1:8640"

_KNOWN_KEYS = {
    "difficulty_bits",
    "auto_mine",
    "vault_dir",
    "chain_log",
    "listen_addr",
    "session_ttl_ms",
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class DeploymentConfig:
    difficulty_bits: int = DEFAULT_DIFFICULTY_BITS
    auto_mine: bool = True
    vault_dir: str = "vault"
    chain_log: str = "chain.log"
    listen_addr: str = DEFAULT_LISTEN_ADDR
    session_ttl_ms: int = DEFAULT_SESSION_TTL_MS
    base_dir: Path = field(default_factory=Path.cwd)

    def validate(self) -> None:
        if not 0 <= self.difficulty_bits <= 32:
            raise ConfigError(f"difficulty_bits out of range: {self.difficulty_bits}")
        if self.session_ttl_ms <= 0:
            raise ConfigError("session_ttl_ms must be positive")
        host, sep, port = self.listen_addr.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ConfigError(f"listen_addr must be host:port, got {self.listen_addr!r}")

    @property
    def vault_path(self) -> Path:
        return self.base_dir / self.vault_dir

    @property
    def chain_log_path(self) -> Path:
        return self.base_dir / self.chain_log

    @property
    def keys_path(self) -> Path:
        return self.base_dir / "keys"

    @property
    def host(self) -> str:
        return self.listen_addr.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen_addr.rpartition(":")[2])


def load_config(path: str | Path) -> DeploymentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"no config file at {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    config = replace(
        DeploymentConfig(base_dir=path.resolve().parent),
        **{key: raw[key] for key in raw},
    )
    for key in ("difficulty_bits", "session_ttl_ms"):
        if not isinstance(getattr(config, key), int) or isinstance(getattr(config, key), bool):
            raise ConfigError(f"{path}: {key} must be an integer")
    if not isinstance(config.auto_mine, bool):
        raise ConfigError(f"{path}: auto_mine must be a boolean")
    config.validate()
    return config


def write_config(path: str | Path, config: DeploymentConfig) -> None:
    config.validate()
    lines = [
        f"difficulty_bits = {config.difficulty_bits}",
        f"auto_mine = {'true' if config.auto_mine else 'false'}",
        f"vault_dir = {json.dumps(config.vault_dir)}",
        f"chain_log = {json.dumps(config.chain_log)}",
        f"listen_addr = {json.dumps(config.listen_addr)}",
        f"session_ttl_ms = {config.session_ttl_ms}",
    ]
    Path(path).write_text("".join(line + "\n" for line in lines))


def config_path_from_env(fallback_dir: str | Path | None = None) -> Path:
    """Resolve the config path: MEDLEDGER_CONFIG wins, else the well-known
    basename under fallback_dir (default: current directory)."""
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        return Path(env)
    base = Path(fallback_dir) if fallback_dir is not None else Path.cwd()
    return base / CONFIG_BASENAME
