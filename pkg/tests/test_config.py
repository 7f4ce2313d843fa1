"""Config file loading, validation, and environment resolution."""

from __future__ import annotations

import pytest

from medledger.config import (
    CONFIG_ENV_VAR,
    ConfigError,
    DeploymentConfig,
    config_path_from_env,
    load_config,
    write_config,
)


def test_write_load_round_trip(tmp_path):
    config = DeploymentConfig(
        difficulty_bits=10,
        auto_mine=False,
        listen_addr="0.0.0.0:9000",
        session_ttl_ms=5_000,
        base_dir=tmp_path,
    )
    path = tmp_path / "medledger.toml"
    write_config(path, config)
    loaded = load_config(path)
    assert loaded.difficulty_bits == 10
    assert loaded.auto_mine is False
    assert loaded.listen_addr == "0.0.0.0:9000"
    assert loaded.session_ttl_ms == 5_000
    assert loaded.base_dir == tmp_path
    assert loaded.host == "0.0.0.0"
    assert loaded.port == 9000
    assert loaded.chain_log_path == tmp_path / "chain.log"
    assert loaded.vault_path == tmp_path / "vault"
    assert loaded.keys_path == tmp_path / "keys"


def test_defaults_validate():
    DeploymentConfig().validate()


@pytest.mark.parametrize(
    "fields",
    [
        {"difficulty_bits": -1},
        {"difficulty_bits": 33},
        {"session_ttl_ms": 0},
        {"listen_addr": "nohost"},
        {"listen_addr": ":8080"},
        {"listen_addr": "localhost:"},
    ],
)
def test_validate_rejects(fields):
    with pytest.raises(ConfigError):
        DeploymentConfig(**fields).validate()


def test_load_rejects_unknown_keys(tmp_path):
    path = tmp_path / "medledger.toml"
    path.write_text("difficulty_bits = 8\nturbo = true\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert "turbo" in str(exc.value)


def test_load_rejects_wrong_types(tmp_path):
    path = tmp_path / "medledger.toml"
    path.write_text('difficulty_bits = "high"\n')
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("auto_mine = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_rejects_bad_toml_and_missing_file(tmp_path):
    path = tmp_path / "medledger.toml"
    path.write_text("difficulty_bits = = 8\n")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_config_path_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, str(tmp_path / "custom.toml"))
    assert config_path_from_env() == tmp_path / "custom.toml"
    monkeypatch.delenv(CONFIG_ENV_VAR)
    assert config_path_from_env(tmp_path) == tmp_path / "medledger.toml"
