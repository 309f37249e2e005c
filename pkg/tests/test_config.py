"""
Unit tests for the configuration management system.
"""
import pytest
from pydantic import ValidationError

from backend.config import (
    BUNDLED_KB_DIR,
    Environment,
    LogLevel,
    create_settings,
    get_environment,
    get_settings,
    reload_settings,
)


@pytest.fixture(autouse=True)
def reset_settings_for_tests(monkeypatch):
    """Fixture to ensure settings are reloaded for each test."""
    monkeypatch.delenv("ENVIRONMENT", raising=False)
    reload_settings()
    yield
    reload_settings()


@pytest.fixture
def no_env_file(tmp_path):
    return str(tmp_path / "absent.env")


def test_environment_detection(monkeypatch):
    """Test automatic environment detection."""
    assert get_environment() == Environment.DEVELOPMENT

    monkeypatch.setenv("ENVIRONMENT", "testing")
    assert get_environment() == Environment.TESTING

    monkeypatch.setenv("ENVIRONMENT", "staging")
    assert get_environment() == Environment.DEVELOPMENT


def test_defaults(no_env_file):
    settings = create_settings(Environment.DEVELOPMENT, env_file=no_env_file)
    assert settings.app_name == "veriprop"
    assert settings.kb_dir == BUNDLED_KB_DIR
    assert settings.alignment.embedder == "hashed"
    assert settings.alignment.tau_match == 0.5
    assert settings.checks.tau_num == 1e-9
    assert settings.corpus.min_propositions == 10
    assert settings.corpus.max_propositions == 40
    assert settings.lora.init == "zero"
    assert settings.effective_params() == {
        "tau_match": 0.5,
        "tau_num": 1e-9,
        "embedder": "hashed",
        "dimension": 4096,
        "hash_seed": "veriprop-v1",
        "key_attributes": ["diagnosis", "treatment", "procedure", "medication"],
    }


def test_nested_settings(monkeypatch, no_env_file):
    """Test nested configuration settings from the environment."""
    monkeypatch.setenv("VERIPROP_ALIGNMENT__TAU_MATCH", "0.7")
    monkeypatch.setenv("VERIPROP_ALIGNMENT__DIMENSION", "1024")
    monkeypatch.setenv("VERIPROP_CHECKS__TAU_NUM", "0.01")
    monkeypatch.setenv("VERIPROP_CHECKS__KEY_ATTRIBUTES", '["diagnosis", "lab_value"]')
    monkeypatch.setenv("VERIPROP_EXTRACTION__NEGATION_WINDOW", "3")
    monkeypatch.setenv("VERIPROP_CORPUS__WORKERS", "2")
    monkeypatch.setenv("VERIPROP_LORA__STEPS", "50")
    settings = create_settings(Environment.DEVELOPMENT, env_file=no_env_file)

    assert settings.alignment.tau_match == 0.7
    assert settings.alignment.dimension == 1024
    assert settings.checks.tau_num == 0.01
    assert settings.checks.key_attributes == ["diagnosis", "lab_value"]
    assert settings.extraction.negation_window == 3
    assert settings.corpus.workers == 2
    assert settings.lora.steps == 50


def test_source_precedence(monkeypatch, tmp_path):
    """Overrides beat the config file, which beats the environment."""
    config = tmp_path / "run.env"
    config.write_text(
        "VERIPROP_ALIGNMENT__TAU_MATCH=0.8\nVERIPROP_ALIGNMENT__HASH_SEED=from-file\n",
        encoding="utf-8",
    )
    monkeypatch.setenv("VERIPROP_ALIGNMENT__TAU_MATCH", "0.6")
    monkeypatch.setenv("VERIPROP_CHECKS__TAU_NUM", "0.05")

    from_file = create_settings(Environment.DEVELOPMENT, env_file=str(config))
    assert from_file.alignment.tau_match == 0.8
    assert from_file.checks.tau_num == 0.05

    overridden = create_settings(
        Environment.DEVELOPMENT, env_file=str(config), alignment={"tau_match": 0.9}
    )
    assert overridden.alignment.tau_match == 0.9
    assert overridden.alignment.hash_seed == "from-file"


def test_testing_environment_quiets_logging(monkeypatch, no_env_file):
    monkeypatch.setenv("VERIPROP_LOGGING__LEVEL", "DEBUG")
    settings = create_settings(Environment.TESTING, env_file=no_env_file)
    assert settings.is_testing
    assert settings.logging.level == LogLevel.WARNING
    assert settings.logging.console_output is False


def test_debug_in_development_lowers_level(no_env_file):
    settings = create_settings(
        Environment.DEVELOPMENT, env_file=no_env_file, debug=True
    )
    assert settings.logging.level == LogLevel.DEBUG


def test_production_settings(no_env_file, tmp_path):
    settings = create_settings(Environment.PRODUCTION, env_file=no_env_file)
    assert settings.is_production
    assert settings.logging.json_format is True

    with pytest.raises(ValueError):
        create_settings(Environment.PRODUCTION, env_file=no_env_file, debug=True)
    with pytest.raises(ValueError, match="Knowledge-base directory"):
        create_settings(
            Environment.PRODUCTION, env_file=no_env_file, kb=str(tmp_path / "missing")
        )


def test_invalid_values_are_rejected(no_env_file):
    def build(**overrides):
        return create_settings(
            Environment.DEVELOPMENT, env_file=no_env_file, **overrides
        )

    with pytest.raises(ValidationError):
        build(checks={"key_attributes": ["colour"]})
    with pytest.raises(ValidationError):
        build(checks={"confidence_floor": 0.9, "confidence_ceiling": 0.5})
    with pytest.raises(ValidationError):
        build(corpus={"min_propositions": 30, "max_propositions": 20})
    with pytest.raises(ValidationError):
        build(alignment={"tau_match": 1.5})


def test_run_readiness(no_env_file, tmp_path):
    settings = create_settings(
        Environment.DEVELOPMENT,
        env_file=no_env_file,
        kb=str(tmp_path),
        alignment={"embedder": "precomputed"},
    )
    assert settings.kb_dir == tmp_path
    assert settings.validate_run_readiness() == [
        "Precomputed embedder requires alignment.embeddings_file"
    ]


def test_global_settings_singleton(monkeypatch):
    monkeypatch.setenv("VERIPROP_ALIGNMENT__TAU_MATCH", "0.65")
    first = reload_settings()
    assert get_settings() is first
    assert first.alignment.tau_match == 0.65
    assert reload_settings() is not first
