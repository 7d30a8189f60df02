import pytest

from fairaudit.config import Settings, get_settings


def test_defaults():
    settings = get_settings()
    assert settings.SEED == 0
    assert settings.ALPHA == 0.05
    assert settings.BOOTSTRAP_REPLICATES == 2000
    assert settings.CONSISTENCY_K == 5
    assert settings.MAX_FOREST_PLOTS == 20
    assert (settings.ALPHA_SOURCE, settings.SEED_SOURCE) == ("default", "default")


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("FAIRAUDIT_ALPHA", "0.01")
    monkeypatch.setenv("FAIRAUDIT_SEED", "42")
    monkeypatch.setenv("FAIRAUDIT_LOG_LEVEL", "debug")
    settings = Settings()
    assert settings.ALPHA == 0.01
    assert settings.SEED == 42
    assert settings.LOG_LEVEL == "DEBUG"
    assert (settings.ALPHA_SOURCE, settings.SEED_SOURCE) == ("environment", "environment")


def test_settings_are_cached():
    assert get_settings() is get_settings()


@pytest.mark.parametrize(
    "name, value",
    [
        ("FAIRAUDIT_ALPHA", "1.5"),
        ("FAIRAUDIT_ALPHA", "abc"),
        ("FAIRAUDIT_BOOTSTRAP_REPLICATES", "10"),
        ("FAIRAUDIT_CONSISTENCY_K", "0"),
        ("FAIRAUDIT_MAX_WORKERS", "0"),
    ],
)
def test_invalid_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(RuntimeError):
        Settings()


def test_cli_reports_invalid_environment(monkeypatch):
    from fairaudit.main import EXIT_USAGE, main

    monkeypatch.setenv("FAIRAUDIT_ALPHA", "7")
    assert main(["schema", "--help"]) == EXIT_USAGE
