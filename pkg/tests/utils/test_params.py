import pytest

from rgnn_compiler.utils.params import DEFAULTS, get_setting, resolve_settings


def test_defaults():
    settings = resolve_settings()
    assert settings == DEFAULTS
    assert get_setting("bound_scale") == 16
    assert get_setting("WIDTH_FACTOR") == 1


def test_overrides_beat_environment(monkeypatch):
    monkeypatch.setenv("RGNN_COMPILER_BOUND_SCALE", "8")
    assert get_setting("bound_scale") == 8
    assert get_setting("bound_scale", {"bound_scale": 4}) == 4


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("RGNN_COMPILER_WIDTH_FACTOR", "wide")
    with pytest.raises(ValueError, match="RGNN_COMPILER_WIDTH_FACTOR"):
        resolve_settings()


def test_unknown_setting():
    with pytest.raises(KeyError, match="Unknown setting"):
        get_setting("colour")
