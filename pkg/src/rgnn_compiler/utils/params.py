"""
Default settings and their resolution.

Settings are resolved from the defaults below, then environment variables
named `RGNN_COMPILER_<KEY>`, then explicit overrides.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from rgnn_compiler.utils.dicts import env_parameters, get_parameter, merge_parameters

if TYPE_CHECKING:
    from typing import Any

DEFAULTS: dict[str, Any] = {
    "bound_scale": 16,
    "width_factor": 1,
    "machine_step_cap": 10**6,
    "mp_step_cap": None,
    "rgnn_max_steps": None,
    "smpga_n_max": 3,
    "rgnn_n_max": 2,
    "full_n_max": 2,
}

_INTEGER_KEYS = ("bound_scale", "width_factor", "machine_step_cap")


def resolve_settings(overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """
    Resolve every setting.

    Parameters
    ----------
    overrides
        Explicit values, taking precedence over the environment.

    Returns
    -------
    dict
        The resolved settings.
    """
    settings = merge_parameters(DEFAULTS, env_parameters(list(DEFAULTS)))
    settings = merge_parameters(settings, overrides or {})
    for key in _INTEGER_KEYS:
        value = get_parameter(settings, key)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ValueError(
                f"Setting {key} (environment variable RGNN_COMPILER_{key.upper()}) must be a positive integer, got {value!r}"
            )
    return settings


def get_setting(key: str, overrides: dict[str, Any] | None = None) -> Any:
    """
    Resolve one setting.

    Parameters
    ----------
    key
        The setting name, case-insensitive.
    overrides
        Explicit values.

    Returns
    -------
    Any
        The value.
    """
    if get_parameter(DEFAULTS, key, default=KeyError) is KeyError:
        raise KeyError(f"Unknown setting {key}")
    return get_parameter(resolve_settings(overrides), key)
