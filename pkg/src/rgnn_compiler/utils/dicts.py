from __future__ import annotations

import os
from copy import deepcopy
from fractions import Fraction
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from typing import Any

ENV_PREFIX = "RGNN_COMPILER_"


def get_parameter(d: dict[str, Any], key: str, default: Any = None) -> Any:
    """
    Look up a setting, ignoring case.

    Parameters
    ----------
    d
        The settings.
    key
        The setting name.
    default
        Returned when the setting is absent.

    Returns
    -------
    Any
        The value, or `default`.
    """
    wanted = key.lower()
    return next((v for k, v in d.items() if k.lower() == wanted), default)


def merge_parameters(dict1: dict[str, Any], dict2: dict[str, Any]) -> dict[str, Any]:
    """
    Overlay `dict2` on a copy of `dict1`, ignoring case. Keys of `dict1`
    keep their spelling.

    Parameters
    ----------
    dict1
        The base settings.
    dict2
        The overriding settings.

    Returns
    -------
    dict
        The merged settings.
    """
    merged = deepcopy(dict1)
    spelling = {k.lower(): k for k in merged}
    for key, value in dict2.items():
        merged[spelling.get(key.lower(), key)] = value
    return merged


def coerce_value(text: str) -> Any:
    """
    Turn a textual setting into a Python value.

    Integers, `num/den` rationals, `true`/`false` and `none` are recognized;
    anything else stays a string.

    Parameters
    ----------
    text
        The text.

    Returns
    -------
    Any
        The coerced value.
    """
    stripped = text.strip()
    lowered = stripped.lower()
    if lowered in ("true", "yes"):
        return True
    if lowered in ("false", "no"):
        return False
    if lowered in ("none", ""):
        return None
    try:
        return int(stripped)
    except ValueError:
        pass
    if "/" in stripped:
        try:
            return Fraction(stripped)
        except ValueError:
            pass
    return stripped


def env_parameters(keys: list[str], prefix: str = ENV_PREFIX) -> dict[str, Any]:
    """
    Collect overrides from environment variables named `<prefix><KEY>`.

    Parameters
    ----------
    keys
        The recognized setting names.
    prefix
        The variable prefix.

    Returns
    -------
    dict
        The settings that are set in the environment.
    """
    found = {}
    for key in keys:
        raw = os.environ.get(prefix + key.upper())
        if raw is not None:
            found[key] = coerce_value(raw)
    return found
