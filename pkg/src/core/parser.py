"""Module containing functions to parse and validate run configuration files."""

from __future__ import annotations

import logging
from typing import Any

from pydantic import ValidationError

from core.energy import InteractionModel
from core.lattice import SiteType
from core.schemas.run import RunConfig
from core.utils.exceptions import ConfigError

# Initialize logger for this module
logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("L", "M", "fraction_A", "omega_AB", "n_steps", "seed")
GIBBS_KEYS = ("g_AA", "g_AB", "g_BB")
RENDER_KEYS = ("target_width", "supersample", "delta_col")
OPTIONAL_KEYS = (
    "engine",
    "init",
    "sample_interval",
    "snapshot_interval",
    "cluster_target",
    "lanes",
    "image_format",
    "output_dir",
)
KNOWN_KEYS = frozenset(REQUIRED_KEYS + GIBBS_KEYS + RENDER_KEYS + OPTIONAL_KEYS)


def read_pairs(text: str) -> dict[str, str]:
    """Split ``key=value`` lines into a dictionary.

    Blank lines are skipped and ``#`` starts a comment that runs to the end of the line.

    Parameters
    ----------
    text : str
        Configuration text.

    Returns
    -------
    dict[str, str]
        Raw values keyed by name, in file order.

    Raises
    ------
    ConfigError
        If a line has no ``=``, a key is empty or unknown, or a key appears twice.

    """
    pairs: dict[str, str] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            msg = f"line {line_number}: expected 'key=value', got {raw.strip()!r}"
            raise ConfigError(msg)
        if key not in KNOWN_KEYS:
            msg = f"line {line_number}: unknown key '{key}'"
            raise ConfigError(msg, key)
        if key in pairs:
            msg = f"line {line_number}: duplicate key '{key}'"
            raise ConfigError(msg, key)
        pairs[key] = value
    return pairs


def parse_config(text: str) -> RunConfig:
    """Parse a run configuration and fill in documented defaults.

    ``omega_AB`` may be replaced by the three Gibbs free energies ``g_AA``, ``g_AB`` and ``g_BB``
    (in kT), from which it is derived.

    Parameters
    ----------
    text : str
        UTF-8 ``key=value`` text.

    Returns
    -------
    RunConfig
        The validated configuration.

    Raises
    ------
    ConfigError
        On syntax errors, unknown or missing keys and invalid values. For ``engine=mpkk`` on a lattice
        without exact domain coverage the message carries the nearest valid size.

    """
    pairs = read_pairs(text)
    fields: dict[str, Any] = {k: v for k, v in pairs.items() if k in REQUIRED_KEYS or k in OPTIONAL_KEYS}

    gibbs = [k for k in GIBBS_KEYS if k in pairs]
    if gibbs:
        if "omega_AB" in pairs:
            msg = "Give either omega_AB or the Gibbs energies g_AA, g_AB, g_BB, not both"
            raise ConfigError(msg, "omega_AB")
        missing_gibbs = [k for k in GIBBS_KEYS if k not in pairs]
        if missing_gibbs:
            msg = f"Missing required key '{missing_gibbs[0]}'"
            raise ConfigError(msg, missing_gibbs[0])
        fields["omega_AB"] = _interaction_from_gibbs(pairs).omega_AB

    for key in REQUIRED_KEYS:
        if key not in fields:
            msg = f"Missing required key '{key}'"
            raise ConfigError(msg, key)

    if "cluster_target" in fields:
        fields["cluster_target"] = _parse_species(fields["cluster_target"])
    render = {k: pairs[k] for k in RENDER_KEYS if k in pairs}
    if render:
        fields["render"] = render

    config = validate_config(fields)
    logger.debug(
        "Configuration parsed",
        extra={
            "dims": str(config.dims),
            "engine": str(config.engine),
            "defaulted": sorted(set(OPTIONAL_KEYS) - set(pairs)),
        },
    )
    return config


def _interaction_from_gibbs(pairs: dict[str, str]) -> InteractionModel:
    try:
        g_aa, g_ab, g_bb = (float(pairs[k]) for k in GIBBS_KEYS)
        return InteractionModel.from_gibbs(g_aa, g_ab, g_bb)
    except ValueError as exc:
        msg = f"Invalid Gibbs energies: {exc}"
        raise ConfigError(msg, "g_AB") from exc


def _parse_species(value: str) -> SiteType:
    try:
        return SiteType[value.strip().upper()]
    except KeyError:
        msg = f"cluster_target must be 'A' or 'B', got {value!r}"
        raise ConfigError(msg, "cluster_target") from None


def _config_error(exc: ValidationError) -> ConfigError:
    """Translate the first pydantic error into a ``ConfigError`` naming the offending key."""
    error = exc.errors()[0]
    keys = [part for part in error["loc"] if isinstance(part, str)]
    cause = error.get("ctx", {}).get("error")
    if not keys:
        # model-level check (lattice dimensions and domain coverage)
        return ConfigError(str(cause) if cause is not None else error["msg"], "L")
    key = keys[-1]
    return ConfigError(f"Invalid value for '{key}': {error['msg']}", key)


def validate_config(data: dict[str, Any]) -> RunConfig:
    """Validate raw or re-dumped configuration fields into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Naming the first offending key; ``L`` for lattice size and coverage failures.

    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _config_error(exc) from exc
