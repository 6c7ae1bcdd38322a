"""Built-in parameter sets and config-file loading.

Config files are INI-style: one section per model, holding exactly the
keys c_m1, c0, c1, c2, c3, kappa, rho, x0 as floats.

    [mymodel]
    c_m1 = 1.5
    c0 = 2.0
    c1 = 1.0
    c2 = 2.0
    c3 = 1.0
    kappa = 5.0
    rho = 1.5
    x0 = 1.0

Sections loaded from a file sit alongside the built-in presets and are
selected by section name.
"""

from __future__ import annotations

import configparser
import math

from .model import ModelParams, validate

__all__ = ["PRESETS", "PARAM_KEYS", "load_params_file", "get_params"]

PARAM_KEYS = ("c_m1", "c0", "c1", "c2", "c3", "kappa", "rho", "x0")

# eg1 is non-critical (kappa + 1 > 2 rho); eg2 and eg3 are critical with
# c2 / c3**2 = 16 and 3.5 respectively, eg3 sitting exactly on the tamed
# threshold (2 alpha + 1) kappa - 1/2 at alpha = 1/2.
PRESETS: dict[str, ModelParams] = {
    "eg1": ModelParams(c_m1=1.5, c0=2.0, c1=1.0, c2=2.0, c3=1.0, kappa=5.0, rho=1.5, x0=1.0),
    "eg2": ModelParams(c_m1=1.5, c0=2.0, c1=1.0, c2=4.0, c3=0.5, kappa=3.0, rho=2.0, x0=1.0),
    "eg3": ModelParams(
        c_m1=2.0, c0=3.0, c1=4.0, c2=7.0, c3=math.sqrt(2.0), kappa=2.0, rho=1.5, x0=1.0
    ),
}


def load_params_file(path: str) -> dict[str, ModelParams]:
    """Parse every section of an INI file into validated ModelParams."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found or unreadable: {path}")
    out: dict[str, ModelParams] = {}
    for section in parser.sections():
        got = set(parser[section])
        want = set(PARAM_KEYS)
        if got != want:
            missing = sorted(want - got)
            extra = sorted(got - want)
            detail = []
            if missing:
                detail.append(f"missing keys {missing}")
            if extra:
                detail.append(f"unknown keys {extra}")
            raise ValueError(f"section [{section}]: " + ", ".join(detail))
        try:
            values = {key: float(parser[section][key]) for key in PARAM_KEYS}
        except ValueError as exc:
            raise ValueError(f"section [{section}]: {exc}") from exc
        out[section] = validate(ModelParams(**values))
    return out


def get_params(name: str, config_path: str | None = None) -> ModelParams:
    """Look up a preset by name, searching a config file first if given."""
    table = dict(PRESETS)
    if config_path is not None:
        table.update(load_params_file(config_path))
    if name not in table:
        known = ", ".join(sorted(table))
        raise KeyError(f"unknown preset {name!r}; available: {known}")
    return validate(table[name])
