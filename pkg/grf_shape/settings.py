"""
Global settings for grf_shape.

The settings are a plain dict. They can be stored as json, the search path is:
    <working-dir>/grf-shape.json
    $XDG_CONFIG_HOME/grf-shape.json
    ~/.config/grf-shape.json
"""
import json
import logging
from os import path, environ, makedirs

log = logging.getLogger(__name__)

CONFIG_NAME = "grf-shape.json"

settings = {
    "datadir":                  path.expanduser("~/data/grf-shape"),
    "name":                     "grf",
    # exact oracle
    "enumeration_cap":          2**24,
    # sampler
    "burn_in":                  1000,
    "n_samples":                100,
    "thinning":                 1,
    "scan":                     "raster",
    "chains":                   1,
    # potential learning
    "iterations":               1000,
    "step0":                    0.0,  # 0 -> 1/(W*H)
    "tau":                      0.0,  # 0 -> iterations/3
    "learning_burn_in":         100,
    "inner_sweeps":             2,
    "samples_per_expectation":  1,
    # structure estimation
    "d":                        6,
    "metric":                   "euclid",
    "structure_budget_fraction": 0.25,
    # composition
    "composition_epsilon":      0.02,
    # appearance
    "components_per_label":     4,
    "threads":                  1,
}

config_path = path.expanduser(f"~/.config/{CONFIG_NAME}")


def find_config_path():
    """
    Return the first existing config file of the search path.
    If none exists, return the path where a new one should be created.
    """
    if path.isfile(CONFIG_NAME):
        return CONFIG_NAME
    if "XDG_CONFIG_HOME" in environ.keys():
        return path.join(environ["XDG_CONFIG_HOME"], CONFIG_NAME)
    return path.expanduser(f"~/.config/{CONFIG_NAME}")


def set_setting(setting: str, value):
    """
    Set a setting to a value. Refuses values with a different type than the current one.
    """
    if setting in settings:
        # ints are accepted for float settings
        if type(value) != type(settings[setting]) and not (type(settings[setting]) == float and type(value) == int):
            raise TypeError(f"set_setting: setting '{setting}' currently holds a value of type '{type(settings[setting])}'")
    settings[setting] = value


def save_settings(p: str | None = None):
    p = p or config_path
    directory = path.dirname(p)
    if directory and not path.isdir(directory):
        makedirs(directory)
    with open(p, "w") as file:
        json.dump(settings, file, indent=4)
    log.info(f"save_settings: saved settings to '{p}'")


def load_settings(p: str | None = None):
    """
    Load settings from a json file and merge them into the defaults.
    Unknown keys are kept, so that newer config files work with older versions.
    """
    global config_path
    p = p or config_path
    with open(p, "r") as file:
        loaded = json.load(file)
    for key, value in loaded.items():
        if key in settings and type(settings[key]) == float and type(value) == int:
            value = float(value)
        settings[key] = value
    settings["datadir"] = path.expanduser(settings["datadir"])  # replace ~
    config_path = p
    log.info(f"load_settings: loaded settings from '{p}'")
