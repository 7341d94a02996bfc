"""Flat dotted-key run configuration.

Config files are plain text, one ``section.key = value`` per line, with
``#`` comments.  Every key can be overridden on the command line via
``--section.key=value``; precedence is flags > file > defaults.
Validation collects *all* problems before reporting.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .data import Corruption


class ConfigError(Exception):
    """One or more invalid config entries; message lists all of them."""


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{s}'")


def _parse_int_list(s):
    return [int(tok) for tok in s.split(",") if tok.strip() != ""]


def _parse_str_list(s):
    return [tok.strip() for tok in s.split(",") if tok.strip() != ""]


# key -> (parser, default); defaults are already-parsed values
KEYS = {
    "data.train": (str, None),
    "data.test": (str, None),
    "data.normal_label": (int, 1),
    "data.input_length": (int, 187),
    "run.task": (str, "reconstruction"),
    "run.tasks": (_parse_str_list, ["reconstruction"]),
    "run.families": (_parse_str_list, ["AE", "KAE", "CAE", "KCAE"]),
    "run.seeds": (_parse_int_list, [0]),
    "run.out": (str, "out"),
    "run.precision": (str, "float32"),
    "model.family": (str, "KCAE"),
    "model.latent_dim": (int, 32),
    "model.dropout": (float, 0.1),
    "model.use_batchnorm": (_parse_bool, True),
    "model.use_dropout": (_parse_bool, True),
    "model.grid_size": (int, 5),
    "model.spline_order": (int, 4),
    "model.grid_min": (float, -4.0),
    "model.grid_max": (float, 4.0),
    "model.kl_weight": (float, 1e-3),
    "model.smoothness_weight": (float, 0.0),
    "train.epochs": (int, 100),
    "train.batch_size": (int, 16),
    "train.lr": (float, 1e-3),
    # corruption kind is decided by the task (denoising -> noise,
    # inpainting -> mask); only the parameters are configurable
    "corrupt.noise_sigma": (float, 0.3),
    "corrupt.mask_ratio": (float, 0.2),
    "corrupt.mask_block_length": (int, 10),
}

_TASKS = ("reconstruction", "denoising", "inpainting", "anomaly", "generation")
_FAMILIES = ("AE", "KAE", "CAE", "KCAE")


def parse_config_file(path):
    """Raw string mapping from a flat key-value file."""
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = stripped.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def parse_overrides(tokens):
    """``--section.key=value`` tokens into a raw mapping."""
    mapping = {}
    for tok in tokens:
        if not tok.startswith("--") or "=" not in tok:
            raise ConfigError(f"cannot parse override '{tok}' "
                              "(expected --section.key=value)")
        key, value = tok[2:].split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, overrides=None):
        """defaults <- file <- overrides, then validate everything."""
        raw = {}
        if path is not None:
            raw.update(parse_config_file(path))
        if overrides:
            raw.update(overrides)

        errors = []
        values = {k: default for k, (_, default) in KEYS.items()}
        for key, text in raw.items():
            if key not in KEYS:
                errors.append(f"unknown config key '{key}'")
                continue
            parser, _ = KEYS[key]
            try:
                values[key] = parser(text)
            except ValueError as exc:
                errors.append(f"{key}: {exc}")

        cfg = cls(values)
        errors.extend(cfg._semantic_errors())
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
        return cfg

    def _semantic_errors(self):
        errors = []
        v = self.values
        for key in ("data.train", "data.test"):
            path = v.get(key)
            if path is None:
                errors.append(f"{key} is required")
            elif not os.path.exists(path):
                errors.append(f"{key}: no such file '{path}'")
        if not v["run.seeds"]:
            errors.append("run.seeds must be a nonempty list")
        if v["run.task"] not in _TASKS:
            errors.append(f"run.task: unknown task '{v['run.task']}'")
        for t in v["run.tasks"]:
            if t not in _TASKS:
                errors.append(f"run.tasks: unknown task '{t}'")
        for fam in v["run.families"]:
            if fam not in _FAMILIES:
                errors.append(f"run.families: unknown family '{fam}'")
        if v["model.family"] not in _FAMILIES:
            errors.append(f"model.family: unknown family '{v['model.family']}'")
        if v["run.precision"] not in ("float32", "float64"):
            errors.append("run.precision must be float32 or float64")
        if v["train.epochs"] < 1:
            errors.append("train.epochs must be >= 1")
        if v["train.batch_size"] < 2:
            errors.append("train.batch_size must be >= 2")
        if v["train.lr"] <= 0:
            errors.append("train.lr must be positive")
        if not 0.0 <= v["model.dropout"] < 1.0:
            errors.append("model.dropout must be in [0, 1)")
        if v["corrupt.noise_sigma"] < 0:
            errors.append("corrupt.noise_sigma must be >= 0")
        if not 0.0 <= v["corrupt.mask_ratio"] < 1.0:
            errors.append("corrupt.mask_ratio must be in [0, 1)")
        return errors

    def __getitem__(self, key):
        return self.values[key]

    def out_root(self):
        return os.environ.get("KANAE_OUT", self.values["run.out"])

    def corruption(self, kind, seed):
        v = self.values
        return Corruption(kind=kind,
                          noise_sigma=v["corrupt.noise_sigma"],
                          mask_ratio=v["corrupt.mask_ratio"],
                          mask_block_length=v["corrupt.mask_block_length"],
                          seed=seed)

    def model_overrides(self):
        v = self.values
        return {
            "latent_dim": v["model.latent_dim"],
            "dropout": v["model.dropout"],
            "use_batchnorm": v["model.use_batchnorm"],
            "use_dropout": v["model.use_dropout"],
            "grid_size": v["model.grid_size"],
            "spline_order": v["model.spline_order"],
            "grid_range": (v["model.grid_min"], v["model.grid_max"]),
            "kl_weight": v["model.kl_weight"],
            "smoothness_weight": v["model.smoothness_weight"],
        }

    def effective(self):
        """Flat serializable view; feeding it back reproduces the run."""
        out = {}
        for key, value in sorted(self.values.items()):
            if isinstance(value, list):
                out[key] = ",".join(str(x) for x in value)
            else:
                out[key] = value
        return out
