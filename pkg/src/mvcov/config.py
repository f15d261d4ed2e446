"""Experiment configuration: flat INI files with strict key checking.

Unknown sections or keys are rejected so typos fail loudly.  Every field
has a default; `resolved_text` renders the fully resolved configuration,
which re-ingests to an identical run.
"""

import configparser
import os
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .covariance import NoiseParams
from .errors import ConfigError

EXPERIMENT_KINDS = (
    "validate-geometric",
    "validate-photometric",
    "validate-feature",
    "ba-benchmark",
    "information-study",
)


@dataclass
class ExperimentConfig:
    # [experiment]
    kind: str = "validate-geometric"
    seed: int = 0
    n_seeds: int = 20              # seeds for multi-seed experiments
    output_dir: str = "out"
    threads: int = 1
    # [noise]
    sigma_i: float = 2.0
    sigma_kp: float = 1.0
    sigma_invdepth: float = 0.0
    pose_trans_std: float = 0.0
    pose_rot_std: float = 0.0
    # [estimator]
    weighting: str = "model"
    max_iterations: int = 60
    refresh_every: int = 0
    huber_delta: Optional[float] = None
    # [deformation]
    deformation_reference: str = "translation"
    deformation_reading: str = "deterministic"
    kappa: float = 1.0
    # [dataset]
    dataset_dir: Optional[str] = None

    def noise_params(self) -> NoiseParams:
        pose_cov = None
        if self.pose_trans_std > 0 or self.pose_rot_std > 0:
            pose_cov = np.diag(
                [self.pose_trans_std**2] * 3 + [self.pose_rot_std**2] * 3
            )
        return NoiseParams(
            sigma_i=self.sigma_i,
            sigma_kp=self.sigma_kp,
            sigma_invdepth=self.sigma_invdepth,
            pose_cov=pose_cov,
        )

    def validate(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"unknown experiment kind {self.kind!r}; "
                f"expected one of {', '.join(EXPERIMENT_KINDS)}"
            )
        if self.weighting not in ("model", "uniform"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.deformation_reference not in ("translation", "similarity"):
            raise ConfigError(
                f"unknown deformation reference {self.deformation_reference!r}"
            )
        if self.deformation_reading not in ("deterministic", "stochastic"):
            raise ConfigError(
                f"unknown deformation reading {self.deformation_reading!r}"
            )
        if self.n_seeds < 1 or self.threads < 1 or self.max_iterations < 1:
            raise ConfigError("n_seeds, threads and max_iterations must be >= 1")
        if min(self.sigma_i, self.sigma_kp, self.sigma_invdepth,
               self.pose_trans_std, self.pose_rot_std) < 0:
            raise ConfigError("noise magnitudes must be non-negative")
        if self.dataset_dir is not None and not os.path.isdir(self.dataset_dir):
            raise ConfigError(f"dataset_dir {self.dataset_dir!r} does not exist")
        return self


_SCHEMA = {
    "experiment": {
        "kind": str, "seed": int, "n_seeds": int, "output_dir": str,
        "threads": int,
    },
    "noise": {
        "sigma_i": float, "sigma_kp": float, "sigma_invdepth": float,
        "pose_trans_std": float, "pose_rot_std": float,
    },
    "estimator": {
        "weighting": str, "max_iterations": int, "refresh_every": int,
        "huber_delta": float,
    },
    "deformation": {
        "deformation_reference": str, "deformation_reading": str,
        "kappa": float,
    },
    "dataset": {"dataset_dir": str},
}

# keys whose blank value means None
_OPTIONAL = {"huber_delta", "dataset_dir"}


def parse_config(text, origin="<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as e:
        raise ConfigError(f"{origin}: {e}")
    cfg = ExperimentConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"{origin}: unknown key {key!r} in section [{section}]"
                )
            if raw.strip() == "" and key in _OPTIONAL:
                setattr(cfg, key, None)
                continue
            typ = _SCHEMA[section][key]
            try:
                setattr(cfg, key, typ(raw))
            except ValueError:
                raise ConfigError(
                    f"{origin}: key {key!r}: cannot parse {raw!r} as "
                    f"{typ.__name__}"
                )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"config file {path!r} does not exist")
    with open(path) as f:
        return parse_config(f.read(), origin=str(path))


def resolved_text(cfg: ExperimentConfig) -> str:
    """Fully resolved INI text; re-parsing it reproduces cfg exactly."""
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = getattr(cfg, key)
            lines.append(f"{key} = {'' if value is None else value}")
        lines.append("")
    return "\n".join(lines)
