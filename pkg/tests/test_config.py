import pytest

from mvcov.config import (
    ExperimentConfig,
    load_config,
    parse_config,
    resolved_text,
)
from mvcov.errors import ConfigError


def test_defaults():
    cfg = parse_config("")
    assert cfg.kind == "validate-geometric"
    assert cfg.seed == 0
    assert cfg.n_seeds == 20
    assert cfg.weighting == "model"
    assert cfg.huber_delta is None
    assert cfg.dataset_dir is None


def test_parse_full_config(tmp_path):
    text = """
[experiment]
kind = ba-benchmark
seed = 3
n_seeds = 5
output_dir = results
threads = 2

[noise]
sigma_i = 1.5
sigma_kp = 0.4
sigma_invdepth = 0.002
pose_trans_std = 0.001
pose_rot_std = 0.0005

[estimator]
weighting = uniform
max_iterations = 30
refresh_every = 2
huber_delta = 1.5

[deformation]
deformation_reference = similarity
deformation_reading = stochastic
kappa = 0.8
"""
    cfg = parse_config(text)
    assert cfg.kind == "ba-benchmark"
    assert cfg.seed == 3 and cfg.n_seeds == 5 and cfg.threads == 2
    assert cfg.sigma_i == 1.5 and cfg.sigma_kp == 0.4
    assert cfg.weighting == "uniform" and cfg.huber_delta == 1.5
    assert cfg.deformation_reference == "similarity"
    assert cfg.kappa == 0.8
    noise = cfg.noise_params()
    assert noise.sigma_i == 1.5
    assert noise.pose_cov is not None
    assert noise.pose_cov[0, 0] == pytest.approx(0.001**2)
    assert noise.pose_cov[3, 3] == pytest.approx(0.0005**2)


def test_resolved_text_round_trips():
    cfg = parse_config(
        "[experiment]\nkind = information-study\nseed = 9\n"
        "[estimator]\nhuber_delta = 2.0\n"
    )
    text = resolved_text(cfg)
    again = parse_config(text)
    assert again == cfg
    assert resolved_text(again) == text


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[nonsense]\nfoo = 1\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[experiment]\nkindd = ba-benchmark\n")


def test_bad_value_type():
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("[experiment]\nseed = abc\n")


def test_blank_optional_is_none():
    cfg = parse_config("[estimator]\nhuber_delta =\n")
    assert cfg.huber_delta is None


def test_validation_errors():
    with pytest.raises(ConfigError, match="unknown experiment kind"):
        ExperimentConfig(kind="bogus").validate()
    with pytest.raises(ConfigError, match="unknown weighting"):
        ExperimentConfig(weighting="bogus").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(threads=0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sigma_i=-1.0).validate()
    with pytest.raises(ConfigError, match="does not exist"):
        ExperimentConfig(dataset_dir="/no/such/dir").validate()


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "absent.ini")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nkind = information-study\n")
    cfg = load_config(path)
    assert cfg.kind == "information-study"
