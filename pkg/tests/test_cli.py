import pytest

from mvcov.cli import build_parser, main


@pytest.fixture
def geometric_ini(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\n"
        "kind = validate-geometric\n"
        f"output_dir = {tmp_path / 'out'}\n"
    )
    return path


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_parser_common_flags(geometric_ini):
    args = build_parser().parse_args(
        ["run", str(geometric_ini), "--seed", "7", "--threads", "2",
         "--weighting", "uniform"]
    )
    assert args.command == "run"
    assert args.seed == 7 and args.threads == 2
    assert args.weighting == "uniform"


def test_run_writes_artifacts(geometric_ini, tmp_path):
    assert main(["run", str(geometric_ini)]) == 0
    assert (tmp_path / "out" / "report.csv").is_file()
    assert (tmp_path / "out" / "summary.txt").is_file()


def test_validate_alias(geometric_ini):
    assert main(["validate", str(geometric_ini)]) == 0


def test_validate_rejects_non_validate_kind(tmp_path, capsys):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nkind = ba-benchmark\n")
    assert main(["validate", str(path)]) == 1
    assert "validate-" in capsys.readouterr().out


def test_seed_override_changes_output(geometric_ini, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", str(geometric_ini), "--out", str(out_a)]) == 0
    assert main(["run", str(geometric_ini), "--out", str(out_b),
                 "--seed", "5"]) == 0
    assert (out_a / "report.csv").read_text() != (out_b / "report.csv").read_text()


def test_missing_config_is_an_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.ini")]) == 1
    assert "error" in capsys.readouterr().out


def test_invalid_config_is_an_error(tmp_path, capsys):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nkind = bogus\n")
    assert main(["run", str(path)]) == 1
    assert "unknown experiment kind" in capsys.readouterr().out


def test_info_prints_point_diagnostics(tmp_path, capsys):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nkind = information-study\n")
    assert main(["info", "--point", "0", str(path)]) == 0
    out = capsys.readouterr().out
    assert "point 0" in out
    assert "information gain" in out


def test_info_point_out_of_range(tmp_path, capsys):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\nkind = information-study\n")
    assert main(["info", "--point", "999", str(path)]) == 1
    assert "out of range" in capsys.readouterr().out
