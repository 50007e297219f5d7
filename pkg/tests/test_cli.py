import os

import pytest

from gsbf import cli

SMALL = """\
[network]
num_bs = 2
num_users = 2
antennas = 2

[experiment]
sinr_sweep_db = 0
trials = 2
methods = logsum, cb
output_dir = {out}
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(SMALL.format(out=tmp_path / "results"), encoding="utf-8")
    return str(path)


class TestRun:
    def test_run_writes_records(self, config_path, tmp_path, capsys):
        code = cli.main(["run", "--config", config_path])
        assert code in (0, 1)  # 1 when some realization is infeasible
        assert (tmp_path / "results" / "records.csv").exists()
        assert "logsum" in capsys.readouterr().out

    def test_out_and_trials_overrides(self, config_path, tmp_path, capsys):
        out = tmp_path / "elsewhere"
        cli.main(["run", "--config", config_path, "--trials", "1",
                  "--out", str(out)])
        text = (out / "records.csv").read_text(encoding="utf-8")
        assert len(text.splitlines()) == 1 + 2  # header + 1 trial x 2 methods

    def test_methods_override(self, config_path, tmp_path, capsys):
        cli.main(["run", "--config", config_path, "--methods", "cb"])
        text = (tmp_path / "results" / "records.csv").read_text(encoding="utf-8")
        assert "logsum" not in text and "cb" in text

    def test_bad_config_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[network]\nwat = 1\n", encoding="utf-8")
        assert cli.main(["run", "--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err


class TestSummarize:
    def test_round_trip(self, config_path, tmp_path, capsys):
        cli.main(["run", "--config", config_path])
        first = capsys.readouterr().out.splitlines()[0]
        code = cli.main(["summarize", "--in", str(tmp_path / "results")])
        assert code == 0
        assert capsys.readouterr().out.splitlines()[0] == first

    def test_missing_dir_exit_2(self, tmp_path, capsys):
        assert cli.main(["summarize", "--in", str(tmp_path / "nope")]) == 2


class TestOracleCheck:
    def test_small_instance(self, config_path, capsys):
        code = cli.main(["oracle-check", "--config", config_path])
        assert code in (0, 1)
        assert "oracle lower-bounds" in capsys.readouterr().out

    def test_large_instance_rejected(self, tmp_path, capsys):
        path = tmp_path / "big.ini"
        path.write_text("[network]\nnum_bs = 8\nnum_users = 15\n",
                        encoding="utf-8")
        assert cli.main(["oracle-check", "--config", str(path)]) == 2
