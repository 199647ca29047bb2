import pytest
from click.testing import CliRunner

from vascsim.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def generate(runner, config, out, subjects=6):
    return runner.invoke(cli, [
        "generate", "-c", str(config), "-o", str(out), "-j", "1",
        "--subjects", str(subjects), "--disease", "aaa",
    ])


class TestValidate:
    def test_valid_config(self, runner, tiny_config_path):
        result = runner.invoke(cli, ["validate", "-c", str(tiny_config_path)])
        assert result.exit_code == 0
        assert "seed 5" in result.output

    def test_needs_an_option(self, runner):
        result = runner.invoke(cli, ["validate"])
        assert result.exit_code == 1
        assert "--config" in result.output

    def test_unknown_option_is_a_usage_error(self, runner):
        assert runner.invoke(cli, ["validate", "--nope"]).exit_code == 2

    def test_invalid_config(self, runner, tmp_path):
        path = tmp_path / "bad.yml"
        path.write_text("population:\n  healthy: 10\n")
        result = runner.invoke(cli, ["validate", "-c", str(path)])
        assert result.exit_code == 1
        assert "seed" in result.output


@pytest.mark.slow
class TestPipeline:
    def test_generate_is_reproducible(self, runner, tiny_config_path, tmp_path):
        first = generate(runner, tiny_config_path, tmp_path / "a", subjects=4)
        second = generate(runner, tiny_config_path, tmp_path / "b", subjects=4)
        assert first.exit_code == 0, first.output
        assert second.exit_code == 0, second.output
        written = sorted(p.name for p in (tmp_path / "a").glob("*.jsonl"))
        assert written == ["VPD_AAA.jsonl", "VPD_H.jsonl"]
        for name in written:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_validate_generated_cohort(self, runner, tiny_config_path, tmp_path):
        generate(runner, tiny_config_path, tmp_path, subjects=4)
        result = runner.invoke(cli, ["validate", "--cohort", str(tmp_path / "VPD_AAA.jsonl")])
        assert result.exit_code == 0
        assert "4 records" in result.output

    def test_export_and_import(self, runner, tiny_config_path, tmp_path):
        generate(runner, tiny_config_path, tmp_path, subjects=4)
        table = tmp_path / "export" / "h.csv"
        exported = runner.invoke(cli, ["export-table", str(tmp_path / "VPD_H.jsonl"), "-t", str(table)])
        assert exported.exit_code == 0, exported.output
        imported = runner.invoke(cli, [
            "import-vpd", str(table), "-m", str(table.with_suffix(".descriptor.yml")),
        ])
        assert imported.exit_code == 0, imported.output
        assert (tmp_path / "export" / "VPD_H.jsonl").read_bytes() == (tmp_path / "VPD_H.jsonl").read_bytes()

    def test_sweep_subset(self, runner, tiny_config_path, tmp_path):
        generate(runner, tiny_config_path, tmp_path)
        args = ["sweep", "-c", str(tiny_config_path), "-o", str(tmp_path), "-j", "1",
                "--methods", "nb", "--combos", "q1,q1+p3", "--disease", "aaa"]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        table = (tmp_path / "reports" / "AAA_f1.csv").read_text().splitlines()
        assert table[0] == "combination,NB"
        assert [line.split(",")[0] for line in table[1:]] == ["Q1", "Q1+P3"]

        again = runner.invoke(cli, args)
        assert again.exit_code == 0
        assert "already up to date" in again.output

    def test_gridsearch_rejects_fixed_families(self, runner, tiny_config_path, tmp_path):
        generate(runner, tiny_config_path, tmp_path)
        result = runner.invoke(cli, [
            "gridsearch", "-c", str(tiny_config_path), "-o", str(tmp_path),
            "--method", "nb", "--disease", "aaa",
        ])
        assert result.exit_code == 1

    def test_gridsearch_prints_best_cell(self, runner, tiny_config_path, tmp_path):
        generate(runner, tiny_config_path, tmp_path)
        result = runner.invoke(cli, [
            "gridsearch", "-c", str(tiny_config_path), "-o", str(tmp_path), "-j", "1",
            "--method", "gb", "--disease", "aaa", "--combos", "q1,q1+p3",
        ])
        assert result.exit_code == 0, result.output
        assert "Trees" in result.output and "Depth" in result.output
        assert "AAA on Q1 " in result.output and "AAA on Q1+P3 " in result.output
        for name in ("AAA_GB_Q1_grid.csv", "AAA_GB_Q1+P3_grid.csv"):
            assert (tmp_path / "reports" / name).exists()

    def test_summarize_needs_sweep(self, runner, tiny_config_path, tmp_path):
        result = runner.invoke(cli, ["summarize", "-c", str(tiny_config_path), "-o", str(tmp_path),
                                     "--disease", "aaa"])
        assert result.exit_code == 1
