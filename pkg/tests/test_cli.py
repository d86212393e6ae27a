import numpy as np
import pytest

from bexsam.cli import main
from bexsam.freq import build_table, format_table
from bexsam.genbench import sample_dataset
from bexsam.model import BexsamModel, const, example_model, load_model, var


def _write_csv(path, names, X):
    path.write_text(",".join(names) + "\n" + "".join(",".join(map(str, r)) + "\n" for r in X))


@pytest.fixture
def example_csv(tmp_path):
    m = example_model()
    X = sample_dataset(m, 10_000, np.random.default_rng(2024))
    path = tmp_path / "ex.csv"
    _write_csv(path, m.names, X)
    return path, X


class TestGenerate:
    def test_reproducible(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["generate", "--d", "4", "--n", "1000", "--seed", "7", "--out", str(a)]) == 0
        assert main(["generate", "--d", "4", "--n", "1000", "--seed", "7", "--out", str(b)]) == 0
        for ext in (".model", ".csv"):
            assert (tmp_path / ("a" + ext)).read_bytes() == (tmp_path / ("b" + ext)).read_bytes()
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0] == "x1,x2,x3,x4" and len(lines) == 1001
        assert load_model(tmp_path / "a.model").d == 4

    def test_zero_d_is_usage_error(self, tmp_path):
        assert main(["generate", "--d", "0", "--n", "10", "--out", str(tmp_path / "z")]) == 2

    def test_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BEXSAM_SEED", "7")
        main(["generate", "--d", "3", "--n", "50", "--out", str(tmp_path / "e")])
        main(["generate", "--d", "3", "--n", "50", "--seed", "7", "--out", str(tmp_path / "s")])
        assert (tmp_path / "e.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()

    def test_explicit_noise(self, tmp_path):
        main(["generate", "--d", "2", "--n", "10", "--noise", "0.2,0.7", "--out", str(tmp_path / "m")])
        assert load_model(tmp_path / "m.model").noise_probs == (0.2, 0.7)
        assert main(["generate", "--d", "2", "--n", "10", "--noise", "0.5", "--out", str(tmp_path / "h")]) == 2


class TestDiscover:
    def test_example_edges(self, example_csv, tmp_path, capsys):
        path, _ = example_csv
        dot = tmp_path / "g.dot"
        assert main(["discover", str(path), "--graph-out", str(dot)]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "order: x1 x2 x3 x4"
        edges = {ln.strip().rstrip(";") for ln in dot.read_text().splitlines() if "->" in ln}
        assert edges == {'"x1" -> "x2"', '"x1" -> "x3"', '"x2" -> "x3"', '"x1" -> "x4"', '"x3" -> "x4"'}
        assert dot.read_text().startswith("digraph")

    def test_table_input_gives_identical_report(self, example_csv, tmp_path, capsys):
        path, X = example_csv
        ft = tmp_path / "ex.ft"
        ft.write_text(format_table(build_table(X, ["x1", "x2", "x3", "x4"])))
        for fmt in ("text", "table"):
            main(["discover", str(path), "--format", fmt])
            from_csv = capsys.readouterr().out
            main(["discover", str(ft), "--format", fmt])
            assert capsys.readouterr().out == from_csv

    def test_two_variable_order(self, tmp_path, capsys):
        m = BexsamModel((0, 1), (const(0), var(0)), (0.3, 0.2))
        X = sample_dataset(m, 10_000, np.random.default_rng(17))
        path = tmp_path / "two.csv"
        _write_csv(path, ["EX", "LE"], X)
        main(["discover", str(path), "--format", "table"])
        out = capsys.readouterr().out
        main(["discover", str(path)])
        text = capsys.readouterr().out
        assert "order: EX LE" in text and "LE: EX" in text
        assert out.splitlines()[0] == "step\tsink\tvariable\tS_B\tmin_p\tis_parent"

    def test_strict_incomplete(self, tmp_path):
        path = tmp_path / "inc.csv"
        path.write_text("a,b\n0,0\n1,1\n0,1\n")
        assert main(["discover", str(path)]) == 0
        assert main(["discover", str(path), "--strict"]) == 4

    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n0,1\n0,2\n")
        assert main(["discover", str(path)]) == 3
        assert "line 3" in capsys.readouterr().err

    def test_bad_alpha(self, example_csv):
        assert main(["discover", str(example_csv[0]), "--alpha", "2"]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["discover", str(tmp_path / "nope.csv")]) == 2


class TestBenchmark:
    def test_grid_shape(self, capsys):
        assert main(["benchmark", "--d", "2,4", "--n", "1000,2000", "--trials", "5", "--no-timings"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n\\d\tmetric\t2\t4"
        assert len(lines) == 1 + 2 * 2

    def test_skipped_cell(self, capsys):
        main(["benchmark", "--d", "8", "--n", "100", "--trials", "2"])
        out = capsys.readouterr().out
        assert "\t-" in out and "skipped d=8 n=100" in out

    def test_deterministic(self, capsys):
        args = ["benchmark", "--d", "3", "--n", "500", "--trials", "10", "--seed", "9", "--no-timings",
                "--format", "table"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first

    def test_noise_sweep(self, capsys):
        main(["benchmark", "--d", "4", "--n", "1000", "--trials", "5", "--noise", "0.1,0.2,0.5"])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "p_e\tER_o\tER_s\tdiscarded" and len(lines) == 4

    def test_sweep_needs_single_cell(self):
        assert main(["benchmark", "--d", "2,4", "--noise", "0.2"]) == 2


class TestSkewCheck:
    def test_statuses(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        n = 10_000
        X = np.column_stack([
            np.zeros(n, dtype=int),
            np.tile([0, 1], n // 2),
            (rng.random(n) < 0.2).astype(int),
            (rng.random(n) < 0.05).astype(int),
        ])
        path = tmp_path / "s.csv"
        _write_csv(path, ["zero", "half", "p20", "p05"], X)
        assert main(["skew-check", str(path)]) == 0
        out = capsys.readouterr().out
        rows = {ln.split("\t")[0]: ln.split("\t") for ln in out.splitlines()[1:] if "\t" in ln}
        assert rows["zero"][2] == "degenerate"
        assert rows["half"][2] == "inconclusive"
        assert rows["p20"][2] == "skewed" and abs(float(rows["p20"][1]) - 0.2) < 0.012
        assert "note: p05" in out
