import json
import subprocess
import sys

import numpy as np
import pytest

from econsel.cli import main


def write_panel(path, n_per_wave=40, waves=4, p=4, seed=0, with_wave=True):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(1, waves + 1):
        X = rng.standard_normal((n_per_wave, p))
        y = 1.5 * X[:, 0] - 0.8 * X[:, 1] + 0.3 * t * X[:, p - 1] + rng.standard_normal(n_per_wave)
        for i in range(n_per_wave):
            rows.append([y[i], *X[i], t])
    header = ["y"] + [f"x{j + 1}" for j in range(p)] + (["wave"] if with_wave else [])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            vals = r if with_wave else r[:-1]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def write_config(path, data="panel.csv", wave=True, **sections):
    text = [
        "[data]",
        f"path = {data}",
        "response = y",
        "predictors = x1,x2,x3,x4",
    ]
    if wave:
        text.append("wave = wave")
    text += ["[cv]", "folds = 5", "seed = 3"]
    for name, body in sections.items():
        text.append(f"[{name}]")
        text += [f"{k} = {v}" for k, v in body.items()]
    path.write_text("\n".join(text) + "\n")
    return path


@pytest.fixture
def workdir(tmp_path):
    write_panel(tmp_path / "panel.csv")
    return tmp_path


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


class TestAnalyze:
    def test_outputs(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini")
        code, out, err = run(["analyze", "--config", cfg, "--out", workdir / "out"], capsys)
        assert code == 0, err
        for name in ("selection_map.svg", "selection_map_top128.svg", "results.json"):
            assert (workdir / "out" / name).stat().st_size > 0
        doc = json.loads((workdir / "out" / "results.json").read_text())
        assert doc["schema_version"] == 1
        assert len(doc["sets"]) == 16
        best = doc["sets"][0]
        assert doc["optimum"]["bits"] == best["bits"]
        assert out.startswith("optimum: {" + ", ".join(best["members"]) + "}")

    def test_cost_changes_optimum(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini", cost={"kind": "uniform", "price": 100})
        code, out, _ = run(["analyze", "--config", cfg, "--out", workdir / "o"], capsys)
        assert code == 0
        assert out.startswith("optimum: {}")
        assert json.loads((workdir / "o" / "results.json").read_text())["optimum"]["bits"] == 0

    def test_deterministic(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini")
        for o in ("a", "b"):
            assert run(["analyze", "--config", cfg, "--out", workdir / o, "--threads", 2], capsys)[0] == 0
        for name in ("selection_map.svg", "selection_map_top128.svg", "results.json"):
            assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()

    def test_seed_flag_overrides(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini")
        run(["analyze", "--config", cfg, "--out", workdir / "a"], capsys)
        run(["analyze", "--config", cfg, "--out", workdir / "b", "--seed", 99], capsys)
        a = json.loads((workdir / "a" / "results.json").read_text())
        b = json.loads((workdir / "b" / "results.json").read_text())
        assert a["sets"][0]["loss"] != b["sets"][0]["loss"]

    def test_missing_data(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "run.ini", data="absent.csv")
        code, _, err = run(["analyze", "--config", cfg], capsys)
        assert code == 2
        assert err.startswith("error: E_DATA: ")
        assert len(err.strip().splitlines()) == 1

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(["analyze", "--config", tmp_path / "none.ini"], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")

    def test_bad_column(self, workdir, capsys):
        cfg = workdir / "run.ini"
        write_config(cfg)
        cfg.write_text(cfg.read_text().replace("x1,x2,x3,x4", "x1,x2,x3,x9"))
        code, _, err = run(["analyze", "--config", cfg], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")
        assert "x9" in err

    def test_non_numeric_cell(self, workdir, capsys):
        lines = (workdir / "panel.csv").read_text().splitlines()
        cells = lines[3].split(",")
        cells[2] = "abc"
        lines[3] = ",".join(cells)
        (workdir / "panel.csv").write_text("\n".join(lines) + "\n")
        cfg = write_config(workdir / "run.ini")
        code, _, err = run(["analyze", "--config", cfg], capsys)
        assert code == 3
        assert err.startswith("error: E_DATA: ")
        assert "abc" in err

    def test_too_few_folds(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini")
        code, _, err = run(["analyze", "--config", cfg, "--folds", 1], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")


class TestSweep:
    def test_descending_grid(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini", sweep={"grid": "0.2, 0.1"})
        code, _, err = run(["sweep", "--config", cfg], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")

    def test_single_price(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini", sweep={"grid": "0.05"})
        code, out, _ = run(["sweep", "--config", cfg, "--out", workdir / "s"], capsys)
        assert code == 0
        doc = json.loads((workdir / "s" / "sweep.json").read_text())
        assert len(doc["sweep"]) == 1
        svg = (workdir / "s" / "cost_sweep.svg").read_text()
        assert 'id="col-0"' in svg and 'id="col-1"' not in svg

    def test_sizes_shrink(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini", sweep={"grid": "0, 0.01, 0.1, 1, 10"})
        assert run(["sweep", "--config", cfg, "--out", workdir / "s"], capsys)[0] == 0
        doc = json.loads((workdir / "s" / "sweep.json").read_text())
        sizes = [len(e["optimum"]["members"]) for e in doc["sweep"]]
        assert sizes == sorted(sizes, reverse=True)
        assert sizes[-1] == 0

    def test_itemized_with_free_set(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini", cost={"kind": "itemized", "free": "x1,x2"},
                           sweep={"grid": "0, 100"})
        assert run(["sweep", "--config", cfg, "--out", workdir / "s"], capsys)[0] == 0
        doc = json.loads((workdir / "s" / "sweep.json").read_text())
        # at a prohibitive price only free predictors survive
        assert set(doc["sweep"][1]["optimum"]["members"]) <= {"x1", "x2"}


class TestTimed:
    def test_free_purchase_is_immediate(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini",
                           timed={"target": "x4", "deltas": "0", "prices": "0"})
        code, out, err = run(["timed", "--config", cfg, "--out", workdir / "t"], capsys)
        assert code == 0, err
        doc = json.loads((workdir / "t" / "timed.json").read_text())
        assert doc["timed"][0]["optimal_wave"] == 1
        assert [w["wave"] for w in doc["waves"]] == [1, 2, 3, 4]
        for w in doc["waves"]:
            assert w["l_star"] <= w["l"]
            assert "x4" not in w["without"]["members"]
        for name in ("wave_selections.svg", "timing_curves.svg"):
            assert (workdir / "t" / name).exists()

    def test_huge_price(self, workdir, capsys):
        cfg = write_config(workdir / "run.ini",
                           timed={"target": "x4", "deltas": "0, 0.1", "prices": "1e6"})
        code, out, _ = run(["timed", "--config", cfg, "--out", workdir / "t"], capsys)
        assert code == 0
        doc = json.loads((workdir / "t" / "timed.json").read_text())
        assert all(d["optimal_wave"] == "no_purchase" for d in doc["timed"])
        assert "no_purchase" in out

    def test_missing_wave_column(self, tmp_path, capsys):
        write_panel(tmp_path / "panel.csv", with_wave=False)
        cfg = write_config(tmp_path / "run.ini", wave=False, timed={"target": "x4"})
        code, _, err = run(["timed", "--config", cfg], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")


class TestCheck:
    def test_defaults_pass(self, tmp_path, capsys):
        cfg = tmp_path / "check.ini"
        cfg.write_text("[check]\n")
        code, out, _ = run(["check", "--config", cfg], capsys)
        assert code == 0
        assert "all checks passed" in out

    def test_small_n(self, tmp_path, capsys):
        cfg = tmp_path / "check.ini"
        cfg.write_text("[check]\nn = 6\n")
        code, _, err = run(["check", "--config", cfg], capsys)
        assert code == 2
        assert err.startswith("error: E_CONFIG: ")


class TestArguments:
    def test_positional_config(self, tmp_path, capsys):
        cfg = tmp_path / "check.ini"
        cfg.write_text("[check]\nseeds = 2\nquadrature_cases = 2\n")
        assert run(["check", cfg], capsys)[0] == 0

    @pytest.mark.parametrize("extra", [[], ["--config", "b.ini"]])
    def test_config_exactly_once(self, extra, capsys):
        args = ["check"] + (["a.ini"] + extra if extra else [])
        with pytest.raises(SystemExit) as exc:
            main(args)
        assert exc.value.code == 2
        assert "exactly once" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "check.ini"
    cfg.write_text("[check]\nseeds = 3\nquadrature_cases = 2\n")
    res = subprocess.run([sys.executable, "-m", "econsel", "check", "--config", str(cfg)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
