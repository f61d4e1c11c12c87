import json

import numpy as np
import pytest

from sedpce import io, uq
from sedpce.cli import main
from sedpce.errors import InvariantViolation, ParseError, SchemaError
from sedpce.synthetic import multimodal_wind


@pytest.fixture
def scenario_file(tmp_path, five_bus):
    path = tmp_path / "wind.csv"
    io.save_scenarios(multimodal_wind(60, seed=3), path, five_bus.wind_labels)
    return path


def test_fixture_counts(five_bus):
    assert (len(five_bus.buses), len(five_bus.lines), len(five_bus.generators), len(five_bus.wind_farms)) == (5, 6, 3, 2)
    assert five_bus.periods == 4 and five_bus.n_wind == 8


def test_system_round_trip(tmp_path, five_bus):
    io.save_system(five_bus, tmp_path / "s.json")
    assert io.load_system(tmp_path / "s.json") == five_bus


def test_negative_wind_names_row_and_column(tmp_path, five_bus):
    data = multimodal_wind(4, seed=0)
    data[2, 5] = -1.0
    io.save_scenarios(data, tmp_path / "bad.csv", five_bus.wind_labels)
    with pytest.raises(InvariantViolation, match=r"row 3 .*w2_t2"):
        io.load_scenarios(tmp_path / "bad.csv", five_bus)


def test_loader_errors(tmp_path, five_bus):
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(ParseError):
        io.load_system(tmp_path / "broken.json")
    doc = io.system_to_dict(five_bus)
    doc["lines"][0]["reactance"] = "x"
    (tmp_path / "schema.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match=r"lines\[0\]\.reactance"):
        io.load_system(tmp_path / "schema.json")
    doc["lines"][0]["reactance"] = -1.0
    (tmp_path / "inv.json").write_text(json.dumps(doc))
    with pytest.raises(InvariantViolation):
        io.load_system(tmp_path / "inv.json")
    (tmp_path / "hdr.csv").write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        io.load_scenarios(tmp_path / "hdr.csv", five_bus)


def test_model_and_report_round_trip(tmp_path):
    data = multimodal_wind(300, seed=2)
    model = uq.fit_surrogate(data[:80], data[:80].sum(1), reference_x=data)
    io.save_model(model, tmp_path / "m.json")
    back = io.load_model(tmp_path / "m.json")
    assert np.array_equal(back.coefficients, model.coefficients)
    from sedpce.surrogate import predict

    assert np.array_equal(predict(back, data), predict(model, data))
    report, _ = uq.surrogate_report(model, data)
    io.save_report(report, tmp_path / "r.json")
    r2 = io.load_report(tmp_path / "r.json")
    assert r2.mean == report.mean and r2.analytic == report.analytic


class TestCli:
    def run(self, *argv):
        return main([str(a) for a in argv])

    def test_ptdf(self, tmp_path):
        assert self.run("ptdf", "--system", io.bundled("five_bus.json"), "--out", tmp_path / "p.json") == 0
        doc = json.loads((tmp_path / "p.json").read_text())
        assert len(doc["matrix"]) == 6 and "provenance" in doc

    def test_solve(self, tmp_path, scenario_file):
        code = self.run("solve", "--system", io.bundled("five_bus.json"), "--scenarios", scenario_file,
                        "--row", 2, "--out", tmp_path / "s.json", "--dump-lp", tmp_path / "lp.txt")
        assert code == 0
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["status"] == "optimal" and doc["cost"] > 0 and "provenance" in doc
        assert (tmp_path / "lp.txt").read_text().startswith("minimize")

    def test_mc_rerun_identical(self, tmp_path, scenario_file):
        outs, costs = [], []
        out, cost_file = tmp_path / "r.json", tmp_path / "c.csv"
        for _ in range(2):
            assert self.run("mc", "--seed", 7, "--system", io.bundled("five_bus.json"), "--scenarios", scenario_file,
                            "--sample", 40, "--out", out, "--costs", cost_file) == 0
            outs.append(out.read_bytes())
            costs.append(cost_file.read_bytes())
        assert outs[0] == outs[1] and costs[0] == costs[1]
        doc = json.loads(outs[0])
        assert doc["provenance"]["seed"] == 7 and doc["wall_seconds"] is None
        assert uq.UqReport.from_dict(doc).check() == []

    def test_stats_and_compare(self, tmp_path, scenario_file, capsys):
        self.run("mc", "--system", io.bundled("five_bus.json"), "--scenarios", scenario_file,
                 "--costs", tmp_path / "c.csv", "--out", tmp_path / "mc.json")
        assert self.run("stats", "--costs", tmp_path / "c.csv", "--out", tmp_path / "st.json") == 0
        assert self.run("compare", tmp_path / "mc.json", tmp_path / "st.json", "--out", tmp_path / "cmp.json") == 0
        doc = json.loads((tmp_path / "cmp.json").read_text())
        assert doc["mean_error_pct"] == 0 and doc["std_error_pct"] == 0 and doc["ks_distance"] == 0
        assert "provenance" in doc

    def test_fit_predict_planted(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 100, (120, 4))
        y = 500 + x @ [2.0, -1.0, 0.5, 3.0] + 0.01 * x[:, 0] * x[:, 1] - 0.02 * x[:, 3] ** 2
        labels = [f"w{i}_t1" for i in range(4)]
        io.save_scenarios(x, tmp_path / "x.csv", labels)
        with open(tmp_path / "y.csv", "w") as fh:
            fh.write("row,cost\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(y)))
        assert self.run("fit", "--scenarios", tmp_path / "x.csv", "--costs", tmp_path / "y.csv",
                        "--out", tmp_path / "m.json") == 0
        assert "provenance" in json.loads((tmp_path / "m.json").read_text())
        assert self.run("predict", "--model", tmp_path / "m.json", "--scenarios", tmp_path / "x.csv",
                        "--out", tmp_path / "p.csv") == 0
        pred = io.read_column(tmp_path / "p.csv", "cost")
        assert np.max(np.abs(pred - y)) <= 1e-6

    def test_fit_from_system(self, tmp_path, scenario_file):
        assert self.run("fit", "--system", io.bundled("five_bus.json"), "--scenarios", scenario_file,
                        "--n-train", 30, "--degrees", 1, 2, "--seed", 3, "--out", tmp_path / "m.json") == 0
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["provenance"]["seed"] == 3 and len(doc["provenance"]["train_rows"]) == 30

    def test_config_file(self, tmp_path, scenario_file):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"system": str(io.bundled("five_bus.json")), "seed": 5}))
        assert self.run("ptdf", "--config", cfg, "--out", tmp_path / "p.json") == 0
        assert json.loads((tmp_path / "p.json").read_text())["provenance"]["seed"] == 5

    def test_error_exit(self, tmp_path, five_bus, capsys):
        data = multimodal_wind(3, seed=0)
        data[0, 0] = -5
        io.save_scenarios(data, tmp_path / "bad.csv", five_bus.wind_labels)
        code = self.run("solve", "--system", io.bundled("five_bus.json"), "--scenarios", tmp_path / "bad.csv")
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("error: InvariantViolation:") and err.count("\n") == 1

    def test_missing_file_exit(self, capsys):
        assert self.run("ptdf", "--system", "/nonexistent.json") != 0
        assert capsys.readouterr().err.startswith("error:")
