import csv
import json
from statistics import fmean

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mapfkc.bench import (BenchmarkConfig, CSV_FIELDS, aggregate, run_benchmark, worker_count)
from mapfkc.cli import main
from mapfkc.estimator import PrioritizedSIPP, check_instance
from mapfkc.grid import (AgentTask, GridMap, Heading, Instance, InstanceError, generate_instance,
                         preset_map, scenario_to_dict, serialize_map)


@pytest.fixture
def map1_files(tmp_path):
    rc = main(["genmap", "--preset", "map1", "--agents", "6", "--seed", "3",
               "--out-map", str(tmp_path / "m.map"), "--out-scen", str(tmp_path / "s.json")])
    assert rc == 0
    return tmp_path / "m.map", tmp_path / "s.json"


def test_genmap_deterministic(tmp_path, map1_files):
    m, s = map1_files
    main(["genmap", "--preset", "map1", "--agents", "6", "--seed", "3",
          "--out-map", str(tmp_path / "m2.map"), "--out-scen", str(tmp_path / "s2.json")])
    assert (tmp_path / "m2.map").read_text() == m.read_text()
    assert (tmp_path / "s2.json").read_text() == s.read_text()
    lines = m.read_text().splitlines()
    assert lines[1] == "height 24" and lines[2] == "width 46"


def test_genmap_bad_spacing(tmp_path, capsys):
    rc = main(["genmap", "--preset", "map1", "--gap-x", "40", "--out-map", str(tmp_path / "x.map"),
               "--out-scen", str(tmp_path / "x.json")])
    assert rc == 1
    assert not (tmp_path / "x.map").exists()
    assert main(["genmap", "--preset", "nope"]) == 1


def test_solve_and_validate(tmp_path, map1_files, capsys):
    m, s = map1_files
    out = tmp_path / "plan.json"
    dump = tmp_path / "res.json"
    rc = main(["solve", "--map", str(m), "--scen", str(s), "--step", "0.5", "--heuristic", "h2",
               "--out", str(out), "--dump-reservations", str(dump)])
    assert rc == 0 and out.exists()
    tables = json.loads(dump.read_text())
    assert len(tables) == 6
    assert main(["validate", str(out), str(m), str(s)]) == 0
    assert "no violations" in capsys.readouterr().out
    # break the plan: move the first agent's first move one cell over
    data = json.loads(out.read_text())
    agent = next(a for a in data["agents"] if any(x["type"] == "move" for x in a["actions"]))
    mv = next(x for x in agent["actions"] if x["type"] == "move")
    mv["from"] = [mv["from"][0], mv["from"][1] + 2]
    out.write_text(json.dumps(data))
    assert main(["validate", str(out), str(m), str(s)]) == 2
    assert "teleport" in capsys.readouterr().err


def test_solve_input_errors(tmp_path, map1_files, capsys):
    m, s = map1_files
    assert main(["solve", "--map", str(tmp_path / "missing.map"), "--scen", str(s)]) == 1
    assert main(["solve", "--map", str(m)]) == 1
    assert main(["solve", "--map", str(m), "--scen", str(s), "--heuristic", "h9"]) == 1
    assert main(["solve", "--map", str(m), "--scen", str(s), "--step", "-1"]) == 1
    assert main(["validate", str(tmp_path / "nope.json"), str(m), str(s)]) == 1


def test_solve_not_well_formed(tmp_path, capsys):
    # a one-row corridor: each agent's goal sits behind the other's start
    g = GridMap(5, 1, frozenset())
    (tmp_path / "c.map").write_text(serialize_map(g))
    agents = [AgentTask(0, (0, 0), Heading.E, (4, 0)), AgentTask(1, (2, 0), Heading.W, (1, 0))]
    (tmp_path / "c.json").write_text(json.dumps(scenario_to_dict(agents)))
    args = ["solve", "--map", str(tmp_path / "c.map"), "--scen", str(tmp_path / "c.json")]
    assert main(args) == 1
    assert "well-formed" in capsys.readouterr().err
    # forced, prioritized planning cannot get agent 0 past agent 1's goal
    assert main(args + ["--force", "--out", str(tmp_path / "p.json"), "--timeout", "5"]) == 2


def test_solve_config_precedence(tmp_path, map1_files):
    m, s = map1_files
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"map": str(m), "scen": str(s), "step": 1.0, "heuristic": "h3"}))
    out = tmp_path / "p.json"
    assert main(["solve", "--config", str(conf), "--step", "0.25", "--out", str(out)]) == 0
    params = json.loads(out.read_text())["params"]
    assert params["speed_step"] == 0.25
    conf.write_text(json.dumps({"map": str(m), "bogus": 1}))
    assert main(["solve", "--config", str(conf), "--scen", str(s)]) == 1


def test_fixed_speed_solve(tmp_path, map1_files):
    m, s = map1_files
    out = tmp_path / "p.json"
    assert main(["solve", "--map", str(m), "--scen", str(s), "--fixed-speed", "2", "--out", str(out)]) == 0
    assert main(["validate", str(out), str(m), str(s)]) == 0


def test_bench_rows_and_aggregates(tmp_path, capsys):
    out = tmp_path / "metrics.csv"
    conf = tmp_path / "b.json"
    conf.write_text(json.dumps({"agents": 5, "steps": [0.5, 1.0], "heuristics": ["h1", "h2"]}))
    rc = main(["bench", "--config", str(conf), "--seeds", "0-1", "--fixed-speeds", "2",
               "--validate", "--out", str(out)])
    assert rc == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert len(rows) == 2 * 2 * 2 + 2
    with open(tmp_path / "metrics_agg.csv") as f:
        agg = list(csv.DictReader(f))
    for a in agg:
        rs = [r for r in rows if r["heuristic"] == a["heuristic"] and float(r["step"]) == float(a["step"])]
        assert int(a["runs"]) == len(rs)
        ok = [r for r in rs if r["success"] == "True"]
        assert float(a["sum_of_costs"]) == pytest.approx(fmean(float(r["sum_of_costs"]) for r in ok))
        assert float(a["expansions"]) == pytest.approx(fmean(int(r["expansions"]) for r in rs))
    assert main(["bench", "--seeds", "0", "--steps", "", "--out", str(out)]) == 1


def test_bench_single_row_and_reproducible():
    cfg = BenchmarkConfig(agents=4, seeds=[7], steps=[0.5], heuristics=["h2"])
    a = [r.row for r in run_benchmark(cfg, workers=1)]
    b = [r.row for r in run_benchmark(cfg, workers=1)]
    assert len(a) == 1
    strip = lambda rows: [(r.instance_id, r.success, r.sum_of_costs, r.makespan, r.expansions, r.generated)
                          for r in rows]
    assert strip(a) == strip(b)
    assert aggregate(a)[0]["sum_of_costs"] == a[0].sum_of_costs


def test_bench_pool_matches_serial():
    cfg = BenchmarkConfig(agents=4, seeds=[1, 2], steps=[1.0], heuristics=["h2", "h3"])
    serial = [(r.row.seed, r.row.heuristic, r.row.sum_of_costs) for r in run_benchmark(cfg, workers=1)]
    pooled = [(r.row.seed, r.row.heuristic, r.row.sum_of_costs) for r in run_benchmark(cfg, workers=2)]
    assert serial == pooled


def test_worker_env(monkeypatch):
    monkeypatch.delenv("MAPFKC_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("MAPFKC_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("MAPFKC_WORKERS", "x")
    with pytest.raises(ValueError):
        worker_count()


def test_config_validation():
    with pytest.raises(ValueError):
        BenchmarkConfig(timeout=0)
    with pytest.raises(ValueError):
        BenchmarkConfig(heuristics=[])
    with pytest.raises(ValueError):
        BenchmarkConfig.from_dict({"maps": "map1"})


def test_estimator_api():
    est = PrioritizedSIPP(speed_step=1.0, heuristic="h3")
    assert est.get_params()["speed_step"] == 1.0
    c = clone(est).set_params(speed_step=0.25)
    assert c.speed_step == 0.25 and est.speed_step == 1.0
    g = preset_map("map1")
    inst = generate_instance(g, 5, 0)
    with pytest.raises(NotFittedError):
        est.predict(inst)
    sol = est.fit(g).predict(inst)
    assert sol.success and len(sol.paths) == 5
    assert est.fit_predict(inst).sum_of_costs == sol.sum_of_costs
    with pytest.raises(ValueError):
        PrioritizedSIPP(heuristic="h4").fit(g)
    with pytest.raises(InstanceError):
        est.predict(generate_instance(preset_map("map2"), 3, 0))


def test_check_instance():
    g = GridMap(5, 1, frozenset())
    bad = Instance(g, [AgentTask(0, (0, 0), Heading.E, (4, 0)), AgentTask(1, (2, 0), Heading.W, (1, 0))])
    with pytest.raises(InstanceError, match="agent 0"):
        check_instance(bad)
    assert check_instance(bad, force=True) is bad
    with pytest.raises(TypeError):
        check_instance("not an instance")
