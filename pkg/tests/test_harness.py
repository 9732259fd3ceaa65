import csv
import io
import json
import statistics

import pytest

from qdrone import __version__
from qdrone.cli import main
from qdrone.harness.config import ConfigError
from qdrone.harness.plans import build_plan, load_plan, loads_plan, run_plan
from qdrone.harness.scenario import BUILTIN_SCENARIOS, load_scenario, loads_scenario
from qdrone.harness.session import aggregate, report_from_dict, run_chsh_session, run_trial
from qdrone.harness.sweeps import BUILTIN_SWEEPS, load_sweep, loads_sweep, run_linkbudget
from qdrone.network import PlanInfeasibleError


def _small(name, trials=3, seed=None):
    return load_scenario(name).with_overrides(seed=seed, trials=trials)


def test_lab_scenario_loads():
    lab = load_scenario("lab")
    assert lab.source.v_src == 0.974
    assert lab.source.pair_rate == 2.4e6
    for station in ("alice", "bob"):
        link = lab.link(station)
        assert link.distance == 0 and link.static_db == 0 and link.apt_preset is None


@pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
def test_builtins_load_and_round_trip(name):
    scen = load_scenario(name)
    again = loads_scenario(scen.dumps())
    assert again == scen
    assert again.dumps() == scen.dumps()
    assert scen.trials >= 1


def test_empty_file_is_parse_error():
    with pytest.raises(ConfigError, match="parse error at line 1"):
        loads_scenario("")


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        loads_scenario("[scenario]\nname = x\nthis line has no separator\n")


def test_unknown_key_named():
    text = load_scenario("lab").dumps().replace("window =", "windw =")
    with pytest.raises(ConfigError, match="windw"):
        loads_scenario(text)


def test_validation_errors_name_field():
    base = load_scenario("field-day").dumps()
    with pytest.raises(ConfigError, match="apt_preset"):
        loads_scenario(base.replace("apt_preset = flight", "apt_preset = hover", 1))
    with pytest.raises(ConfigError, match="trials"):
        loads_scenario(base.replace("trials = 200", "trials = 0"))
    with pytest.raises(ConfigError, match="condition"):
        loads_scenario(base.replace("condition = clear_day", "condition = fog", 1))


def test_lock_loss_is_flagged_not_raised():
    text = load_scenario("field-day").dumps().replace("distance = 100.0", "distance = 0.5", 1)
    report = run_chsh_session(loads_scenario(text).with_overrides(trials=2))
    assert all(not r["ok"] and "alice" in r["failure"] for r in report.rows)
    assert report.summary["failed_trials"] == 2


def test_session_deterministic_and_parallel_invariant():
    scen = _small("field-rainy-night", trials=2)
    a = run_chsh_session(scen).to_json()
    assert run_chsh_session(scen).to_json() == a
    assert run_chsh_session(scen, workers=2).to_json() == a
    assert run_chsh_session(scen.with_overrides(seed=999)).to_json() != a


def test_trial_rows_independent_of_trial_count():
    short = run_chsh_session(_small("field-clear-night", trials=2))
    long = run_chsh_session(_small("field-clear-night", trials=3))
    assert long.rows[:2] == short.rows


def test_report_aggregate_recomputable():
    report = run_chsh_session(_small("field-day", trials=4))
    data = json.loads(report.to_json())
    abs_s = [r["abs_S"] for r in data["trials"]]
    assert data["summary"]["mean_abs_S"] == pytest.approx(statistics.fmean(abs_s), abs=0, rel=1e-15)
    assert data["summary"]["std_abs_S"] == pytest.approx(statistics.stdev(abs_s))
    assert aggregate(data["trials"]) == data["summary"]
    for row in data["trials"]:
        assert row["abs_S"] == abs(row["S"])
        assert row["alice_total_db"] > 0 and row["alice_jitter_m"] > 0


def test_report_provenance_rerun():
    report = run_chsh_session(_small("lab", trials=3, seed=5))
    prov = report.provenance()
    assert prov["seed"] == 5 and prov["trials"] == 3 and prov["version"] == __version__
    assert len(prov["config_hash"]) == 64
    restored = report_from_dict(json.loads(report.to_json()))
    assert run_chsh_session(restored.scenario).to_json() == report.to_json()


def test_daytime_background_raises_accidentals():
    day = run_trial(load_scenario("field-day"), 0)
    for night in ("field-clear-night", "field-rainy-night"):
        assert day["accidental_rate"] > run_trial(load_scenario(night), 0)["accidental_rate"]
    # same coefficient on every field station
    coeffs = {load_scenario(n).link(s).background_per_lux for n in BUILTIN_SCENARIOS[1:4] for s in ("alice", "bob")}
    assert len(coeffs) == 1


def test_field_arm_totals():
    for name in ("field-day", "field-clear-night", "field-rainy-night"):
        rows = run_chsh_session(_small(name, trials=3)).rows
        for row in rows:
            assert abs(row["alice_total_db"] - 12) < 1
            assert abs(row["bob_total_db"] - 14) < 1


def test_linkbudget_tables():
    wide = run_linkbudget(load_sweep("wide-area"))
    rows = list(csv.reader(io.StringIO(wide)))
    assert rows[0] == ["distance_m", "loss_db"]
    lookup = {float(d): float(l) for d, l in rows[1:]}
    assert abs(lookup[100e3] - 2.79) <= 0.75
    local = [float(l) for _, l in list(csv.reader(io.StringIO(run_linkbudget(load_sweep("local-area")))))[1:]]
    assert all(b >= a for a, b in zip(local, local[1:]))
    ap = list(csv.reader(io.StringIO(run_linkbudget(load_sweep("aperture-100m")))))
    assert ap[0][0] == "aperture_m"
    losses = [float(l) for _, l in ap[1:]]
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert set(BUILTIN_SWEEPS) == {"wide-area", "local-area", "aperture-100m"}


def test_sweep_unknown_key():
    with pytest.raises(ConfigError, match="stepz"):
        loads_sweep("[sweep]\nkind = distance\naperture = 0.3\nstart = 1\nstop = 2\nnum = 3\nstepz = 3\n")


def test_local_plan_topology():
    plan = build_plan(load_plan("local-200m"))
    assert plan.mode == "distribution"
    assert len(plan.nodes) == 3 and plan.relay_count == 1
    assert [l.distance for l in plan.links] == [100.0, 100.0]
    assert plan.nodes[1].kind == "drone"
    assert plan.nodes[0].kind == plan.nodes[2].kind == "ground"


def test_trivial_and_hap_plans():
    assert build_plan(load_plan("local-100m")).relay_count == 0
    doc, lines = run_plan(load_plan("widearea-hap"))
    data = json.loads(doc)
    assert data["relay_count"] >= 1
    assert all(f["ok"] for f in data["feasibility"])
    assert len(lines) == len(data["links"]) + 1 + ("predicted" in data)


def test_plan_infeasible():
    text = "[plan]\ntotal_distance = 3e6\nper_link_max_db = 0.1\nk_max = 3\n\n[node]\naperture = 0.3\naltitude = 20000\n"
    with pytest.raises(PlanInfeasibleError):
        build_plan(loads_plan(text))


# ---- CLI -----------------------------------------------------------------

def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_chsh_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        code, _, _ = _run(["chsh", "field-day", "--trials", "2", "--seed", "3", "--out", str(path)], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    code, text, _ = _run(["chsh", "lab", "--trials", "2", "--format", "csv"], capsys)
    assert code == 0 and text.startswith("trial,ok,S,")


def test_cli_report_verify(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert _run(["chsh", "lab", "--trials", "3", "--out", str(path)], capsys)[0] == 0
    code, out, _ = _run(["report", str(path), "--verify"], capsys)
    assert code == 0 and "byte for byte" in out
    tampered = json.loads(path.read_text())
    tampered["summary"]["mean_abs_S"] += 0.1
    path.write_text(json.dumps(tampered, indent=2, sort_keys=True) + "\n")
    assert _run(["report", str(path)], capsys)[0] == 2


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("")
    assert _run(["chsh", str(bad)], capsys)[0] == 2
    assert _run(["chsh", "nonexistent-scenario"], capsys)[0] == 2
    assert _run(["apt", "hover"], capsys)[0] == 2
    infeasible = tmp_path / "plan.ini"
    infeasible.write_text("[plan]\ntotal_distance = 3e6\nper_link_max_db = 0.1\nk_max = 2\n[node]\naperture = 0.3\n")
    code, _, err = _run(["plan", str(infeasible)], capsys)
    assert code == 2 and "binding constraint" in err


def test_cli_divergence_exit_code(monkeypatch, capsys):
    from dataclasses import replace

    from qdrone import apt
    from qdrone.apt import PidGains

    unstable = replace(apt.PRESETS["ground"], coarse_gains=PidGains(kp=-5.0, ki=0.0))
    monkeypatch.setitem(apt.PRESETS, "unstable", unstable)
    assert _run(["apt", "unstable", "--duration", "3"], capsys)[0] == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["linkbudget", "wide-area"],
        ["linkbudget", "aperture-100m", "--format", "json"],
        ["apt", "flight", "--duration", "0.5", "--seed", "4"],
        ["apt", "ground", "--duration", "0.5", "--format", "json"],
        ["plan", "widearea-hap"],
        ["plan", "local-200m", "--format", "csv"],
    ],
)
def test_cli_outputs_deterministic(argv, capsys):
    first = _run(argv, capsys)
    second = _run(argv, capsys)
    assert first[0] == 0
    assert first == second
    assert first[1]
