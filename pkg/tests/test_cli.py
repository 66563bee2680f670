import csv
import json

import pytest

from bosemc.cli import SCAN_COLUMNS, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _payload(path):
    data = json.loads(path.read_text(encoding="utf-8"))
    data.pop("timing")
    return data


def test_optimize_record(tmp_path, capsys):
    out = tmp_path / "run.json"
    code, _, _ = _run(capsys, "optimize", "--particles", "20", "--modes", "3", "--time", "20",
                      "--trials", "10", "--seed", "7", "--out", str(out))
    assert code == 0
    rec = json.loads(out.read_text(encoding="utf-8"))
    assert rec["schema_version"] == 1
    cfg = rec["config"]
    assert (cfg["n_particles"], cfg["n_modes"], cfg["total_time"], cfg["n_trials"], cfg["seed"]) == \
        (20, 3, 20.0, 10, 7)
    res = rec["results"]
    assert res["best_qfi"] == max(res["all_qfi"]) and len(res["all_qfi"]) == 10
    assert res["delta_phi"] == pytest.approx(res["best_qfi"] ** -0.5)
    traj = rec["best_trajectory"]
    assert len(traj["hop_strengths"]) == cfg["n_steps"] and len(traj["detunings"][0]) == 3
    assert {"elapsed_seconds", "workers", "kernel_backend"} <= set(rec["timing"])


def test_optimize_is_deterministic(tmp_path, capsys):
    args = ["optimize", "-N", "8", "-L", "3", "-T", "5", "-v", "6", "--seed", "2"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(capsys, *args, "--workers", "1", "--out", str(a))[0] == 0
    assert _run(capsys, *args, "--workers", "4", "--out", str(b))[0] == 0
    assert _payload(a) == _payload(b)


def test_record_reproduces_from_config_echo(tmp_path, capsys):
    a = tmp_path / "a.json"
    _run(capsys, "optimize", "-N", "5", "-L", "4", "-T", "3", "-v", "3", "--seed", "11", "--out", str(a))
    cfg = json.loads(a.read_text())["config"]
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({
        "particles": cfg["n_particles"], "modes": cfg["n_modes"], "time": cfg["total_time"],
        "steps": cfg["n_steps"], "trials": cfg["n_trials"], "seed": cfg["seed"],
        "hop_range": cfg["hop_range"], "detuning_range": cfg["detuning_range"],
        "interaction_range": cfg["interaction_range"], "swap_parity": cfg["swap_parity"],
    }))
    b = tmp_path / "b.json"
    assert _run(capsys, "optimize", "-N", "1", "-L", "2", "--config", str(conf), "--out", str(b))[0] == 0
    assert _payload(a) == _payload(b)


def test_usage_errors(tmp_path, capsys):
    code, _, err = _run(capsys, "optimize", "-N", "4", "-L", "3", "--trials", "0")
    assert code == 2 and "trial" in err
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "-N", "4"])
    assert exc.value.code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": 1}')
    assert _run(capsys, "optimize", "-N", "4", "-L", "3", "--config", str(bad))[0] == 2


def test_capacity_exit_code(capsys):
    code, _, err = _run(capsys, "optimize", "-N", "300", "-L", "12", "-v", "1")
    assert code == 3 and "capacity" in err


def test_scan_csv(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    assert _run(capsys, "scan", "-N", "10:50:10", "-L", "3", "--out", str(out))[0] == 0
    with out.open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SCAN_COLUMNS == ["N", "L", "F_opt", "mu_exact", "sigma_exact", "sql", "hl", "delta_phi"]
    assert len(rows) == 6
    for row in rows[1:]:
        F, sql, dphi = float(row[2]), float(row[5]), float(row[7])
        assert F > sql and dphi == pytest.approx(F ** -0.5)


def test_scan_partial_failure(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code, _, _ = _run(capsys, "scan", "-N", "4,300", "-L", "12", "-v", "2", "--out", str(out))
    assert code == 5
    log = (tmp_path / "scan.csv.errors.log").read_text()
    assert "N=300" in log and "CapacityError" in log
    assert len(out.read_text().splitlines()) == 3


def test_time_scan(capsys):
    code, out, _ = _run(capsys, "time-scan", "-N", "6", "-L", "3", "--times", "0,2", "-v", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "T,N,L,F_opt,mu_exact,sigma_exact" and len(lines) == 3
    assert float(lines[1].split(",")[3]) == 0.0


def test_haar_stats(capsys):
    code, out, _ = _run(capsys, "haar-stats", "-N", "1", "-L", "2", "--samples", "4000", "--seed", "3")
    assert code == 0
    rep = json.loads(out)
    ex, sm = rep["exact"], rep["sampled"]
    assert ex["mean_exact"] == pytest.approx(2 / 3) and ex["variance_exact"] == pytest.approx(4 / 45)
    assert ex["variance_second_moment"] == pytest.approx(4 / 45)
    assert abs(sm["mean"] - ex["mean_exact"]) <= 5 * sm["mean_stderr"]
    assert abs(sm["variance"] - ex["variance_exact"]) <= 5 * sm["variance_stderr"]
    assert sm["tail_above_mu_minus_sigma"] >= 0.5 - 3 * sm["tail_stderr"]
    upper = rep["cantelli"][2]
    assert upper["F0"] == pytest.approx(ex["mean_exact"] + ex["std_exact"])
    assert upper["cantelli_upper"] == pytest.approx(0.5)


def test_haar_stats_deterministic(capsys):
    args = ["haar-stats", "-N", "2", "-L", "3", "--samples", "300", "--format", "csv"]
    assert _run(capsys, *args)[1] == _run(capsys, *args)[1]


def test_verify_quick_and_fault(capsys):
    code, out, _ = _run(capsys, "verify", "--quick")
    assert code == 0 and "all checks passed" in out
    code, out, _ = _run(capsys, "verify", "--quick", "--inject-fault")
    assert code == 4
    failed = {line.split()[1] for line in out.splitlines() if line.startswith("FAIL")}
    assert failed == {"block_tables", "dense_propagator"}


def test_max_dim_guard(capsys):
    code, _, err = _run(capsys, "optimize", "-N", "10", "-L", "3", "--max-dim", "50")
    assert code == 3 and "enumeration limit" in err
