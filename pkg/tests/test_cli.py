import json
import subprocess
import sys

import numpy as np
import pytest

from inertia import analysis, cli, games
from inertia.errors import ConfigError
from inertia.integrator import Termination, TerminationKind
from inertia.kernels import log_barrier, riemannian_norm


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_escape_to_files(tmp_path, capsys):
    csv_path, summary_path = tmp_path / "run.csv", tmp_path / "run.json"
    code, out, _ = run(capsys, "simulate", "--game", "zero2", "--kernel", "shahshahani",
                       "--x0", "0.5,0.5", "--v0", "0.5,-0.5", "--t-end", "5",
                       "--out", str(csv_path), "--summary", str(summary_path))
    assert code == cli.EXIT_OK and out == ""
    summary = json.loads(summary_path.read_text())
    assert summary["termination"] == "BoundaryEscape"
    # xi0 = sqrt(2) and xdot_1 = v0 xi0 / 2, so v0 = 1 / sqrt(2)
    expected = analysis.shahshahani_exit_time(np.sqrt(2), 1 / np.sqrt(2))
    assert expected == pytest.approx(np.pi / 2)
    assert summary["t_star"] == pytest.approx(expected, abs=1e-4)
    assert summary["exit_coordinate"] == [0, 1]
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,x_1_0,x_1_1,v_1_0,v_1_1,E,K"
    assert lines[-1].startswith("# termination=BoundaryEscape")


def test_simulate_streams(capsys):
    code, out, err = run(capsys, "simulate", "--game", "prisoners_dilemma", "--friction", "1",
                         "--t-end", "1", "--v0", "zero")
    assert code == 0
    assert out.startswith("t,x_1_0,x_1_1,x_2_0,x_2_1")
    assert json.loads(err)["termination"] == "Completed"


def test_simulate_summary_on_stdout_when_csv_goes_to_file(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--game", "zero2", "--t-end", "1",
                       "--out", str(tmp_path / "a.csv"))
    assert code == 0 and json.loads(out)["final_state"]["t"] == 1.0


def test_simulate_is_deterministic(tmp_path, capsys):
    outputs = []
    for i in range(2):
        csv_path, js = tmp_path / f"r{i}.csv", tmp_path / f"r{i}.json"
        code, _, _ = run(capsys, "simulate", "--game", "coordination_2x2", "--friction", "0.5",
                         "--x0", "random", "--v0", "random:0.2", "--seed", "11", "--t-end", "20",
                         "--out", str(csv_path), "--summary", str(js))
        assert code == 0
        outputs.append((csv_path.read_bytes(), js.read_bytes()))
    assert outputs[0] == outputs[1]


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = {"game": "zero2", "kernels": ["log-barrier"], "x0": [0.3, 0.7], "v0": "zero",
           "integrator": {"t_end": 50.0, "sample_interval": 10.0}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, err = run(capsys, "simulate", "--config", str(path), "--t-end", "2")
    assert code == 0
    assert json.loads(err)["final_state"]["t"] == 2.0


@pytest.mark.parametrize("cfg", [
    {"game": "zero2", "colour": "red"},
    {"game": "zero2", "integrator": {"dt": 0.1}},
    {"game": "zero2", "integrator": {"rel_tol": -1}},
    {"game": "zero2", "kernels": ["nope"]},
    {"game": "zero2", "x0": [0.4, 0.4]},
    {"kernels": ["log-barrier"]},
])
def test_bad_configs_exit_one(tmp_path, capsys, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "simulate", "--config", str(path))
    assert code == cli.EXIT_CONFIG and err


def test_malformed_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text("{game: zero2")
    assert run(capsys, "simulate", "--config", str(path))[0] == cli.EXIT_CONFIG
    assert run(capsys, "simulate", "--config", str(tmp_path / "absent.json"))[0] == cli.EXIT_CONFIG


def test_field_error_exit_code(monkeypatch, capsys):
    real = cli.integrate

    def failing(spec, state, config):
        rec = real(spec, state, config)
        return rec.__class__(**{**rec.__dict__,
                                "termination": Termination(TerminationKind.FIELD_ERROR, None, None, "boom")})

    monkeypatch.setattr(cli, "integrate", failing)
    code, _, err = run(capsys, "simulate", "--game", "zero2", "--t-end", "1")
    assert code == cli.EXIT_FIELD and "boom" in err


def test_near_vertex_helper():
    g = games.named_game("prisoners_dilemma")
    x = cli.parse_position("near:D,D:0.01", g.action_counts, g.names)
    assert np.allclose(x[0], [0.01, 0.99]) and np.allclose(x[1], [0.01, 0.99])
    y = cli.parse_position("near:0:0.2", (3,))
    assert np.allclose(y[0], [0.8, 0.1, 0.1])
    for bad in ("near:0:1.5", "near:0", "near:5:0.1", "near:X:0.1"):
        with pytest.raises(ConfigError):
            cli.parse_position(bad, (3,))


def test_velocity_helpers_hit_requested_speed():
    x = [np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.4])]
    K = (log_barrier(), log_barrier())
    for spec in ("speed:0.3", "random:0.3"):
        v = cli.parse_velocity(spec, x, K, seed=2)
        total = np.sqrt(sum(riemannian_norm(k, p, d) ** 2 for k, p, d in zip(K, x, v)))
        assert total == pytest.approx(0.3)
        assert all(abs(d.sum()) < 1e-15 for d in v)
    assert all(np.all(d == 0) for d in cli.parse_velocity("zero", x, K))
    with pytest.raises(ConfigError):
        cli.parse_velocity("speed:fast", x, K)


def test_figure_written(tmp_path, capsys):
    png = tmp_path / "fig.png"
    code, _, _ = run(capsys, "simulate", "--game", "coordination_2x2", "--friction", "1",
                     "--t-end", "5", "--out", str(tmp_path / "r.csv"), "--figure", str(png))
    assert code == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_check_wellposed(capsys):
    code, out, _ = run(capsys, "check-wellposed", "log-barrier")
    assert code == 0 and out.splitlines()[0] == "WellPosed"
    assert "integral=" in out
    code, out, _ = run(capsys, "check-wellposed", "shahshahani")
    assert code == 0 and out.splitlines()[0] == "IllPosed"
    code, _, err = run(capsys, "check-wellposed", "bogus")
    assert code == cli.EXIT_CONFIG and err


def test_equilibria(capsys):
    code, out, _ = run(capsys, "equilibria", "prisoners_dilemma", "--candidate", "0,1;0,1",
                       "--candidate", "1,0;1,0")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "strict: [(D,D)]"
    assert lines[1].startswith("potential: true")
    assert lines[2].endswith("nash=yes restricted=yes")
    assert lines[3].endswith("nash=no restricted=yes")
    code, out, _ = run(capsys, "equilibria", "matching_pennies")
    assert "strict: []" in out and "potential: false" in out
    assert run(capsys, "equilibria", "prisoners_dilemma", "--candidate", "1,0")[0] == cli.EXIT_CONFIG


def test_suite_exit_codes(tmp_path, capsys):
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps({"batteries": [{"type": "first-integral"}]}))
    report = tmp_path / "report.json"
    assert run(capsys, "suite", str(ok), "--out", str(report))[0] == cli.EXIT_OK
    data = json.loads(report.read_text())
    assert data[0]["passed"] is True and set(data[0]) == {"name", "passed", "metric", "threshold"}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"batteries": [{"type": "first-integral", "threshold": 0.0}]}))
    code, _, err = run(capsys, "suite", str(bad))
    assert code == cli.EXIT_CHECKS and "FAILED" in err
    assert run(capsys, "suite", "no-such-suite")[0] == cli.EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "inertia", "check-wellposed", "power:3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("WellPosed")
