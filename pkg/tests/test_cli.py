import json

from balnet.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_generate_writes_identical_files(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["generate", "--n", "20", "--p", "0.2", "--seed", "7", "--out", str(a)]) == 0
    assert main(["generate", "--n", "20", "--p", "0.2", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert data["n"] == 20


def test_usage_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "generate")  # --n missing
    assert code == 64
    code, _, _ = run_cli(capsys, "frobnicate")
    assert code == 64


def test_feasible_exit_codes(tmp_path, capsys):
    graph = tmp_path / "g.json"
    graph.write_text(json.dumps({"n": 2, "edges": [[0, 1], [1, 0]]}))
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"bounds": [[0, 1, 1, 1], [1, 0, 1, 1]]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bounds": [[0, 1, 1, 1], [1, 0, 2, 2]]}))

    code, out, _ = run_cli(capsys, "feasible", "--graph", str(graph), "--bounds", str(good))
    assert code == 0
    assert json.loads(out)["feasible"] is True

    code, out, _ = run_cli(capsys, "feasible", "--graph", str(graph), "--bounds", str(bad))
    assert code == 2
    payload = json.loads(out)
    assert payload == {"feasible": False, "subset": [0]}

    code, out, _ = run_cli(
        capsys, "feasible", "--graph", str(graph), "--bounds", str(bad), "--brute-force"
    )
    assert code == 2 and json.loads(out)["subset"] == [0]


def test_feasible_missing_file_runtime_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "feasible", "--graph", "nope.json", "--bounds", "x.json")
    assert code == 1
    assert "error" in err


def test_run_and_replay_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "algorithm": "sync",
                "generator": {"n": 8, "p": 0.3},
                "seeds": [0, 1],
            }
        )
    )
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--out-dir", str(out_dir))
    assert code == 0
    assert (out_dir / "summary.json").exists()
    traces = sorted(p.name for p in out_dir.glob("trace_*.csv"))
    assert traces == ["trace_seed0.csv", "trace_seed1.csv"]

    code, _, err = run_cli(
        capsys, "replay", "--trace", str(out_dir / "trace_seed0.csv"),
        "--check-invariants", "--monotone",
    )
    assert code == 0 and not err

    # identical re-run produces byte-identical outputs
    out2 = tmp_path / "out2"
    run_cli(capsys, "run", "--config", str(cfg), "--out-dir", str(out2))
    for name in traces + ["summary.json"]:
        assert (out_dir / name).read_bytes() == (out2 / name).read_bytes()


def test_run_naive_ring_trace_is_periodic(tmp_path, capsys):
    cfg = tmp_path / "ring.json"
    cfg.write_text(
        json.dumps(
            {
                "algorithm": "cap-naive",
                "graph": {"n": 4, "edges": [[0, 1], [1, 2], [2, 3], [3, 0]]},
                "bounds": [[0, 1, 1, 2], [1, 2, 1, 2], [2, 3, 1, 2], [3, 0, 1, 2]],
                "initial_weights": [[0, 1, 1], [1, 2, 1], [2, 3, 2], [3, 0, 2]],
                "orders": [
                    [[0, 1], [3, 0]],
                    [[1, 2], [0, 1]],
                    [[2, 3], [1, 2]],
                    [[3, 0], [2, 3]],
                ],
                "seeds": [0],
                "max_rounds": 12,
            }
        )
    )
    out_dir = tmp_path / "ring_out"
    code, _, _ = run_cli(capsys, "run", "--config", str(cfg), "--out-dir", str(out_dir))
    assert code == 0
    rows = (out_dir / "trace_seed0.csv").read_text().strip().splitlines()[1:]
    states = [r.split(",")[1:] for r in rows]  # epsilon + x columns repeat
    assert len(states) >= 9
    for k in range(len(states) - 4):
        assert states[k + 4] == states[k]
    assert states[1] != states[0]


def test_replay_flags_corrupted_trace(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("round,epsilon,epsilon_perceived,x_0,x_1\n0,3,,2,-1\n")
    code, _, err = run_cli(capsys, "replay", "--trace", str(bad), "--check-invariants")
    assert code == 1
    assert "violation" in err


def test_run_bad_config_runtime_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algorithm": "bogus", "graph": {"n": 2, "edges": []}}))
    code, _, err = run_cli(capsys, "run", "--config", str(cfg), "--out-dir", str(tmp_path / "o"))
    assert code == 1
