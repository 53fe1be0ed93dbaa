import json

import pytest

from barysim.cli import build_parser, main, run_diagnostics


def _write_quad_config(path, **extra):
    raw = {
        "topology": {"kind": "cycle", "m": 4},
        "problem": {"preset": "quadratic", "n": 3},
        "algorithm": {"gamma": 0.005},
        "sim": {"horizon_s": 4.0},
    }
    for key, value in extra.items():
        block, field = key.split(".")
        raw.setdefault(block, {})[field] = value
    path.write_text(json.dumps(raw))
    return path


def test_run_writes_a_trace_and_reports_the_final_row(tmp_path, capsys):
    cfg = _write_quad_config(tmp_path / "run.json")
    out = tmp_path / "trace.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "wrote 3 rows" in captured.out
    assert "final dual_objective=" in captured.out
    assert "consensus_distance=" in captured.out
    lines = out.read_text().splitlines()
    assert len(lines) == 4  # header + three snapshots
    assert lines[0].startswith("virtual_time_s,global_iter,")


def test_identical_invocations_write_identical_bytes(tmp_path):
    cfg = _write_quad_config(tmp_path / "run.json")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_overrides_change_the_run(tmp_path):
    cfg = _write_quad_config(tmp_path / "run.json")
    base, seeded, longer = (tmp_path / name for name in ("x.csv", "y.csv", "z.csv"))
    assert main(["run", "--config", str(cfg), "--out", str(base)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(seeded), "--seed", "9"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(longer), "--horizon", "8"]) == 0
    assert base.read_bytes() != seeded.read_bytes()
    assert len(longer.read_text().splitlines()) == 6
    sync = tmp_path / "s.csv"
    assert main(["run", "--config", str(cfg), "--out", str(sync), "--variant", "sync_baseline"]) == 0
    assert "sync_baseline" in sync.read_text()


def test_invalid_config_exits_with_the_field_path(tmp_path, capsys):
    cfg = _write_quad_config(tmp_path / "bad.json", **{"algorithm.tau_assumed": 9})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "t.csv")]) == 2
    err = capsys.readouterr().err
    assert "algorithm.tau_assumed" in err
    assert "staleness bound 9 exceeds the node count 4" in err


def test_missing_config_file_is_a_clean_error(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "t.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_diagnostics_pass_on_a_fresh_checkout(capsys):
    assert main(["diagnostics"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
    assert "FAIL" not in out


def test_diagnostics_catch_a_broken_momentum_rule():
    # negative control: a subtly wrong recursion must trip the first suite
    results = run_diagnostics(theta_fn=lambda th: 0.99 * th)
    by_name = {name: ok for name, ok, _ in results}
    assert by_name["momentum-schedule"] is False
    assert by_name["gradient-oracle"] is True


def test_preset_round_trips_through_run(tmp_path, capsys):
    cfg = tmp_path / "quad.json"
    assert main(["preset", "--kind", "quadratic", "--out", str(cfg)]) == 0
    out = tmp_path / "trace.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--horizon", "4"]) == 0
    assert len(out.read_text().splitlines()) >= 3


def test_preset_kinds_are_complete(tmp_path):
    for kind in ("gaussian", "quadratic", "mnist"):
        path = tmp_path / f"{kind}.json"
        assert main(["preset", "--kind", kind, "--out", str(path)]) == 0
        raw = json.loads(path.read_text())
        assert raw["problem"]["preset"] == kind


def test_mnist_prepare_then_run(tmp_path, capsys):
    manifest = tmp_path / "digits.json"
    rc = main(
        ["mnist-prepare", "--synthetic", "--digit", "3", "--m", "4",
         "--pool", "40", "--seed", "1", "--out", str(manifest)]
    )
    assert rc == 0
    assert "wrote 4 digit-3 measures" in capsys.readouterr().out
    cfg = tmp_path / "mnist.json"
    cfg.write_text(json.dumps({
        "topology": {"kind": "cycle", "m": 4},
        "problem": {"preset": "mnist", "beta": 0.05, "manifest": str(manifest)},
        "algorithm": {"gamma": 0.05},
        "sim": {"horizon_s": 2.0},
    }))
    out = tmp_path / "trace.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_mnist_prepare_rejects_a_thin_pool(tmp_path, capsys):
    rc = main(
        ["mnist-prepare", "--synthetic", "--digit", "7", "--m", "30",
         "--pool", "35", "--seed", "0", "--out", str(tmp_path / "m.json")]
    )
    assert rc == 2
    assert "need 30" in capsys.readouterr().err


def test_mnist_prepare_requires_files_without_synthetic(tmp_path, capsys):
    rc = main(["mnist-prepare", "--digit", "3", "--out", str(tmp_path / "m.json")])
    assert rc == 2
    assert "--images" in capsys.readouterr().err


def test_help_documents_every_flag_and_config_field():
    top = build_parser().format_help()
    for command in ("run", "diagnostics", "preset", "mnist-prepare"):
        assert command in top
    # config schema documented in the epilog
    for field in (
        "topology", "kind", "er_edge_prob", "preset", "beta", "n", "preset_seed",
        "mu_strong", "b_scale", "noise_std", "manifest", "variant", "gamma",
        "tau_assumed", "batch", "batch_epsilon", "horizon_s", "mode",
        "interval_s", "support", "probs", "master_seed", "eval_every_s",
        "eval_samples", "eval_seed",
    ):
        assert field in top, f"missing {field} in --help"
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run"])  # --config is required
