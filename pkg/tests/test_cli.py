import json


from hcgas import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_ground_nine(capsys):
    code, out, _ = run_cli(capsys, "ground", "--n", "9", "--d", "3")
    assert code == 0
    assert "L_9 = 74" in out
    assert "b_9 = 469762048" in out
    assert "h_9 = 2" in out


def test_ground_one_json(capsys):
    code, out, _ = run_cli(capsys, "ground", "--n", "1", "--d", "3", "--json")
    assert code == 0
    blob = json.loads(out)
    assert blob["L"] == "0"
    assert blob["b"] == "1"
    assert blob["h"] == 0


def test_ground_rejects_low_dimension(capsys):
    code, _, err = run_cli(capsys, "ground", "--n", "9", "--d", "2")
    assert code == 2
    assert "dimension" in err


def test_ground_big_n_overflow_path(capsys):
    code, out, _ = run_cli(capsys, "ground", "--n", "100000", "--d", "3", "--json")
    assert code == 0
    blob = json.loads(out)
    assert "log_gsw" in blob and "b" not in blob


def test_logz_trivial(capsys):
    code, out, _ = run_cli(capsys, "logz", "--n", "1", "--json")
    assert code == 0
    assert json.loads(out)["log_z"] == 0.0
    code, out, _ = run_cli(capsys, "logz", "--n", "5", "--beta", "0", "--json")
    assert code == 0
    assert abs(json.loads(out)["log_z"]) < 1e-8


def test_logz_brackets(capsys):
    code, out, _ = run_cli(capsys, "logz", "--n", "9", "--beta", "1", "--d", "3", "--json")
    assert code == 0
    blob = json.loads(out)
    assert blob["lower_slack"] >= -1e-9
    assert blob["upper_slack"] >= -1e-9
    # json floats round-trip to the same double
    assert isinstance(blob["log_z"], float)


def test_usage_errors(capsys):
    assert run_cli(capsys, "verify")[0] == 2
    assert run_cli(capsys, "nonsense")[0] == 2
    assert run_cli(capsys)[0] == 2


def test_sample_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code, _, _ = run_cli(
            capsys, "sample", "--n", "12", "--beta", "1", "--reps", "2",
            "--seed", "9", "--out", str(out), "--verify",
        )
        assert code == 0
    for rep in range(2):
        f1 = (out1 / f"replica_{rep:05d}.csv").read_bytes()
        f2 = (out2 / f"replica_{rep:05d}.csv").read_bytes()
        assert f1 == f2
    header = (out1 / "replica_00000.csv").read_text().splitlines()[0]
    assert "seed=9" in header and "n=12" in header


def test_sample_verify_ground_flag(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "sample", "--n", "16", "--beta", "50", "--reps", "5",
        "--seed", "2", "--out", str(tmp_path / "g"), "--verify-ground",
    )
    assert code == 0


def test_sample_verify_multinomial_flag(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "sample", "--n", "200", "--beta", "0", "--reps", "60",
        "--seed", "4", "--out", str(tmp_path / "m"), "--verify-multinomial",
    )
    assert code == 0
    code, _, err = run_cli(
        capsys, "sample", "--n", "8", "--beta", "1", "--reps", "1",
        "--seed", "4", "--out", str(tmp_path / "m2"), "--verify-multinomial",
    )
    assert code == 2
    assert "beta 0" in err


def test_experiment_suite_writes_output(tmp_path, capsys):
    prefix = tmp_path / "exp"
    code, out, _ = run_cli(
        capsys, "experiment", "--suite", "baseline",
        "--n-list", "128", "256", "512", "1024", "2048",
        "--reps", "200", "--seed", "3", "--out", str(prefix),
    )
    assert code == 0
    rows = (prefix.with_suffix(".csv")).read_text().splitlines()
    assert rows[0] == "n,beta,d,stat,reps,mean,variance,var_se,seed"
    assert len(rows) == 6
    blob = json.loads(prefix.with_suffix(".json").read_text())
    assert abs(blob["fit"]["slope"] - 1.0) < 0.1
    assert blob["config"]["suite"] == "baseline"
    assert blob["config"]["n_list"] == [128, 256, 512, 1024, 2048]


def test_verify_groundstate_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "--suite", "groundstate")
    assert code == 0
    assert "FAIL" not in out


def test_verify_detects_broken_gamma(capsys, monkeypatch):
    from hcgas import numtheory, verify

    real = numtheory.gamma

    def broken(n, d):
        return real(n, d) + (1 if n % 97 == 3 else 0)

    monkeypatch.setattr(verify.numtheory, "gamma", broken)
    code, out, _ = run_cli(capsys, "verify", "--suite", "numtheory")
    assert code == 1
    assert "FAIL" in out
