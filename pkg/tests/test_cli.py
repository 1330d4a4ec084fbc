import json
from importlib import resources

import jsonschema
import pytest

from evospi import cli
from evospi import problems as P

from conftest import DATA


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def schema():
    return json.loads(resources.files("evospi").joinpath("result.schema.json").read_text())


def test_parse_partition():
    cfg = cli.parse_args(["partition", "--numbers", "1,2,5,6,7,9", "--k", "6", "--seed", "1"])
    assert cfg.command == "partition"
    assert cfg.k == 6 and cfg.seed == 1
    assert cfg.inline_numbers == [1, 2, 5, 6, 7, 9]


def test_parse_rejects_small_population():
    with pytest.raises(cli.CliUsageError) as info:
        cli.parse_args(["partition", "--numbers", "1,2", "--k", "1"])
    assert info.value.flag == "--k"


def test_parse_noisy_maxcut():
    cfg = cli.parse_args(["maxcut", "--instance", "g.txt", "--backend", "noisy", "--sigma", "0.01"])
    assert cfg.backend == "noisy" and cfg.sigma == 0.01 and cfg.instance_path == "g.txt"


@pytest.mark.parametrize(
    "argv, flag",
    [
        (["partition", "--numbers", "1,2", "--instance", "x.txt"], "--instance"),
        (["partition"], "--numbers"),
        (["partition", "--numbers", "1,2", "--mutation-rate", "2"], "--mutation-rate"),
        (["partition", "--numbers", "1,2", "--elites", "6"], "--elites"),
        (["partition", "--numbers", "1,2", "--max-iters", "0"], "--max-iters"),
        (["partition", "--numbers", "1,2", "--sigma", "0.1"], "--sigma"),
        (["partition", "--numbers", "1,2", "--backend", "replay"], "--replay"),
        (["maxcut", "--numbers", "1,2"], "--numbers"),
        (["sweep", "--n-to", "400"], "--n-to"),
        (["export-patterns", "--spins=1,0"], "--spins"),
    ],
)
def test_parse_errors_name_flag(argv, flag):
    with pytest.raises(cli.CliUsageError) as info:
        cli.parse_args(argv)
    assert info.value.flag == flag


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli("partition", "--numbers", "1,2", "--bogus") == 1
    assert "--bogus" in capsys.readouterr().err


def test_partition_seed_sweep_until_success(tmp_path):
    for seed in range(20):
        out = tmp_path / str(seed)
        if run_cli("partition", "--numbers", "1,2,5,6,7,9", "--seed", seed, "--out", out) == 0:
            break
    else:
        pytest.fail("no seed reached the optimum")
    result = json.loads((out / "result.json").read_text())
    jsonschema.validate(result, schema())
    assert result["best"]["sums"] == [15, 15]
    assert sorted(sum(g) for g in result["best"]["groups"]) == [15, 15]
    assert result["oracle"] == {"value": 0, "matched": True}
    assert result["seed"] == seed
    assert (out / "curve.csv").read_text().startswith("iteration,best_objective,best_intensity\n")
    assert (out / "curve.gp").exists()


def test_budget_exhausted_exit_code(tmp_path):
    inst = P.random_partition(20, 3)
    code = run_cli("partition", "--numbers", ",".join(map(str, inst.numbers)), "--max-iters", "1",
                   "--out", tmp_path)
    assert code == 2
    result = json.loads((tmp_path / "result.json").read_text())
    jsonschema.validate(result, schema())
    assert result["converged_at"] is None and result["oracle"]["matched"] is False


def test_maxcut_from_file_with_exports(tmp_path):
    code = run_cli("maxcut", "--instance", DATA / "maxcut_n6_seed1.txt", "--export", "--seed", 2,
                   "--out", tmp_path)
    assert code == 0
    result = json.loads((tmp_path / "result.json").read_text())
    jsonschema.validate(result, schema())
    assert result["best"]["objective"] == pytest.approx(5.434)
    assert (tmp_path / "best_pattern.pbm").read_text().startswith("P1\n6 6\n")
    assert (tmp_path / "weights.pgm").read_text().startswith("P2\n6 6\n65535\n")


def test_wrong_instance_kind_is_error(tmp_path):
    assert run_cli("partition", "--instance", DATA / "maxcut_n6_seed1.txt", "--out", tmp_path) == 1


def test_noisy_backend_solve(tmp_path):
    code = run_cli("partition", "--numbers", "2,4,5,6,9", "--backend", "noisy", "--sigma", "0.01",
                   "--bits", "12", "--seed", "3", "--out", tmp_path)
    assert code in (0, 2)
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["config"]["backend"] == {"kind": "noisy", "sigma": 0.01, "bits": 12, "offset": 0.0,
                                           "replay": None}


def test_replay_backend(tmp_path):
    trace = tmp_path / "trace.txt"
    trace.write_text("# six readings per iteration\n" + "\n".join(["1.0"] * 12) + "\n")
    out = tmp_path / "out"
    code = run_cli("partition", "--numbers", "1,2,3,4,5,6", "--backend", "replay", "--replay", trace,
                   "--max-iters", "2", "--out", out)
    assert code in (0, 2)
    code = run_cli("partition", "--numbers", "1,2,3,4,5,6", "--backend", "replay", "--replay", trace,
                   "--max-iters", "5", "--out", out)
    # trace runs out in iteration 2; partial curve is still written
    if code != 0:
        assert code == 1
        assert len((out / "curve.csv").read_text().strip().split("\n")) == 3


def test_oracle_command(tmp_path, capsys):
    assert run_cli("oracle", "--numbers", "2,4,5,6,9", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "optimum: 0" in out
    rec = json.loads((tmp_path / "oracle.json").read_text())
    assert rec["value"] == 0
    assert sorted(map(sorted, rec["groups"])) == [[2, 5, 6], [4, 9]]


def test_oracle_random_maxcut(tmp_path):
    assert run_cli("oracle", "--random-n", "6", "--instance-seed", "1", "--kind", "maxcut", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "oracle.json").read_text())["value"] == pytest.approx(5.434)


def test_export_patterns(tmp_path):
    assert run_cli("export-patterns", "--spins=+1,-1", "--out", tmp_path) == 0
    assert (tmp_path / "pattern.pbm").read_text() == "P1\n2 2\n0 1\n1 0\n"
    assert run_cli("export-patterns", "--spins=+1,-1", "--numbers", "3,4", "--out", tmp_path) == 0
    assert (tmp_path / "weights.pgm").read_text() == "P2\n2 2\n65535\n0 65535\n65535 0\n"


def test_sweep_and_noise_commands(tmp_path):
    assert run_cli("sweep", "--n-from", 10, "--n-to", 20, "--n-step", 10, "--trials", 2, "--out", tmp_path) == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == "n,seed,iterations_to_solve,wall_time_s" and len(lines) == 5
    assert (tmp_path / "sweep.gp").exists()
    assert run_cli("noise", "--numbers", "2,4,5,6,9", "--sigmas", "0,0.01", "--trials", 5, "--out", tmp_path,
                   "--format", "json") == 0
    rows = json.loads((tmp_path / "noise.json").read_text())
    assert [r["sigma"] for r in rows] == [0.0, 0.01]


def test_echoed_argv_reproduces_bytes(tmp_path):
    first = tmp_path / "a"
    assert run_cli("maxcut", "--random-n", 8, "--instance-seed", 4, "--seed", 9, "--backend", "noisy",
                   "--out", first) in (0, 2)
    result = json.loads((first / "result.json").read_text())
    again = tmp_path / "b"
    cli.main(result["config"]["argv"] + ["--out", str(again)])
    for name in ("result.json", "curve.csv"):
        assert (first / name).read_bytes() == (again / name).read_bytes()
