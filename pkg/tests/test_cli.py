import json
import warnings

import pytest

from pauli_compress import cli
from pauli_compress.config import load_config, parse_config
from pauli_compress.errors import ConfigurationError


def small_tfim(**overrides):
    cfg = {
        "version": 1,
        "name": "small",
        "model": {"name": "tfim", "J": 1.0, "h": 1.1},
        "topology": {"kind": "square", "n_x": 3, "n_y": 2, "boundary": "open"},
        "trotter": {"delta_t": 0.1, "L_U": 4, "L_V": 1, "t_grid": [0.1, 0.2]},
        "optimizer": {"max_iterations": 30},
        "oracle": {"hst": True},
        "seed": 0,
    }
    cfg.update(overrides)
    return cfg


def small_hcb():
    return {
        "version": 1,
        "model": {"name": "hcb", "J_x": 1.0, "J_y": 0.5},
        "topology": {"kind": "square", "n_x": 3, "n_y": 2, "boundary": "open"},
        "trotter": {"delta_t": 0.2, "L_U": 8, "L_V": 1, "t_grid": [0.2]},
        "optimizer": {"max_iterations": 30},
        "hcb_demo": {"initial_sites": [0, 4], "repetitions": [0, 1, 2], "reference_step": 0.01},
    }


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run(*args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cli.main([str(a) for a in args])


def test_config_round_trip_and_hash_is_stable(tmp_path):
    path = write(tmp_path, small_tfim())
    a, b = load_config(path), load_config(path)
    assert a.hash() == b.hash()
    assert parse_config(json.loads(a.canonical_json())).hash() == a.hash()
    assert a.with_seed(5).hash() != a.hash()


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda c: c.update(version=2), "version"),
        (lambda c: c.update(colour="blue"), "unknown key"),
        (lambda c: c["model"].update(name="heisenberg"), "unknown model"),
        (lambda c: c["trotter"].update(L_U="four"), "L_U"),
        (lambda c: c["trotter"].pop("t_grid"), "t_grid"),
        (lambda c: c["trotter"].update(t_grid=[0.15]), "multiple"),
        (lambda c: c["trotter"].update(sharing="translation_invariant"), "periodic"),
        (lambda c: c.update(cache={"seeds": "one_site"}), "periodic"),
        (lambda c: c["topology"].update(boundary="twisted"), "boundary"),
        (lambda c: c.update(sweep={"weights": [6]}), "at least two"),
        (lambda c: c["oracle"].update(hst="yes"), "true/false"),
    ],
)
def test_invalid_configs_are_rejected(tmp_path, mutate, fragment):
    cfg = small_tfim()
    mutate(cfg)
    with pytest.raises(ConfigurationError, match=fragment):
        load_config(write(tmp_path, cfg))


def test_invalid_config_exits_with_code_2(tmp_path, capsys):
    cfg = small_tfim()
    cfg["trotter"]["sharing"] = "translation_invariant"
    assert run("compress", "--config", write(tmp_path, cfg), "--out", tmp_path / "out") == 2
    assert "configuration error" in capsys.readouterr().err
    assert run("compress", "--config", tmp_path / "missing.json", "--out", tmp_path / "out") == 2


def test_missing_section_exits_with_code_2(tmp_path):
    assert run("sweep-weights", "--config", write(tmp_path, small_tfim()), "--out", tmp_path / "out") == 2
    assert run("hcb-demo", "--config", write(tmp_path, small_tfim()), "--out", tmp_path / "out") == 2


def test_resource_budget_exits_with_code_3(tmp_path):
    cfg = small_tfim(cache={"max_terms": 3})
    out = tmp_path / "out"
    assert run("compress", "--config", write(tmp_path, cfg), "--out", out) == 3
    dump = json.loads((out / "error_stats.json").read_text())
    assert dump["stats"]["peak_terms"] > 3


def test_compress_outputs(tmp_path):
    out = tmp_path / "out"
    assert run("compress", "--config", write(tmp_path, small_tfim()), "--out", out) == 0
    names = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    assert names == {"results.csv", "results.json", "stats.json", "history.csv", "timing.json",
                     "circuits/t_0.1.json", "circuits/t_0.2.json"} | {
        f"plot/{k}.dat" for k in ("cost_trotter", "cost_optimized", "improvement", "hst_trotter", "hst_optimized")}
    improvement = (out / "plot/improvement.dat").read_text().splitlines()
    assert improvement[1] == "# t improvement" and len(improvement) == 4
    assert len(improvement[2].split()) == 2
    results = json.loads((out / "results.json").read_text())
    cfg_hash = load_config(tmp_path / "cfg.json").hash()
    assert results["config_hash"] == cfg_hash
    assert (out / "results.csv").read_text().startswith(f"# config_hash: {cfg_hash}")
    for rec in results["records"]:
        assert rec["cost_optimized"] <= rec["cost_trotter"]
        assert rec["hst_optimized"] <= rec["hst_trotter"]
    circ = json.loads((out / "circuits/t_0.2.json").read_text())["circuit"]
    assert circ["n_qubits"] == 6


def test_outputs_do_not_depend_on_threads_or_repetition(tmp_path):
    path = write(tmp_path, small_tfim())
    outs = [tmp_path / name for name in ("a", "b", "c")]
    for out, threads in zip(outs, (1, 8, 1)):
        assert run("compress", "--config", path, "--out", out, "--threads", threads) == 0
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file() and p.name != "timing.json")
    for other in outs[1:]:
        for rel in files:
            assert (outs[0] / rel).read_bytes() == (other / rel).read_bytes(), rel


def test_equal_depth_compression_gains_nothing(tmp_path):
    # L_V = L_U at a single step: the ansatz starts at the target itself
    cfg = small_tfim(trotter={"delta_t": 0.1, "L_U": 4, "L_V": 4, "t_grid": [0.1]})
    out = tmp_path / "out"
    assert run("compress", "--config", write(tmp_path, cfg), "--out", out) == 0
    rec = json.loads((out / "results.json").read_text())["records"][0]
    assert rec["cost_trotter"] < 1e-14
    assert rec["cost_optimized"] < 1e-14


def test_seed_override_changes_hash_only(tmp_path):
    path = write(tmp_path, small_tfim(trotter={"delta_t": 0.1, "L_U": 4, "L_V": 1, "t_grid": [0.1]}))
    assert run("compress", "--config", path, "--out", tmp_path / "a", "--seed", 7) == 0
    results = json.loads((tmp_path / "a/results.json").read_text())
    assert results["config"]["seed"] == 7
    assert results["config_hash"] == load_config(path).with_seed(7).hash()


def test_bad_cli_arguments_exit_nonzero(tmp_path):
    path = write(tmp_path, small_tfim())
    for argv in (["compress", "--config", path], ["compress", "--config", path, "--out", tmp_path, "--seed", -1],
                 ["compress", "--config", path, "--out", tmp_path, "--threads", 0], ["frobnicate"]):
        with pytest.raises(SystemExit) as exc:
            run(*argv)
        assert exc.value.code != 0


def test_sweep_reference_row_is_zero(tmp_path):
    cfg = small_tfim(
        trotter={"delta_t": 0.1, "L_U": 4, "L_V": 1, "t_grid": [0.2]},
        sweep={"weights": [2, 3, 6]},
        oracle={},
    )
    out = tmp_path / "out"
    assert run("sweep-weights", "--config", write(tmp_path, cfg), "--out", out) == 0
    rows = json.loads((out / "results.json").read_text())["records"]
    assert [r["weight"] for r in rows] == [2, 3, 6]
    ref = rows[-1]
    assert ref["e_W"] == 0.0 and ref["e_theta"] == 0.0
    assert all(r["e_W"] >= 0 and r["e_theta"] >= 0 for r in rows)


def test_hcb_demo(tmp_path):
    out = tmp_path / "out"
    assert run("hcb-demo", "--config", write(tmp_path, small_hcb()), "--out", out) == 0
    rows = json.loads((out / "results.json").read_text())["records"]
    assert [r["k"] for r in rows] == [0, 1, 2]
    assert rows[0]["infidelity_compressed"] == pytest.approx(0.0, abs=1e-15)
    for r in rows:
        for key in ("occupation_reference", "occupation_compressed", "occupation_trotter"):
            assert r[key] == pytest.approx(2.0, abs=1e-10)
    for r in rows[1:]:
        assert r["infidelity_compressed"] < r["infidelity_trotter"]
    occ = (out / "occupations.csv").read_text().splitlines()
    assert len(occ) == 2 + 3 * 6


def test_hcb_demo_rejects_bad_sites(tmp_path):
    cfg = small_hcb()
    cfg["hcb_demo"]["initial_sites"] = [0, 6]
    assert run("hcb-demo", "--config", write(tmp_path, cfg), "--out", tmp_path / "out") == 2


def test_export_circuit(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("export-circuit", "--config", write(tmp_path, small_tfim()), "--out", out, "--which", "target") == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == 2
    data = json.loads((out / "circuits/target_t_0.2.json").read_text())
    assert data["kind"] == "target"
    assert len(data["circuit"]["gates"]) > 0
    assert not (out / "circuits/ansatz_t_0.2.json").exists()


def test_oracle_check_small(tmp_path):
    cfg = {"version": 1, "oracle_check": {"n_qubits": 2, "n_circuits": 3, "n_gates": 8, "risk_qubits": 2,
                                          "risk_pairs": 3, "haar_instances": 2, "haar_samples": 2000}}
    out = tmp_path / "out"
    assert run("oracle-check", "--config", write(tmp_path, cfg), "--out", out) == 0
    res = json.loads((out / "results.json").read_text())
    assert res["exactness_max_error"] < 1e-12
    assert res["unitarity_max_error"] < 1e-12
    assert res["local_risk_max_error"] < 1e-12
    assert len(res["haar"]) == 2
