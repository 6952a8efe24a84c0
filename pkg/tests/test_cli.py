import json
from pathlib import Path

import numpy as np

from dpre.acceptance import CriterionResult
from dpre.cli import main
from dpre.pinning import KernelTable


def run_cli(tmp_path, *argv) -> int:
    return main([str(a) for a in argv])


def test_simulate_writes_schema_and_is_deterministic(tmp_path):
    prefix1 = tmp_path / "a"
    prefix2 = tmp_path / "b"
    base = ["simulate", "--law", "gaussian", "--d", "1", "--beta", "0.5,0.8",
            "--n-list", "4,8", "--p", "1.5", "--r", "50", "--seed", "7",
            "--functional", "both"]
    assert run_cli(tmp_path, *base, "--out-prefix", prefix1) == 0
    assert run_cli(tmp_path, *base, "--out-prefix", prefix2) == 0
    csv1 = (tmp_path / "a.csv").read_bytes()
    csv2 = (tmp_path / "b.csv").read_bytes()
    assert csv1 == csv2
    header = csv1.decode().splitlines()[0]
    assert header == "d,beta,n,p,R,seed,estimate,stderr,functional"
    summary = json.loads((tmp_path / "a.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["subcommand"] == "simulate"
    assert summary["config"]["r"] == 50
    assert "wall_time_s" in summary
    assert all("stderr" in row for row in summary["results"]["moments"])


def test_simulate_golden_csv(tmp_path):
    golden = Path(__file__).parent / "data" / "simulate_golden.csv"
    prefix = tmp_path / "gold"
    code = run_cli(tmp_path, "simulate", "--law", "rademacher", "--d", "1",
                   "--beta", "0.7", "--n-list", "2,4", "--p", "2.0",
                   "--r", "20", "--seed", "123", "--functional", "both",
                   "--out-prefix", prefix)
    assert code == 0
    assert (tmp_path / "gold.csv").read_text() == golden.read_text()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        '[simulate]\nlaw = "gaussian"\nd = 1\nbeta = "0.4"\n'
        'n-list = "4,8"\np = "1.5"\nr = 30\nseed = 5\nfunctional = "moments"\n')
    prefix = tmp_path / "cfg"
    code = run_cli(tmp_path, "--config", cfg, "simulate", "--r", "40",
                   "--out-prefix", prefix)
    assert code == 0
    summary = json.loads((tmp_path / "cfg.json").read_text())
    assert summary["config"]["r"] == 40       # flag wins
    assert summary["config"]["beta"] == "0.4"  # file value kept


def test_unknown_config_field_is_exit_2(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[simulate]\nbogus = 1\n")
    assert run_cli(tmp_path, "--config", cfg, "simulate") == 2


def test_bad_law_is_exit_2(tmp_path):
    assert run_cli(tmp_path, "simulate", "--law", "cauchy",
                   "--out-prefix", tmp_path / "x") == 2


def test_phi_requires_table(tmp_path):
    assert run_cli(tmp_path, "phi", "--v", "0.1",
                   "--out-prefix", tmp_path / "p") == 2


def test_l2_json_fields(tmp_path):
    prefix = tmp_path / "l2run"
    code = run_cli(tmp_path, "l2", "--law", "gaussian", "--d", "3",
                   "--n-max", "2000", "--out-prefix", prefix)
    assert code == 0
    res = json.loads((tmp_path / "l2run.json").read_text())["results"]
    for key in ("s_infty", "s_tail_bound", "beta2"):
        assert key in res
    assert res["beta2"] > 0.0


def test_kernel_phi_pipeline_across_invocations(tmp_path):
    kprefix = tmp_path / "kern"
    assert run_cli(tmp_path, "kernels", "--law", "gaussian", "--beta", "0",
                   "--d", "1", "--p", "1.5", "--n-max", "512",
                   "--out-prefix", kprefix) == 0
    table = KernelTable.from_csv(tmp_path / "kern.csv")
    assert table.n_max == 512 and table.d == 1
    pprefix = tmp_path / "phirun"
    assert run_cli(tmp_path, "phi", "--table", tmp_path / "kern.csv",
                   "--v", "0.2,0.4", "--renewal-n", "64",
                   "--out-prefix", pprefix) == 0
    res = json.loads((tmp_path / "phirun.json").read_text())["results"]
    phis = [entry["phi"] for entry in res["per_v"]]
    assert phis[0] < phis[1]
    assert all(entry["renewal_bound_ok"] for entry in res["per_v"])


def test_phi_unsolvable_root_is_exit_3(tmp_path):
    vals = np.arange(1, 101, dtype=float) ** -0.5
    KernelTable(1.5, 0.0, 1, vals, np.zeros_like(vals)).to_csv(tmp_path / "k.csv")
    code = run_cli(tmp_path, "phi", "--table", tmp_path / "k.csv",
                   "--v", "1e-5", "--tail", "none",
                   "--out-prefix", tmp_path / "p")
    assert code == 3


def test_localize_csv(tmp_path):
    prefix = tmp_path / "loc"
    assert run_cli(tmp_path, "localize", "--law", "gaussian", "--d", "1",
                   "--beta", "0.9", "--n", "8", "--r", "3", "--seed", "11",
                   "--out-prefix", prefix) == 0
    lines = (tmp_path / "loc.csv").read_text().splitlines()
    assert lines[0] == "d,beta,n,seed,replica,ep,ov"
    assert len(lines) == 4
    res = json.loads((tmp_path / "loc.json").read_text())["results"]
    assert 0.0 < res["ep_mean"] <= 1.0
    assert 0.0 < res["ov_mean"] <= 1.0


def test_chaos_check_subcommand(tmp_path):
    prefix = tmp_path / "chaos"
    code = run_cli(tmp_path, "chaos-check", "--law", "gaussian",
                   "--beta-base", "0", "--u", "0.1", "--p", "1.5", "--d", "1",
                   "--n", "12", "--r", "2000", "--seed", "3",
                   "--out-prefix", prefix)
    assert code == 0
    res = json.loads((tmp_path / "chaos.json").read_text())["results"]
    assert res["passed"] is True
    assert res["lhs"] <= res["rhs"] + 4 * res["lhs_se"]


def test_couple_check_subcommand(tmp_path):
    prefix = tmp_path / "couple"
    code = run_cli(tmp_path, "couple-check", "--law", "rademacher",
                   "--beta", "0.8", "--a-points", "40",
                   "--out-prefix", prefix)
    assert code == 0
    res = json.loads((tmp_path / "couple.json").read_text())["results"]
    assert res["coupling_constant"] > 0.0
    assert res["u_certified_empirically"] >= res["u_max_guaranteed"] / 4.0
    assert json.loads((tmp_path / "couple.json").read_text())["config"]["beta"] == 0.8


def test_simulate_beta2_anchor_disclosure(tmp_path):
    prefix = tmp_path / "anchor"
    code = run_cli(tmp_path, "simulate", "--law", "gaussian", "--d", "3",
                   "--anchor-beta2", "0.5", "--n-list", "2,4", "--p", "1.5",
                   "--r", "20", "--seed", "2", "--functional", "moments",
                   "--out-prefix", prefix)
    assert code == 0
    summary = json.loads((tmp_path / "anchor.json").read_text())
    assert summary["beta_anchor"]["kind"] == "beta2"
    assert summary["beta_anchor"]["beta2"] > 0.0


def test_accept_exit_code_on_failure(tmp_path, monkeypatch, capsys):
    import dpre.cli as cli_mod

    def fake_run_all(include_illustration=True, echo=False):
        res = CriterionResult("stub", False, "forced failure", 0.0)
        if echo:
            print(res.line())
        return [res]

    monkeypatch.setattr(cli_mod, "run_all", fake_run_all)
    code = run_cli(tmp_path, "accept", "--out-prefix", tmp_path / "acc")
    assert code == 4
    assert "[FAIL] stub" in capsys.readouterr().out
