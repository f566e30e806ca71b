"""Tests for the experiment orchestrator and its CLI front end."""

import json
import os

import numpy as np
import pytest

from annealab import cli, model, rng
from annealab.experiments import (
    ConfigError,
    ExperimentConfig,
    plan_jobs,
    run,
    schema_text,
    select_samples,
    validate_params,
)

# ---------------------------------------------------------------------------
# config validation


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError, match="unknown kind 'nope'"):
        ExperimentConfig("nope", {})


def test_unknown_field_named_in_error():
    with pytest.raises(ConfigError, match="bogus"):
        validate_params("theory", {"alpha": 0.4, "beta": 3.0,
                                   "gammas": [1.0], "bogus": 1})


def test_missing_required_field_named():
    with pytest.raises(ConfigError, match="beta"):
        validate_params("theory", {"alpha": 0.4, "gammas": [1.0]})


def test_wrong_type_rejected():
    with pytest.raises(ConfigError, match="gammas"):
        validate_params("theory", {"alpha": 0.4, "beta": 3.0,
                                   "gammas": "all of them"})


def test_size_given_twice_or_not_at_all():
    base = {"y": 4, "beta": 8.0}
    with pytest.raises(ConfigError, match="'p' or 'alpha'"):
        validate_params("sqa-sweep", {"n": 40, **base})
    with pytest.raises(ConfigError, match="'p' or 'alpha'"):
        validate_params("sqa-sweep", {"n": 40, "p": 16, "alpha": 0.4, **base})


def test_defaults_filled_in():
    p = validate_params("theory", {"alpha": 0.4, "beta": 3.0,
                                   "gammas": [1.0]})
    assert p["variant"] == "r0"
    assert p["nodes"] == 96


def test_y_accepts_int_or_list():
    base = {"n": 40, "alpha": 0.4, "beta": 8.0}
    validate_params("sqa-sweep", {**base, "y": 4})
    validate_params("sqa-sweep", {**base, "y": [4, 8]})
    with pytest.raises(ConfigError, match="y"):
        validate_params("sqa-sweep", {**base, "y": "many"})


def test_from_dict_reserved_keys_and_manifest_unwrap(tmp_path):
    raw = {"kind": "theory", "seed": 9, "out": "x",
           "alpha": 0.4, "beta": 3.0, "gammas": [1.0]}
    cfg = ExperimentConfig.from_dict(dict(raw), out_dir=str(tmp_path))
    assert cfg.base_seed == 9 and cfg.kind == "theory"
    # a manifest wrapping the same config parses identically
    wrapped = {"schema": 1, "config": cfg.as_dict(), "n_failed": 0}
    cfg2 = ExperimentConfig.from_dict(wrapped, out_dir=str(tmp_path))
    assert cfg2.params == cfg.params and cfg2.base_seed == 9


def test_from_file_bad_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(str(f))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(str(tmp_path / "absent.json"))


def test_schema_text_mentions_every_kind():
    text = schema_text()
    for kind in ("theory", "sqa-sweep", "sa-sweep", "committee-sweep",
                 "bp-profile", "exact-qa", "gaps", "stats",
                 "select-samples"):
        assert kind in text
    assert "alpha" in schema_text("theory")


# ---------------------------------------------------------------------------
# job planning


def _cfg(kind, out, seed=0, **params):
    return ExperimentConfig(kind, params, base_seed=seed, out_dir=str(out))


def test_sweep_plans_y_by_seed_grid(tmp_path):
    cfg = _cfg("sqa-sweep", tmp_path, n=40, alpha=0.4, y=[4, 8],
               n_seeds=3, beta=8.0)
    names = [name for name, _, _ in plan_jobs(cfg)]
    assert names == [f"sqa_y{y}_seed{s}" for y in (4, 8) for s in range(3)]


def test_committee_shape_validated(tmp_path):
    bad = _cfg("committee-sweep", tmp_path, n=40, alpha=0.4, k_units=5,
               y=4, beta=8.0)
    with pytest.raises(ConfigError, match="k_units"):
        plan_jobs(bad)  # 40 % 5 = 0 but 8 is even
    ok = _cfg("committee-sweep", tmp_path, n=45, alpha=0.4, k_units=5,
              y=4, beta=8.0)
    assert plan_jobs(ok)[0][0] == "committee_y4_seed0"


def test_sa_explicit_betas_length_checked(tmp_path):
    cfg = _cfg("sa-sweep", tmp_path, n=40, alpha=0.4, beta_quantum=8.0,
               tau=1, betas=[1.0, 2.0])
    with pytest.raises(ConfigError, match="betas"):
        plan_jobs(cfg)


def test_config_error_leaves_no_files(tmp_path):
    out = tmp_path / "never"
    cfg = _cfg("sa-sweep", out, n=40, alpha=0.4, beta_quantum=8.0,
               tau=1, betas=[1.0])
    with pytest.raises(ConfigError):
        run(cfg)
    assert not out.exists()


# ---------------------------------------------------------------------------
# end-to-end runs (small sizes)


def test_theory_run_and_manifest_rerun_bit_exact(tmp_path):
    cfg = _cfg("theory", tmp_path / "a", alpha=0.4, beta=3.0,
               gammas=[1.2, 0.8], nodes=32)
    manifest = run(cfg)
    assert manifest["n_failed"] == 0
    csv_a = (tmp_path / "a" / "theory.csv").read_bytes()
    lines = csv_a.decode().splitlines()
    assert lines[0] == ("gamma,q0,q1,p0hat,p1hat,E,T,H,phi,converged")
    assert len(lines) == 3

    cfg2 = ExperimentConfig.from_file(str(tmp_path / "a" / "manifest.json"),
                                      out_dir=str(tmp_path / "b"))
    run(cfg2)
    assert (tmp_path / "b" / "theory.csv").read_bytes() == csv_a


def test_manifest_config_hash(tmp_path):
    cfg = _cfg("theory", tmp_path, alpha=0.4, beta=3.0, gammas=[1.0],
               nodes=32)
    manifest = run(cfg)
    import hashlib
    expect = hashlib.sha256(
        json.dumps(cfg.as_dict(), sort_keys=True).encode()).hexdigest()
    assert manifest["config_sha256"] == expect
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["config_sha256"] == expect


def test_sqa_sweep_traces(tmp_path):
    cfg = _cfg("sqa-sweep", tmp_path, seed=7, n=30, alpha=0.4, y=4,
               n_seeds=2, beta=8.0, tau=1, flips_per_site=100.0)
    manifest = run(cfg)
    assert manifest["n_failed"] == 0
    for s in range(2):
        head = (tmp_path / f"sqa_y4_seed{s}.csv").read_text().splitlines()[0]
        assert head.startswith("step,gamma,beta,energy_density,q1_lag")
    a = (tmp_path / "sqa_y4_seed0.csv").read_bytes()
    b = (tmp_path / "sqa_y4_seed1.csv").read_bytes()
    assert a != b  # different seeds, different chains


def test_sa_sweep_derives_beta_ladder(tmp_path):
    cfg = _cfg("sa-sweep", tmp_path, n=30, alpha=0.4, beta_quantum=8.0,
               tau=1, flips_per_site=100.0, nodes=32)
    run(cfg)
    rows = (tmp_path / "sa_seed0.csv").read_text().splitlines()
    betas = [float(r.split(",")[2]) for r in rows[1:]]
    assert len(betas) == 30
    assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(betas, betas[1:]))
    # the final stage sits at zero field, where the equivalent-temperature
    # map jumps vertically to the quantum beta target
    assert betas[-1] == pytest.approx(8.0)
    assert betas[-2] < 8.0
    assert betas[-1] > 2.0 * betas[0]


def test_gaps_job_writes_both_tables(tmp_path):
    cfg = _cfg("gaps", tmp_path, seed=3, n=10, p=8, seed_index=0,
               gammas=[0.6, 0.4], tables="both")
    manifest = run(cfg)
    assert manifest["n_failed"] == 0
    for fname in ("gaps_original.csv", "gaps_randomized.csv"):
        rows = (tmp_path / fname).read_text().splitlines()
        assert rows[0] == "gamma,H0,H1"
        assert len(rows) == 3
        for r in rows[1:]:
            g, h0, h1 = map(float, r.split(","))
            assert h1 >= h0


def test_exact_qa_state_roundtrip(tmp_path):
    cfg = _cfg("exact-qa", tmp_path, n=8, p=6, seed_index=0,
               gamma_start=1.5, delta_gamma=0.05, delta_t=0.2,
               record_every=10, save_state=True)
    run(cfg)
    z = np.load(tmp_path / "exact_qa_state.npz")
    psi = z["amplitudes"]
    assert psi.shape == (256,)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)
    rows = (tmp_path / "exact_qa.csv").read_text().splitlines()
    assert rows[0] == "gamma,E_mean"
    assert float(rows[-1].split(",")[0]) == 0.0


def test_stats_job_from_state_file(tmp_path):
    run(_cfg("exact-qa", tmp_path / "qa", n=8, p=6, seed_index=0,
             gamma_start=1.5, delta_gamma=0.05, delta_t=0.2,
             save_state=True))
    cfg = _cfg("stats", tmp_path / "st", n=8, p=6, seed_index=0,
               state_file=str(tmp_path / "qa" / "exact_qa_state.npz"),
               sqa_y=4, sqa_tau=1, sqa_beta=10.0)
    manifest = run(cfg)
    assert manifest["n_failed"] == 0
    rec = json.loads((tmp_path / "st" / "stats.json").read_text())
    assert set(rec) == {"n_sol", "p_sol", "E_mean", "E_argmax",
                        "p_argmax", "ipr", "dbar", "rank_sqa"}
    assert 0.0 <= rec["p_sol"] <= 1.0
    assert rec["rank_sqa"] >= 1
    if rec["n_sol"] > 0:
        rows = (tmp_path / "st" / "local_entropy.csv").read_text().splitlines()
        assert rows[0] == "d,phi_w,phi_sol"
        assert len(rows) == 8 + 2  # one row per Hamming distance 0..n
    inst = model.generate_instance(8, 6, rng.generator_for(0, "instance", 0))
    table = model.enumerate_table(inst, "r0")
    assert rec["n_sol"] == int(np.sum(table == 0.0))


def test_bp_profile_distances_shrink_with_lambda(tmp_path):
    cfg = _cfg("bp-profile", tmp_path, n=15, p=6, seed_index=0,
               lambdas=[0.0, 1.0, 2.0], reference="mode",
               profile="entropy")
    run(cfg)
    rows = (tmp_path / "bp_entropy.csv").read_text().splitlines()
    assert rows[0] == "lambda,distance,value,converged,iters"
    d = [float(r.split(",")[1]) for r in rows[1:]]
    assert d[0] > d[-1] >= 0.0


def test_failed_job_recorded_not_raised(tmp_path):
    cfg = _cfg("stats", tmp_path, n=8, p=6, seed_index=0,
               state_file=str(tmp_path / "missing.npz"))
    manifest = run(cfg)
    assert manifest["n_failed"] == 1
    job = manifest["jobs"][0]
    assert job["status"] == "failed" and "error" in job
    assert not (tmp_path / "stats.json").exists()


# ---------------------------------------------------------------------------
# sample selection


def test_select_samples_small_deterministic():
    kw = dict(n=12, p=10, pool=40, min_solutions=4, fast_tau=1,
              sqa_y=8, seed=5, beta=12.0, sqa_tau=1, nodes=32)
    a = select_samples(**kw)
    b = select_samples(**kw)
    assert [r.index for r in a.records] == [r.index for r in b.records]
    assert a.counts == b.counts
    assert a.counts["pool"] == 40
    assert a.counts["kept"] == len(a.records) > 0
    for rec in a.records:
        assert rec.n_sol >= 4
        assert rec.sa_final_energy > 0.0  # SA must have failed
        assert rec.sqa_final_energy == 0.0  # SQA must have succeeded
        table = rec.table()
        assert int(np.sum(table == 0.0)) == rec.n_sol


def test_select_samples_max_keep_stops_early():
    s = select_samples(n=12, p=10, pool=40, min_solutions=4, fast_tau=1,
                       sqa_y=8, seed=5, beta=12.0, sqa_tau=1,
                       max_keep=1, nodes=32)
    assert len(s.records) == 1


def test_select_samples_empty_pool_raises():
    with pytest.raises(RuntimeError, match="no samples"):
        # min_solutions above 2^n: nothing can pass the threshold
        select_samples(n=8, p=6, pool=3, min_solutions=10**6, fast_tau=1,
                       sqa_y=4, seed=0, beta=10.0, sqa_tau=1, nodes=32)


def test_select_job_writes_instances_and_json(tmp_path):
    cfg = _cfg("select-samples", tmp_path, seed=5, n=12, p=10, pool=40,
               min_solutions=4, fast_tau=1, sqa_y=8, beta=12.0,
               sqa_tau=1, max_keep=2, nodes=32)
    manifest = run(cfg)
    assert manifest["n_failed"] == 0
    sel = json.loads((tmp_path / "selection.json").read_text())
    assert sel["counts"]["kept"] == len(sel["samples"])
    assert 1 <= len(sel["samples"]) <= 2  # max_keep caps, pool may give fewer
    for s in sel["samples"]:
        path = tmp_path / f"sample_{s['index']:03d}.txt"
        inst = model.load_instance(str(path))
        assert inst.n == 12 and inst.p == 10
        assert s["sqa_config_index"] < 2**12
        assert s["n_sol"] >= 4


# ---------------------------------------------------------------------------
# CLI


def test_cli_ok_and_exit_codes(tmp_path, capsys):
    cfg_file = tmp_path / "t.json"
    cfg_file.write_text(json.dumps(
        {"kind": "theory", "seed": 0, "alpha": 0.4, "beta": 3.0,
         "gammas": [1.0], "nodes": 32}))
    out = tmp_path / "run"
    assert cli.main(["theory", "--config", str(cfg_file),
                     "--out", str(out)]) == 0
    assert "1/1 jobs ok" in capsys.readouterr().out
    assert (out / "theory.csv").exists()


def test_cli_kind_mismatch(tmp_path, capsys):
    cfg_file = tmp_path / "t.json"
    cfg_file.write_text(json.dumps(
        {"kind": "theory", "alpha": 0.4, "beta": 3.0, "gammas": [1.0]}))
    assert cli.main(["gaps", "--config", str(cfg_file)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_missing_config_and_schema(capsys):
    assert cli.main(["theory"]) == 2
    capsys.readouterr()
    assert cli.main(["theory", "--print-schema"]) == 0
    assert "alpha" in capsys.readouterr().out
    assert cli.main(["run", "--print-schema"]) == 0
    assert "select-samples" in capsys.readouterr().out


def test_cli_failed_job_exit_one(tmp_path, capsys):
    cfg_file = tmp_path / "t.json"
    cfg_file.write_text(json.dumps(
        {"kind": "stats", "n": 8, "p": 6, "seed_index": 0,
         "state_file": str(tmp_path / "absent.npz")}))
    assert cli.main(["stats", "--config", str(cfg_file),
                     "--out", str(tmp_path / "o")]) == 1
    assert "failed" in capsys.readouterr().err


def test_cli_seed_override(tmp_path):
    cfg_file = tmp_path / "t.json"
    cfg_file.write_text(json.dumps(
        {"kind": "theory", "seed": 3, "alpha": 0.4, "beta": 3.0,
         "gammas": [1.0], "nodes": 32}))
    assert cli.main(["theory", "--config", str(cfg_file), "--seed", "11",
                     "--out", str(tmp_path / "o")]) == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["base_seed"] == 11
