import csv
import json

import pytest

from mimcmc.cli import main
from mimcmc.experiments import COST_ERROR_COLUMNS, RATES_COLUMNS, ExperimentConfig, cmd_rates
from mimcmc.validate import run_all


def test_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"nope": 1}))
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_json(p)


def test_config_overrides_and_hash(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"replicates": 3, "cost_levels": [1, 2]}))
    cfg = ExperimentConfig.from_json(p, seed=5)
    assert cfg.replicates == 3 and cfg.cost_levels == (1, 2) and cfg.seed == 5
    assert cfg.digest() != ExperimentConfig().digest()


def test_config_invariants():
    with pytest.raises(ValueError, match="must divide"):
        ExperimentConfig(m=7)
    cfg = ExperimentConfig(paper_scale=True)
    assert cfg.max_levels == (14, 7)


def test_rates_degenerate_grid_errors(tmp_path):
    cfg = ExperimentConfig(rates_levels=(1, 1), rates_samples=10)
    with pytest.raises(ValueError, match="degenerate design matrix"):
        cmd_rates(cfg, tmp_path)


def test_rates_cli_writes_schema_and_is_deterministic(tmp_path):
    args = ["rates", "--samples", "300", "--levels", "2", "2", "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "rates.csv").read_bytes()
    assert a == (tmp_path / "b" / "rates.csv").read_bytes()
    with open(tmp_path / "a" / "rates.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == RATES_COLUMNS
    assert len(rows) == 9
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert {"beta_x", "beta_t", "beta_x_se", "beta_t_se", "config_hash"} <= set(summary)
    assert (tmp_path / "a" / "config.json").exists()


def test_cost_error_cli_small_run(tmp_path):
    out = tmp_path / "ce"
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text(json.dumps({"burn_in_increment": 20, "burn_in_mcmc": 20,
                                "n_multiplier": 1.0, "mcmc_budget_factor": 4.0}))
    args = ["cost-error", "--config", str(cfgp), "--levels", "1", "--replicates", "2",
            "--seed", "3", "--out", str(out)]
    assert main(args) == 0
    with open(out / "cost_error.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == COST_ERROR_COLUMNS
    assert len(rows) == 4  # 2 methods x 1 level x 2 replicates
    assert {r["method"] for r in rows} == {"mimcmc", "mcmc"}
    summary = json.loads((out / "summary.json").read_text())
    assert "fixture_hash" in summary and "mimcmc_cheaper" in summary
    assert (out / "fixture.json").exists()


def test_cost_error_level_ceiling(tmp_path):
    with pytest.raises(ValueError, match="exceeds ceiling"):
        main(["cost-error", "--levels", "5", "--replicates", "1", "--out", str(tmp_path)])


def test_generate_data_refuses_overwrite(tmp_path):
    args = ["generate-data", "--seed", "1", "--out", str(tmp_path)]
    assert main(args) == 0
    with pytest.raises(FileExistsError):
        main(args)
    assert main(args + ["--force"]) == 0


def test_validate_cli_passes():
    assert main(["validate"]) == 0


def test_validate_detects_planted_failure(monkeypatch):
    # a sign flip in the pair weights must break the telescoping check
    import mimcmc.validate as v

    monkeypatch.setattr(v, "delta_weights", lambda a: {c: -w for c, w in __import__("mimcmc").delta_weights(a).items()})
    assert v.run_all(seed=0, verbose=False) is False
