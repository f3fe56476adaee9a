import json
import math

import pytest

import usocost


def test_fit_table3():
    records = usocost.load_exchange_csv("table3.csv")
    assert len(records) == 10
    model = usocost.fit_records(records)
    assert model.intercept == pytest.approx(3.4647119331886653, rel=1e-12)
    assert model.slope == pytest.approx(-0.44019073507157924, rel=1e-12)
    assert model.n == 10


def test_fit_points_and_predict():
    pts = [(d, math.exp(2.0 - 0.5 * math.log(d)) * (1.01 if i % 2 else 0.99)) for i, d in enumerate([1, 2, 4, 8, 16])]
    model = usocost.fit_loglog(pts)
    assert model.slope == pytest.approx(-0.5, abs=0.05)
    published = usocost.LoopCostModel.published()
    assert usocost.predict_cost(published, 2.8) == pytest.approx(published.predict(2.8))
    assert usocost.predict_cost(published, 80) == usocost.predict_cost(published, 50)


def test_density_size_and_bands():
    assert usocost.DensitySizeModel().density(100) == pytest.approx(1.8069)
    assert usocost.density_band(5.0) == "from_5_to_10"
    assert usocost.ckm_per_line(3.5) == 7.0


def test_summary_and_validation():
    records = usocost.load_exchange_csv("table3.csv")
    row = usocost.summarize_records(records)
    assert row["cost_per_line"] == pytest.approx(9.57255460588794, rel=1e-12)
    report = usocost.validate_records(records)
    assert report["passed"] is True


def test_sdca():
    est = usocost.estimate_sdca_cost({"sdca_id": "S", "exchange_sizes": [100]})
    assert est["weighted_cost_per_line"] == pytest.approx(24.681146470438808, rel=1e-12)


def test_nusc():
    rows = usocost.nusc_grid({"discount_rate": 0.0, "lifetime": 10, "revenue": 0.0})
    assert [r["capex"] for r in rows] == [50, 75, 100]
    assert rows[1]["nusc"] == 7.5
    assert usocost.capital_recovery_factor(0.0, 8) == 0.125


def test_simulation_is_deterministic():
    with open(usocost.fixture_dir() / "sim_demo.json") as f:
        config = json.load(f)
    a = usocost.run_simulation(config)
    b = usocost.run_simulation(config)
    assert a == b
    assert a["ledger"]["period"] == config["periods"]


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        usocost.fit_loglog([(1.0, 1.0), (2.0, 1.0)])
    with pytest.raises(ValueError):
        usocost.nusc_grid({"discount_rate": 0.1, "lifetime": 0, "revenue": 0.0})
