"""Universal service obligation cost toolkit.

Thin wrappers over the native core. Structured results come back as plain
dicts and lists.
"""

import json as _json
import os as _os
from pathlib import Path as _Path

_bundled = _Path(__file__).with_name("data")
if _bundled.is_dir():
    _os.environ.setdefault("USOCOST_FIXTURE_DIR", str(_bundled))

from . import _core  # noqa: E402
from ._core import (  # noqa: E402,F401
    ConfigError,
    DensitySizeModel,
    DomainError,
    LedgerError,
    LoopCostModel,
    ParseError,
    capital_recovery_factor,
    ckm_per_line,
    density_band,
    fit_loglog,
    predict_cost,
)

__all__ = [
    "ConfigError",
    "DensitySizeModel",
    "DomainError",
    "LedgerError",
    "LoopCostModel",
    "ParseError",
    "capital_recovery_factor",
    "ckm_per_line",
    "density_band",
    "estimate_sdca_cost",
    "fit_loglog",
    "fit_records",
    "fixture_dir",
    "load_exchange_csv",
    "nusc_grid",
    "predict_cost",
    "run_simulation",
    "summarize_records",
    "validate_records",
]


def fixture_dir():
    return _Path(_core.fixture_dir())


def load_exchange_csv(path="table3.csv"):
    """Exchange records from a CSV file (bare names resolve in the fixture dir)."""
    return _json.loads(_core.load_exchange_csv(str(path)))


def fit_records(records, density_cap=50.0):
    return _core.fit_records(_json.dumps(records), density_cap)


def summarize_records(records):
    return _json.loads(_core.summarize_records(_json.dumps(records)))


def validate_records(records, **tolerances):
    return _json.loads(_core.validate_records(_json.dumps(records), **tolerances))


def estimate_sdca_cost(profile, size_model=None, loop_model=None):
    return _json.loads(
        _core.estimate_sdca_cost(
            _json.dumps(profile),
            size_model or DensitySizeModel(),
            loop_model or LoopCostModel.published(),
        )
    )


def nusc_grid(scenario, capex=None):
    return _json.loads(_core.nusc_grid(_json.dumps(scenario), capex))


def run_simulation(config):
    return _json.loads(_core.run_simulation(_json.dumps(config)))
