import os

import numpy as np
import pytest

from uplift_rank import (
    SplitSpec,
    UpliftDataset,
    fit_encode,
    generate_synthetic,
    hillstrom_default_rules,
    load_hillstrom,
    make_email_campaign_raw,
    split,
)

HILLSTROM_ENV = "UPLIFT_RANK_HILLSTROM_CSV"


@pytest.fixture
def toy_ds():
    """4-row set: T rows score .9 (y=1) / .4 (y=0), C rows .8 (y=1) / .1 (y=0)."""
    return UpliftDataset(
        np.array([[0.9], [0.4], [0.8], [0.1]]),
        [1, 1, 0, 0],
        [1, 0, 1, 0],
        ["s"],
    )


@pytest.fixture
def toy_scorer():
    return lambda x: x[:, 0]


def low_rate_synthetic(n, d=5, seed=0, coef_scale=0.4, uplift_scale=0.2):
    """Synthetic trial with campaign-like outcome rates (~0.15)."""
    rng = np.random.default_rng(seed)
    return generate_synthetic(
        n, d, 0.5,
        rng.normal(size=d) * coef_scale,
        rng.normal(size=d) * uplift_scale,
        seed=seed,
        intercept_base=-2.0,
        intercept_uplift=0.3,
    )


@pytest.fixture(scope="session")
def campaign_small(tmp_path_factory):
    """Simulated campaign raw CSV at 3% scale plus its encoded dataset."""
    path = tmp_path_factory.mktemp("campaign") / "raw.csv"
    make_email_campaign_raw(str(path), seed=11, scale=0.03)
    raw = load_hillstrom(str(path))
    schema, ds = fit_encode(raw, hillstrom_default_rules())
    return {"path": str(path), "raw": raw, "schema": schema, "ds": ds}


@pytest.fixture(scope="session")
def campaign_full(tmp_path_factory):
    """Full-size simulated campaign (42,693 filtered rows), encoded."""
    path = tmp_path_factory.mktemp("campaign_full") / "raw.csv"
    make_email_campaign_raw(str(path), seed=0, scale=1.0)
    raw = load_hillstrom(str(path))
    schema, ds = fit_encode(raw, hillstrom_default_rules())
    return {"path": str(path), "ds": ds}


def hillstrom_csv_path():
    """Path to the real benchmark CSV if the user supplied one."""
    candidates = [os.environ.get(HILLSTROM_ENV)]
    here = os.path.dirname(__file__)
    candidates += [
        os.path.join(here, "data", "hillstrom.csv"),
        os.path.join(here, "..", "data", "hillstrom.csv"),
    ]
    for path in candidates:
        if path and os.path.exists(path):
            return path
    return None


def require_hillstrom():
    path = hillstrom_csv_path()
    if path is None:
        pytest.skip(
            "real benchmark CSV not present; set UPLIFT_RANK_HILLSTROM_CSV or put it "
            "at tests/data/hillstrom.csv (see README) to run this criterion as stated"
        )
    return path


@pytest.fixture
def three_way_split():
    def _split(ds, seed=0):
        return split(ds, SplitSpec(0.56, 0.14, seed=seed))

    return _split
