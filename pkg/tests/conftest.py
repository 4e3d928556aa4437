import json
from pathlib import Path

import numpy as np
import pytest

from sparsebudget.core.config import settings
from sparsebudget.schemas.budget import Budget, SmoothnessProfile
from sparsebudget.services.data_env import FeatureLaw, ProblemInstance, make_desk_instance

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def deterministic_settings(monkeypatch):
    monkeypatch.setattr(settings, "PROGRESS", False)
    monkeypatch.setattr(settings, "RECORD_WALL_CLOCK", False)
    monkeypatch.setattr(settings, "WORKERS", 1)


@pytest.fixture(scope="session")
def oracles():
    return json.loads((FIXTURES / "formula_oracles.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def desk_noiseless():
    return make_desk_instance(sigma=0.0, test_size=2000)


@pytest.fixture(scope="session")
def desk_noisy():
    return make_desk_instance(sigma=1.0, test_size=2000)


@pytest.fixture(scope="session")
def desk_budget():
    return Budget(d=100, s_star=10, s=20, s_prime=40)


@pytest.fixture(scope="session")
def unit_profile():
    """Sigma = I: L_s = mu_s = 1"""
    return SmoothnessProfile(L_s=1.0, mu_s=1.0, r_inf=float("inf"))


@pytest.fixture
def finite_instance():
    """Factory for finite-dataset instances over explicit rows"""

    def build(X, y, theta_star=None, test=True):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
        return ProblemInstance(
            d=X.shape[1],
            feature_law=FeatureLaw.FINITE,
            theta_star=theta_star,
            r_inf=float(np.max(np.abs(X))),
            train_X=X,
            train_y=y,
            test_X=X if test else None,
            test_y=y if test else None,
        )

    return build
