import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bi3 import suites
from bi3.dataset import Column, Dataset, FeatureSchema, NOMINAL, NUMERIC

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

KEEL_AVAILABLE = suites.keel_path("iris0") is not None
needs_keel = pytest.mark.skipif(not KEEL_AVAILABLE, reason="KEEL data not available "
                                "(install imbalanced-databases or set BI3_KEEL_DIR)")


def make_dataset(X, y, nominal_cols=(), categories=None, name="t"):
    X = np.asarray(X, dtype=np.float64)
    cols = []
    for j in range(X.shape[1]):
        if j in nominal_cols:
            n_cat = int(X[:, j].max()) + 1 if categories is None else categories
            cols.append(Column(f"c{j}", NOMINAL, tuple(f"v{t}" for t in range(n_cat))))
        else:
            cols.append(Column(f"c{j}", NUMERIC))
    return Dataset(X, np.asarray(y), FeatureSchema(tuple(cols)), name=name)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
