import sys

import numpy as np
import pytest

from synthmarket.panel import ReturnsPanel, synthetic_dates


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # acceptance verdicts, re-emitted outside capture so they always show
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICT_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def make_panel(values, tickers=None) -> ReturnsPanel:
    values = np.asarray(values, dtype=np.float64)
    n, d = values.shape
    if tickers is None:
        tickers = tuple(f"T{j:02d}" for j in range(d))
    return ReturnsPanel(dates=synthetic_dates(n), tickers=tuple(tickers), values=values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def small_panel(rng):
    # 300 x 6 correlated heavy-ish panel, enough structure for factor tests
    common = rng.standard_normal((300, 1))
    idio = rng.standard_t(df=8, size=(300, 6)) * 0.7
    vals = 0.01 * (common @ np.linspace(0.6, 1.4, 6)[None, :] + idio)
    return make_panel(vals)
