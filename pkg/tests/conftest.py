import numpy as np
import pytest

from superstat.densities import IGa, ModelSpec
from superstat.marketdata import ReturnSeries
from superstat.synthetic import GeneratorConfig, gen_prices_from_returns, gen_superstat

THETA_TRUE = 1.5
CONJ_PRIOR = ModelSpec(IGa(2.0, 2.0), 0.0)

# year of minute bars: 2020-01-01T00:00Z plus 525,599 one-minute steps
YEAR_START = 1577836800
YEAR_MODEL = ModelSpec(IGa(3.0, 2e-8), 0.0)
YEAR_CONFIG = GeneratorConfig(YEAR_MODEL, 525_599, 1440, 2020)
YEAR_P0 = 3230.0


@pytest.fixture(scope="session")
def conjugate_data() -> ReturnSeries:
    """n = 10^4 draws from N(0, 1.5)."""
    rng = np.random.default_rng(20201)
    return ReturnSeries(np.sqrt(THETA_TRUE) * rng.standard_normal(10_000))


@pytest.fixture(scope="session")
def year_prices():
    returns, _ = gen_superstat(YEAR_CONFIG)
    return gen_prices_from_returns(returns, YEAR_P0, YEAR_START, 60)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    def report(tag: str, ok: bool, detail: str):
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
        print(_ACCEPTANCE[-1])
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
