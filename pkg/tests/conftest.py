import pytest

from grassroots_bonds.bonds import AgentLedger, mint
from grassroots_bonds.sim import run_scenario, shipped


def ledger(owner, *mints, day=0):
    """A ledger that has minted ``(k, maturity)`` batches in order."""
    led = AgentLedger(owner, local_date=day)
    for k, m in mints:
        led = mint(led, k, m)
    return led


def holds(led, issuer, maturity):
    return led.holdings.count_exact(issuer, maturity)


@pytest.fixture(scope="session")
def village():
    return run_scenario(shipped("village-market"), seed=42)


# -- acceptance reporting ----------------------------------------------------------
# tests marked ``criterion(n, title)`` get one PASS/FAIL line in the summary;
# ``record_property("detail", ...)`` adds a note to it


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    n, title = mark.args
    detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
    status = "PASS" if rep.passed else "FAIL"
    prev = item.config._criteria.get(n)
    if prev is None or status == "FAIL":
        item.config._criteria[n] = (status, title, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        status, title, detail = crit[n]
        line = f"{status} criterion {n:>2}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
