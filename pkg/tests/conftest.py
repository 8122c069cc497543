import random

import pytest

from podupdate.oabs import oabs_setup

CRITERIA = {
    1: "completeness suite (200 honest end-to-end runs)",
    2: "verification equation vs raw-pairing oracle",
    3: "sigma2 uniqueness and key-free verification",
    4: "DAPS extraction recovers sk and decrypts",
    5: "fairness matrix (5 adversaries x 20 seeds)",
    6: "contract arithmetic vs hand-executed pseudocode",
    7: "unforgeability smoke tests (10^4 + 10^4)",
    8: "sign time strictly increasing over |W|",
    9: "determinism of reports and ledger logs",
}

_outcomes: dict[int, list[str]] = {}
_notes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes.setdefault(marker.args[0], []).append(rep.outcome)
        _notes.setdefault(marker.args[0], []).extend(
            f"{k}={v}" for k, v in rep.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status:<7} {title}")
        for note in _notes.get(k, []):
            terminalreporter.write_line(f"    {note}")


@pytest.fixture(scope="session")
def params16():
    """n=16, l=256: the protocol's default sizes."""
    return oabs_setup(16, 256, random.Random(16))


@pytest.fixture(scope="session")
def params_small():
    """n=8, l=32 keeps property tests quick."""
    return oabs_setup(8, 32, random.Random(8))
