import pytest

CRITERIA = {
    1: "eta=0 feedback generator identical to the plain generator",
    2: "feedback amplitude 0 and 1 leave sigma_e unchanged",
    3: "steady state agrees with long-time propagation (N <= 3, 12 cases)",
    4: "single-molecule rate balance",
    5: "linear response in the pump rate",
    6: "coupling enhances long chains and suppresses short ones",
    7: "channel additivity at N=60 and bounding at N=10",
    8: "hopping / cavity crossover length in [10, 30]",
    9: "feedback amplitude, efficiency and target dependence",
    10: "site-energy disorder effects",
    11: "invariant suite",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")
    config._criteria_outcomes = {}




@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        results = item.config._criteria_outcomes.setdefault(marker.args[0], [])
        results.append((item.name, not failed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = config._criteria_outcomes
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        if n not in outcomes:
            continue
        results = outcomes[n]
        ok = all(passed for _, passed in results)
        failing = [name for name, passed in results if not passed]
        suffix = f"  (failing: {', '.join(failing)})" if failing else ""
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[n]}{suffix}")
