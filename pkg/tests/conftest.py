"""Shared pytest wiring: a one-line pass/fail summary per acceptance criterion."""

from hypothesis import settings

# derandomized hypothesis keeps the whole suite bit-stable run to run
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")

_acceptance_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in sorted(_acceptance_results):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
