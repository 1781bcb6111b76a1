from hypothesis import settings

settings.register_profile("shiftlab", deadline=None, max_examples=40)
settings.load_profile("shiftlab")

_acceptance: dict[str, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one test per acceptance criterion")


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords or (report.when != "call" and not report.failed):
        return
    # parametrized criteria pass only if every case passes
    name = report.nodeid.split("::")[-1].split("[")[0]
    _acceptance[name] = _acceptance.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        terminalreporter.write_line(f"{'PASS' if _acceptance[name] else 'FAIL'}  {name}")
