import pytest

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body still asserts normally."""
    number = request.node.get_closest_marker("criterion").args[0]
    record = {"detail": ""}
    yield record
    ACCEPTANCE[number] = (record.get("passed", False), record["detail"])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker and call.when == "call":
        item.user_properties.append(("criterion_passed", call.excinfo is None))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_teardown(item):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker and marker.args[0] in ACCEPTANCE:
        passed = dict(item.user_properties).get("criterion_passed", False)
        ACCEPTANCE[marker.args[0]] = (passed, ACCEPTANCE[marker.args[0]][1])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
