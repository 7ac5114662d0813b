import pytest

VERDICTS: dict = {}


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call ``verdict(n, detail)`` before the assertions; the line flips to PASS
    only if the test body finishes without failing.
    """
    state = {}

    def note(n, detail=""):
        state["n"], state["detail"] = n, detail

    yield note
    if "n" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        VERDICTS[state["n"]] = f"criterion {state['n']}: {'PASS' if ok else 'FAIL'}  {state['detail']}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
