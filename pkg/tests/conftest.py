import io

import pytest

from firmscaling import FirmPanel

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary whatever the capture mode."""

    def _record(number: int, title: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {title} -- {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def panel_from_text(text: str, schema=None) -> FirmPanel:
    from firmscaling import load_panel

    return load_panel(io.BytesIO(text.encode("utf-8")), schema)


@pytest.fixture
def small_panel():
    text = (
        "firm_id,year,classification,sales,employees,assets\n"
        "A,1990,352010,100,10,50\n"
        "A,1991,352010,200,11,55\n"
        "A,1992,352010,150,,60\n"
        "B,1990,452020,50,5,20\n"
        "B,1991,452020,40,5,21\n"
        "B,1992,452020,60,6,22\n"
    )
    return panel_from_text(text)
