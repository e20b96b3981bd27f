from __future__ import annotations

import re

import pytest

from ftrerank.schema import LabelSchema, Task
from helpers import NER_LABELS


@pytest.fixture
def ner_schema() -> LabelSchema:
    return LabelSchema(task=Task.NER, labels=NER_LABELS)


# one summary line per acceptance criterion, printed after the run
_CRITERIA = {
    "test_a1": "A1 routing identity",
    "test_a2": "A2 first-choice no-op",
    "test_a3": "A3 oracle uplift",
    "test_a4": "A4 metric oracle equivalence",
    "test_a5": "A5 sampler guarantee",
    "test_a6": "A6 threshold monotonicity and tuning",
    "test_a7": "A7 parse robustness",
    "test_a8": "A8 template fidelity",
    "test_a9": "A9 call budget",
    "test_a10": "A10 determinism",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, str] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.rsplit("::", 1)[-1]
            m = re.match(r"test_a\d+", name)
            key = m.group(0) if m else ""
            if key in _CRITERIA:
                verdict = "PASS" if status == "passed" else status.upper()
                if outcomes.get(key) != "FAILED":
                    outcomes[key] = "FAIL" if status in ("failed", "error") else verdict
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(outcomes, key=lambda k: int(k[6:])):
        terminalreporter.write_line(f"{_CRITERIA[key]}: {outcomes[key]}")
