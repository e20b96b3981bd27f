from __future__ import annotations

import re

import pytest


@pytest.fixture
def ner_fixture_sentences():
    """Three sentences; the last two share their text on purpose so the
    embedder's identical-input property is observable."""
    return [
        {"sentence_id": "f0", "tokens": ["Avery", "directed", "Weekend"],
         "annotations": [{"kind": "entity", "start": 0, "end": 1,
                          "label": "person-director"}]},
        {"sentence_id": "f1", "tokens": ["The", "Globe", "reopened"],
         "annotations": [{"kind": "entity", "start": 1, "end": 2,
                          "label": "building-theater"}]},
        {"sentence_id": "f2", "tokens": ["The", "Globe", "reopened"],
         "annotations": []},
    ]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcome = None
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            name = nodeid.rsplit("::", 1)[-1]
            if "test_sidecar_wire.py" not in nodeid or not re.match(r"test_a11", name):
                continue
            if status in ("failed", "error") or outcome != "FAIL":
                outcome = "FAIL" if status in ("failed", "error") else "PASS"
    if outcome is not None:
        terminalreporter.section("acceptance criteria")
        terminalreporter.write_line(f"A11 wire conformance: {outcome}")
