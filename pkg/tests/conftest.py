"""Print one PASS/FAIL line per acceptance criterion at the end of the run."""

ACCEPTANCE_PREFIX = "test_acceptance.py::test_criterion_"


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") not in ("call", "setup") or ACCEPTANCE_PREFIX not in rep.nodeid:
                continue
            if key == "passed" and rep.when != "call":
                continue
            name = rep.nodeid.split("::")[-1]
            title = name[len("test_criterion_"):]
            num, _, label = title.partition("_")
            lines.append((int(num), f"criterion {num} ({label.replace('_', ' ')}): {'PASS' if key == 'passed' else key.upper()}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
