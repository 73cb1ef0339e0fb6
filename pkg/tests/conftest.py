from __future__ import annotations

import pytest

from popdyn import cli, config

# one line per acceptance criterion, filled in by test_acceptance
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    prev = CRITERIA.get(number)
    if prev is not None:
        passed = passed and prev[0]
        detail = f"{prev[1]}; {detail}"
    CRITERIA[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


class PresetRuns:
    """Runs each preset arm once per session and keeps the results."""

    def __init__(self, root):
        self.root = root
        self._cache: dict[str, cli.CompareResult] = {}

    def arms(self, preset: str):
        return config.preset(preset)

    def result(self, arm: config.ScenarioConfig) -> cli.CompareResult:
        if arm.name not in self._cache:
            self._cache[arm.name] = cli.cmd_compare(arm, self.root / "first" / arm.name)
        return self._cache[arm.name]

    def by_family(self, preset: str) -> dict[str, cli.CompareResult]:
        return {a.learner.family: self.result(a) for a in self.arms(preset)}


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    return PresetRuns(tmp_path_factory.mktemp("presets"))
