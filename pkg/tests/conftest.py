import sys
from pathlib import Path

# let test modules import the shared fixture builders next to them
sys.path.insert(0, str(Path(__file__).parent))


import pytest

from holdem_xai.config import GameConfig, RunManifest
from holdem_xai.runner import run_battles, run_paths


def small_manifest(tmp_path, **game) -> RunManifest:
    params = dict(battles=2, hands_per_battle=8, mc_simulations=200, rng_seed=5)
    params.update(game)
    return RunManifest(game=GameConfig(**params), oracles=("scripted-oracle-a",), out_dir=str(tmp_path))


@pytest.fixture(scope="session")
def played_run(tmp_path_factory):
    """A small offline run shared by tests that only read its traces."""
    manifest = small_manifest(tmp_path_factory.mktemp("run"))
    outcomes = run_battles(manifest)
    return manifest, run_paths(manifest), outcomes


# ------------------------------------------------- acceptance summary lines

_criteria: dict[str, tuple[int, str]] = {}
_results: dict[int, tuple[str, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            _criteria[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    number, title = _criteria[report.nodeid]
    if report.when == "call" or report.outcome != "passed":
        if number in _results and _results[number][0] == "FAIL":
            return
        _results[number] = ("PASS" if report.outcome == "passed" else "FAIL" if report.failed else "SKIP", title)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        status, title = _results[number]
        terminalreporter.write_line(f"AC{number:02d} {status}  {title}")
