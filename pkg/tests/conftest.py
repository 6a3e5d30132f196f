import numpy as np
import pytest

from phiscore import synthbench
from phiscore.config import RunConfig, load_config
from phiscore.report import run_pipeline


@pytest.fixture(scope="session")
def cohort_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("cohort")
    specs = synthbench.default_cohort()
    synthbench.generate_cohort(specs, d / "cohort.csv", d / "truth.json")
    return d / "cohort.csv", d / "truth.json", specs


@pytest.fixture(scope="session")
def fast_config():
    # fewer permutations keep the shared pipeline fixture quick
    return load_config(None, ["anchoring.n_perm=1000"])


@pytest.fixture(scope="session")
def pipeline_result(cohort_csv, fast_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    return run_pipeline(fast_config, [cohort_csv[0]], out), out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary and assert it."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(label: str, ok: bool, detail: str = "") -> None:
        line = f"{label}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
