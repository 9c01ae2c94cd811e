import pytest

from spinchaos import build_model_params, parse_config, run_ensemble

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def config():
    return parse_config("")


@pytest.fixture(scope="session")
def params(config):
    return build_model_params(config)


@pytest.fixture(scope="session")
def reduced_result(config, params):
    """The shipped reduced ensemble (101 x 20); shared across test modules."""
    return run_ensemble(params, config.n_angles, config.n_runs,
                        config.master_seed)


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for acceptance-criterion outcomes; one line per criterion."""

    def record(num, description, passed):
        _ACCEPTANCE_LINES.append((num, description, bool(passed)))
        assert passed, f"acceptance criterion {num} failed: {description}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num, description, passed in sorted(_ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{num:>2}] {status}  {description}")
