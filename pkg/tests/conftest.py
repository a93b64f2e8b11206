import numpy as np
import pytest

from attnfilter import VitConfig, init_weights, use_backend
from attnfilter.backend import available_backends


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, after the test run."""
    import acceptance_log

    ran_acceptance = any(
        "test_acceptance" in rep.nodeid
        for reps in terminalreporter.stats.values()
        for rep in reps
        if hasattr(rep, "nodeid")
    )
    if not ran_acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, title in sorted(acceptance_log.CRITERIA.items()):
        if number in acceptance_log.RESULTS:
            detail = acceptance_log.RESULTS[number]
            suffix = f" [{detail}]" if detail else ""
            terminalreporter.write_line(f"criterion {number:2d}: PASS — {title}{suffix}")
        else:
            terminalreporter.write_line(f"criterion {number:2d}: FAIL — {title}")


@pytest.fixture(params=available_backends())
def backend(request):
    """Run the test once per kernel backend."""
    previous = use_backend(request.param)
    yield request.param
    use_backend(previous)


@pytest.fixture
def tiny_config():
    # 8x8 image, 4px patches -> 2x2 grid, T=4
    return VitConfig(image_size=8, patch_size=4, channels=1, d_model=8, heads=2, layers=2)


@pytest.fixture
def tiny_weights(tiny_config):
    return init_weights(tiny_config, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
