import numpy as np
import pytest

from nlspc import Field, build_grid, potential_values, pure_power


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_spec():
    return build_grid(2, 1, (3.0, 4.0), (9, 11))


@pytest.fixture
def small_V(small_spec):
    return potential_values(small_spec)


@pytest.fixture
def quartic():
    return pure_power(4.0)


@pytest.fixture
def random_field(small_spec, rng):
    return Field(small_spec, rng.standard_normal(small_spec.shape))


@pytest.fixture
def acceptance_line(capsys):
    """Print one pass/fail line per acceptance criterion, bypassing capture."""
    def emit(criterion: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            mark = "PASS" if ok else "FAIL"
            suffix = f"  ({detail})" if detail else ""
            print(f"[acceptance] {mark}  {criterion}{suffix}")
    return emit
