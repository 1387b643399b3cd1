import numpy as np
import pytest

from src.core.errors import ParameterError, SyncError
from src.solvers.timeline import check_synchronized, emission_times, substeps


def test_emission_times_always_end_at_the_horizon():
    np.testing.assert_allclose(emission_times(1.0, 0.3), [0.0, 0.3, 0.6, 0.9, 1.0])
    np.testing.assert_allclose(emission_times(1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_zero_horizon_emits_the_initial_time_only():
    np.testing.assert_array_equal(emission_times(0.0, 0.1), [0.0])


@pytest.mark.parametrize("T, emit_dt", [(-1.0, 0.1), (1.0, 0.0), (1.0, -0.5)])
def test_emission_times_reject_bad_arguments(T, emit_dt):
    with pytest.raises(ParameterError):
        emission_times(T, emit_dt)


def test_substeps_split_evenly():
    n, dt = substeps(1.0, 0.3)
    assert n == 4
    assert dt == pytest.approx(0.25)
    assert substeps(0.0, 0.1) == (0, 0.0)


def test_synchronized_sequences_pass():
    check_synchronized([0.0, 0.5, 1.0], np.array([0.0, 0.5, 1.0 + 1e-12]))


@pytest.mark.parametrize("other", [[0.0, 0.5], [0.0, 0.5, 1.1]])
def test_unsynchronized_sequences_raise(other):
    with pytest.raises(SyncError):
        check_synchronized([0.0, 0.5, 1.0], other)
