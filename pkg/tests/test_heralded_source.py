import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim.errors import DegenerateError
from heraldsim.heralded_source import (
    CountDistribution,
    Moments,
    SourceParams,
    click_distribution,
    g2_click,
    g2_perfect,
    herald_distribution,
    joint_probability,
    joint_table,
    moments,
    noclick_distribution,
    povm_click_weights,
    sweep_grid,
)


def _squeezed_vacuum_click(n, r, eta):
    """Click-heralded distribution with no displacement: only n_a = n_b terms survive."""
    if n == 0:
        return 0.0
    t2 = math.tanh(r) ** 2
    return eta * (1 - eta) ** (n - 1) * t2**n / math.cosh(r) ** 2


# ---------------------------------------------------------------- POVM


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(1, 60))
def test_povm_weights_bounded_and_complete(eta, k_max):
    w = povm_click_weights(eta, k_max)
    assert w[0] == 0
    assert np.all((w >= 0) & (w <= 1))
    # M + (I - M) = I is trivial; the content is that 1 - w is a valid no-click weight
    assert np.all(1 - w >= 0)
    # cumulative click weight is 1 - (1-eta)^k_max, the full-click limit
    assert w.sum() == pytest.approx(1 - (1 - eta) ** k_max, abs=1e-12)


def test_povm_unit_efficiency_is_single_photon_projector():
    w = povm_click_weights(1.0, 10)
    assert np.array_equal(w, np.eye(11)[1])


def test_click_reduces_to_perfect_herald_at_unit_efficiency():
    p = SourceParams(0.06, 0.9, eta=1.0)
    assert np.max(np.abs(click_distribution(p).p - herald_distribution(p).p)) <= 1e-12


@pytest.mark.parametrize("eta", [0.3, 0.7, 1.0])
def test_click_plus_noclick_is_marginal(eta):
    p = SourceParams(0.06, 1.2, eta=eta)
    marginal = joint_table(p).sum(axis=1)
    total = click_distribution(p).p + noclick_distribution(p).p
    assert np.max(np.abs(total - marginal)) <= 1e-12


@pytest.mark.parametrize("r, eta", [(0.5, 0.7), (1.2, 0.84), (1.5, 0.3)])
def test_click_closed_form_without_displacement(r, eta):
    dist = click_distribution(SourceParams(0.0, r, eta=eta))
    for n in range(8):
        assert dist.p[n] == pytest.approx(_squeezed_vacuum_click(n, r, eta), abs=1e-14)


# ---------------------------------------------------------------- joint probabilities


def test_p11_without_displacement():
    r = 0.6
    expected = math.tanh(r) ** 2 / math.cosh(r) ** 2
    assert joint_probability(1, 1, SourceParams(0.0, r)) == pytest.approx(expected, abs=1e-15)


def test_p11_values_at_weak_displacement():
    assert joint_probability(1, 1, SourceParams(0.06, 0.883)) == pytest.approx(0.249, abs=1e-3)
    assert joint_probability(1, 1, SourceParams(0.06, 1.5)) == pytest.approx(0.148, abs=2e-3)


def test_joint_table_read_only_and_normalized():
    table = joint_table(SourceParams(1.5, 1.5))
    assert not table.flags.writeable
    assert 1 - table.sum() <= 1e-8


def test_joint_probability_index_errors():
    p = SourceParams(0.06, 0.5)
    with pytest.raises(ValueError):
        joint_probability(-1, 0, p)
    with pytest.raises(ValueError):
        joint_probability(10_000, 0, p)


# ---------------------------------------------------------------- g2


def test_g2_vanishes_for_squeezed_vacuum_perfect_herald():
    assert g2_perfect(SourceParams(0.0, 0.9)) == pytest.approx(0.0, abs=1e-14)


def test_g2_click_closed_form_without_displacement():
    r, eta = 1.1, 0.6
    n = np.arange(200)
    p = np.array([_squeezed_vacuum_click(k, r, eta) for k in n])
    m1, m2 = (n * p).sum(), (n * n * p).sum()
    assert g2_click(SourceParams(0.0, r, eta=eta)) == pytest.approx((m2 - m1) / m1**2, rel=1e-10)


def test_g2_published_values():
    assert g2_perfect(SourceParams(0.06, 0.883)) == pytest.approx(0.0144, rel=0.02)
    assert g2_perfect(SourceParams(0.06, 1.5)) == pytest.approx(8.78e-3, rel=0.02)


def test_g2_coherent_limit():
    assert g2_perfect(SourceParams(0.06, 0.0)) == 1.0
    assert g2_click(SourceParams(0.06, 0.0, eta=0.5)) == 1.0
    with pytest.raises(DegenerateError):
        g2_perfect(SourceParams(0.0, 0.0))
    with pytest.raises(DegenerateError):
        g2_click(SourceParams(0.06, 0.0, eta=0.0))


def test_raw_g2_grows_as_squeezing_vanishes():
    # raw moments carry 1/P_herald, which diverges as r -> 0
    assert g2_perfect(SourceParams(0.06, 1e-4)) > 100


def test_conditional_g2_relation():
    m = moments(herald_distribution(SourceParams(0.06, 0.883)))
    assert m.g2_conditional == pytest.approx(m.g2 * m.herald_probability, rel=1e-12)


def test_inefficiency_raises_g2():
    base = SourceParams(0.06, 1.5)
    values = [g2_click(base.replace(eta=eta)) for eta in (1.0, 0.84, 0.7)]
    assert values[0] < 0.1 < values[1] < values[2]


def test_moments_of_known_distribution():
    m = moments(CountDistribution.from_probabilities([0.5, 0.25, 0.25]))
    assert (m.mean, m.second, m.herald_probability) == (0.75, 1.25, 1.0)
    assert m.g2 == pytest.approx((1.25 - 0.75) / 0.75**2)
    with pytest.raises(DegenerateError):
        Moments(0.0, 0.0, 1.0).g2


def test_params_validation():
    with pytest.raises(ValueError):
        SourceParams(0.06, -0.1)
    with pytest.raises(ValueError):
        SourceParams(0.06, 0.5, eta=1.2)
    with pytest.raises(ValueError):
        SourceParams(0.06j, 0.5)


# ---------------------------------------------------------------- sweeps


def test_sweep_preserves_order_and_matches_pointwise():
    rows = sweep_grid("g2_click", [0.5, 1.0], [0.7, 1.0], SourceParams(0.06, 0.0), threads=3)
    assert [(row.r, row.second_axis) for row in rows] == [(0.5, 0.7), (0.5, 1.0), (1.0, 0.7), (1.0, 1.0)]
    assert rows[3].value == g2_click(SourceParams(0.06, 1.0, eta=1.0))


def test_sweep_threads_are_deterministic():
    args = ("P11", [0.2, 0.6, 1.4], [0.0, 0.06], SourceParams(0.0, 0.0))
    one = [row.as_tuple() for row in sweep_grid(*args, threads=1)]
    many = [row.as_tuple() for row in sweep_grid(*args, threads=4)]
    assert one == many


def test_sweep_records_cell_errors():
    rows = sweep_grid("g2_perfect", [0.0], [0.0, 0.06], SourceParams(0.0, 0.0), threads=1)
    assert rows[0].error.startswith("DegenerateError") and math.isnan(rows[0].value)
    assert rows[1].error == "" and rows[1].value == 1.0


@pytest.mark.parametrize("grid", [[], [0.5, 0.5], [1.0, 0.5]])
def test_sweep_rejects_bad_grids(grid):
    with pytest.raises(ValueError):
        sweep_grid("P11", grid, [0.06], SourceParams(0.0, 0.0))
