import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagin_ia import linalg, ris
from sagin_ia.schemes import nocsi

from conftest import crandn, make_channels


def _random_constraint(rng, n, l, zero=False):
    t = np.zeros((n, n), complex) if zero else crandn(rng, n, n)
    return ris.NullConstraint(t, crandn(rng, n, l), crandn(rng, l, n))


def test_assemble_dims(rng):
    system, rhs = ris.assemble([_random_constraint(rng, 2, 8)])
    assert system.shape == (4, 8) and rhs.shape == (4,)


def test_assemble_zero_rhs(rng):
    _, rhs = ris.assemble([_random_constraint(rng, 2, 8, zero=True)])
    assert not np.any(rhs)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_assembled_rows_match_kron_beta(n, l, seed):
    rng = np.random.default_rng(seed)
    c = _random_constraint(rng, n, l)
    system, rhs = ris.assemble([c])
    oracle = linalg.kron(c.f_bar.T, c.g_bar) @ linalg.selector_beta(l)
    assert np.allclose(system, oracle, atol=1e-12)
    alpha = crandn(rng, l)
    assert np.allclose(system @ alpha, linalg.vec(c.g_bar @ np.diag(alpha) @ c.f_bar))
    assert np.allclose(rhs, -linalg.vec(c.target))


def test_assemble_rejects(rng):
    with pytest.raises(ValueError):
        ris.assemble([])
    a = _random_constraint(rng, 2, 4)
    b = _random_constraint(rng, 2, 5)
    with pytest.raises(ValueError):
        ris.assemble([a, b])


def test_solve_zero_targets(rng):
    d = ris.solve([_random_constraint(rng, 2, 8, zero=True) for _ in range(3)])
    assert not np.any(d.alpha) and d.max_residual == 0


def test_solve_feasible_nocsi_set():
    ch = make_channels(2, 2, 6, 16, seed=4)
    plan = nocsi.design(ch)
    assert plan.ris.max_residual <= 1e-8


def test_solve_underprovisioned_reports_residual():
    ch = make_channels(2, 2, 6, 8, seed=4)
    assert nocsi.design(ch).ris.max_residual > 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_solution_is_min_norm(n, k, seed):
    rng = np.random.default_rng(seed)
    l = k * n * n + 3  # under-determined
    cons = [_random_constraint(rng, n, l) for _ in range(k)]
    d = ris.solve(cons)
    system, rhs = ris.assemble(cons)
    assert np.allclose(system @ d.alpha, rhs, atol=1e-8)
    # min-norm: alpha lies in the row space of the system
    null = linalg.null_space(system)
    assert np.linalg.norm(null.conj().T @ d.alpha) <= 1e-8 * max(1.0, np.linalg.norm(d.alpha))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_residuals_reproducible(seed):
    rng = np.random.default_rng(seed)
    cons = [_random_constraint(rng, 2, 5) for _ in range(3)]
    d = ris.solve(cons)
    again = [np.linalg.norm(c.target + c.g_bar @ np.diag(d.alpha) @ c.f_bar) for c in cons]
    assert np.allclose(d.residuals, again, rtol=1e-12, atol=1e-14)


def test_verify_after_solve():
    ch = make_channels(3, 2, 8, 36, seed=2)
    plan = nocsi.design(ch)
    rep = ris.verify(ch, plan.theta, plan)
    assert rep.max_interference <= 1e-8
    assert rep.min_desired_sv > 1e-6


def test_verify_theta_zero_gives_direct_blocks():
    ch = make_channels(2, 2, 6, 16, seed=2)
    plan = nocsi.design(ch)
    rep = ris.verify(ch, np.zeros((16, 16)), plan)
    for (tx, rx), val in rep.interference.items():
        v = plan.v_c if rx == "c" else plan.v_kr[rx]
        direct = v @ ch.direct(tx, rx) @ plan.w_kt[tx]
        assert val == float(np.linalg.norm(direct))


def test_report_json():
    ch = make_channels(2, 2, 6, 16, seed=2)
    plan = nocsi.design(ch)
    rep = ris.verify(ch, plan.theta, plan)
    assert '"max_interference"' in rep.to_json()
    assert plan.ris.to_dict()["l"] == 16
