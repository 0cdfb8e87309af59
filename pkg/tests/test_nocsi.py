from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from sagin_ia import linalg
from sagin_ia.schemes import nocsi
from sagin_ia.schemes.common import InfeasibleScheme

from conftest import make_channels


def test_cyclic_pairing():
    assert [nocsi.aligned_receiver(i, 4) for i in range(4)] == [3, 0, 1, 2]
    assert all(nocsi.aligned_transmitter(nocsi.aligned_receiver(i, 5), 5) == i for i in range(5))


def test_alignment_substitution():
    ch = make_channels(4, 2, 10, 64, seed=1)
    w_s, w_kt = nocsi.design_alignment(ch)
    assert w_s.shape == (10, 2)
    assert max(nocsi.precoder_alignment_residuals(ch, w_s, w_kt)) <= 1e-10


def test_rejects_single_pair():
    with pytest.raises(InfeasibleScheme):
        nocsi.design_alignment(make_channels(1, 2, 4, 4))


def test_rejects_odd_n():
    with pytest.raises(InfeasibleScheme):
        nocsi.design(make_channels(2, 3, 6, 36))


def test_aligned_subspace_two_pairs():
    ch = make_channels(2, 2, 6, 16, seed=3)
    plan = nocsi.design(ch)
    assert nocsi.aligned_subspace_dims(ch, plan) == [1, 1]


def test_svd_normalize_diagonalizes():
    ch = make_channels(3, 4, 8, 10, seed=2)
    _, w_kt = nocsi.design_alignment(ch)
    f = nocsi.svd_normalize(ch, w_kt)
    for k in range(3):
        d = f.v_kr[k] @ ch.h_ktkr[k][k] @ f.w_bar[k]
        assert np.linalg.norm(d - np.diag(np.diag(d))) <= 1e-10 * np.linalg.norm(d)
        assert np.allclose(f.a[k].conj().T @ f.a[k], np.eye(4))
        assert np.allclose(f.b[k].conj().T @ f.b[k], np.eye(4))
        assert np.all(f.lam[k] >= 0) and np.all(np.diff(f.lam[k]) <= 0)


def _families(kd, n=2):
    ch = make_channels(kd, n, 2 * n, 4, seed=0)
    _, w_kt = nocsi.design_alignment(ch)
    cons = nocsi.build_constraints(ch, nocsi.svd_normalize(ch, w_kt), nocsi.satuser_zf(ch))
    return cons, Counter(c.label[0] for c in cons)


def test_constraint_families_kd3():
    cons, fam = _families(3)
    assert len(cons) == 9 and fam == {"a": 3, "b": 3, "c": 3}


def test_constraint_families_kd2():
    _, fam = _families(2)
    assert fam["a"] == 0 and fam["b"] == 2 and fam["c"] == 2


@pytest.mark.parametrize("kd", [2, 3, 4, 5])
def test_scalar_constraint_count(kd):
    n = 2
    cons, _ = _families(kd, n)
    assert sum(c.target.size for c in cons) == kd * (kd - 1) * n * n + kd * n * n


def test_satuser_zf():
    ch = make_channels(2, 2, 5, 4, seed=7)
    v = nocsi.satuser_zf(ch)
    assert np.allclose(v @ ch.h_sc[:, :2], np.eye(2))


def test_satuser_zf_orthonormal():
    ch = make_channels(2, 2, 4, 4, seed=7)
    q, _ = np.linalg.qr(ch.h_sc[:, :2])
    h = ch.h_sc.copy()
    h[:, :2] = q
    object.__setattr__(ch, "h_sc", h)
    assert np.allclose(nocsi.satuser_zf(ch), q.conj().T)


@pytest.mark.parametrize("kd,n", [(2, 2), (3, 2), (4, 4)])
def test_end_to_end(kd, n):
    ch = make_channels(kd, n, 2 * n, kd * kd * n * n, seed=kd)
    out, plan = nocsi.run(ch, rng=np.random.default_rng(1))
    assert out.recovery_err <= 1e-6
    assert out.interference_residual <= 1e-8
    assert out.dof_counted == Fraction((kd + 1) * n, 2)
    assert max(nocsi.alignment_residuals(ch, plan)) <= 1e-8


def test_dof_kd6_n4():
    ch = make_channels(6, 4, 4, 576, seed=1)
    out, _ = nocsi.run(ch)
    assert out.dof_counted == 14


def test_zero_payloads():
    ch = make_channels(2, 2, 6, 16, seed=1)
    zeros = {"s": np.zeros(1), 0: np.zeros(1), 1: np.zeros(1)}
    out, _ = nocsi.run(ch, payloads=zeros)
    assert out.recovery_err == 0
    assert all(not np.any(v) for v in out.recovered.values())


def test_decode_uses_only_projection():
    # desired signal still separable after removing the aligned subspace
    ch = make_channels(3, 2, 6, 36, seed=4)
    plan = nocsi.design(ch)
    for j in range(3):
        desired = ch.effective(j, j, plan.theta) @ plan.w_kt[j]
        aligned = ch.h_skr[j] @ plan.w_s
        assert linalg.rank_tol(np.hstack([desired, aligned]), 1e-8) == 2
