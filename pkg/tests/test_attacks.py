"""Attack closed forms, feasibility, ordering, and exact-optimality via
brute force over the corner/zero grid at small dimension."""

import itertools

import numpy as np
import pytest

from sparsefront.attacks import (
    AttackKind,
    attack_baseline,
    attack_semi_white,
    attack_white,
    directed_perturbation,
    measured_distortion,
)
from sparsefront.basis import IdentityBasis, RandomOrthonormalBasis
from sparsefront.frontend import FrontEndConfig, proj


def test_baseline_closed_form():
    w = np.array([2.0, -1.0, 0.0, 0.5])
    r = attack_baseline(w, 0.25)
    assert r.kind is AttackKind.BASELINE
    assert np.array_equal(r.e, [0.25, -0.25, 0.0, 0.25])
    assert r.delta == pytest.approx(0.25 * 3.5)


def test_semi_white_identity_basis():
    cfg = FrontEndConfig(IdentityBasis(6), 2)
    w = np.array([1.0, -2.0, 3.0, -4.0, 0.5, 0.0])
    x = np.array([0.0, 9.0, 0.0, -8.0, 0.0, 0.0])  # support {1, 3}
    r = attack_semi_white(cfg, w, x, 0.25)
    assert np.array_equal(r.e, 0.25 * np.sign(w))
    # Only the retained coordinates contribute: |w_1| + |w_3|.
    assert r.delta == pytest.approx(0.25 * (2.0 + 4.0))


def test_white_identity_basis():
    cfg = FrontEndConfig(IdentityBasis(6), 2)
    w = np.array([1.0, -2.0, 3.0, -4.0, 0.5, 0.0])
    x = np.array([0.0, 9.0, 0.0, -8.0, 0.0, 0.0])
    r = attack_white(cfg, w, x, 0.25)
    expect_e = np.zeros(6)
    expect_e[1] = -0.25
    expect_e[3] = -0.25
    assert np.array_equal(r.e, expect_e)
    assert r.delta == pytest.approx(0.25 * 6.0)


def test_white_dominates_semi_white():
    rng = np.random.default_rng(0)
    basis = RandomOrthonormalBasis(32, seed=1)
    cfg = FrontEndConfig(basis, 6)
    for _ in range(50):
        w = rng.standard_normal(32)
        x = rng.standard_normal(32)
        dw = attack_white(cfg, w, x, 0.3).delta
        ds = attack_semi_white(cfg, w, x, 0.3).delta
        assert dw >= ds - 1e-12


def test_feasibility_and_scale_invariance():
    rng = np.random.default_rng(2)
    basis = RandomOrthonormalBasis(16, seed=3)
    cfg = FrontEndConfig(basis, 4)
    w = rng.standard_normal(16)
    x = rng.standard_normal(16)
    for attack in (
        lambda ww: attack_baseline(ww, 0.25),
        lambda ww: attack_semi_white(cfg, ww, x, 0.25),
        lambda ww: attack_white(cfg, ww, x, 0.25),
    ):
        r1, r5 = attack(w), attack(5.0 * w)
        assert np.abs(r1.e).max() <= 0.25 + 1e-12
        # sign(w) does not see the weight scale; delta is linear in it.
        assert np.array_equal(r1.e, r5.e)
        assert r5.delta == pytest.approx(5.0 * r1.delta)


def test_epsilon_validation():
    with pytest.raises(ValueError):
        attack_baseline(np.ones(3), 0.0)
    cfg = FrontEndConfig(IdentityBasis(3), 1)
    with pytest.raises(ValueError):
        attack_semi_white(cfg, np.ones(3), np.ones(3), -1.0)
    with pytest.raises(ValueError):
        attack_white(cfg, np.ones(3), np.ones(3), 0.0)


def test_directed_perturbation_orientation():
    r = attack_baseline(np.array([1.0, -1.0]), 0.5)
    assert np.array_equal(directed_perturbation(r, 3, 3, 7), r.e)
    assert np.array_equal(directed_perturbation(r, 7, 3, 7), -r.e)
    with pytest.raises(ValueError):
        directed_perturbation(r, 5, 3, 7)


def test_measured_distortion_matches_closed_form_when_certified():
    """On an exactly-K-sparse input with a preserved support, the measured
    score shift equals the closed-form delta."""
    rng = np.random.default_rng(4)
    basis = RandomOrthonormalBasis(36, seed=5)
    cfg = FrontEndConfig(basis, 5)
    c = np.zeros(36)
    idx = rng.choice(36, size=5, replace=False)
    c[idx] = 2.0 + rng.random(5)
    x = basis.synthesize(c)
    m = basis.info.m_certificate
    eps = 0.9 * np.abs(c[idx]).min() / (2.0 * m)
    w = rng.standard_normal(36)

    for r in (attack_semi_white(cfg, w, x, eps), attack_white(cfg, w, x, eps)):
        measured = measured_distortion(cfg, w, x, r.e)
        assert measured == pytest.approx(r.delta, rel=1e-9, abs=1e-12)
    r0 = attack_baseline(w, eps)
    assert measured_distortion(None, w, x, r0.e) == pytest.approx(r0.delta)


@pytest.mark.parametrize("n,k", [(6, 2), (8, 3), (10, 4)])
def test_brute_force_optimality_small_n(n, k):
    """attack_baseline maximizes |w.e| and attack_white maximizes
    |proj(w,x).e| over the grid {-eps, 0, +eps}^n."""
    rng = np.random.default_rng(n)
    basis = RandomOrthonormalBasis(n, seed=n)
    cfg = FrontEndConfig(basis, k)
    eps = 0.25
    grid = eps * np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
    for _ in range(10):
        w = rng.standard_normal(n)
        x = rng.standard_normal(n)
        assert np.abs(grid @ w).max() == pytest.approx(
            attack_baseline(w, eps).delta, abs=1e-12
        )
        p = proj(cfg, w, x)
        assert np.abs(grid @ p).max() == pytest.approx(
            attack_white(cfg, w, x, eps).delta, abs=1e-12
        )
