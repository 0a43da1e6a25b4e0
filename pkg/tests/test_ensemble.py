"""Monte-Carlo machinery checks.

Closed-form weight moments are validated against numerical quadrature,
the lemma bounds against direct simulation, and everything against
determinism under fixed seeds.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from sparsefront.basis import RandomOrthonormalBasis
from sparsefront.ensemble import (
    LEMMA2_TOL,
    WeightModel,
    check_clt,
    check_lemma1,
    check_lemma2_bound,
    concentration_check,
    fit_white_vs_k,
    lemma2_bulk,
    sample_zk,
    simulate_semiwhite,
    sweep_white_scaling,
    write_scaling_csv,
)
from sparsefront.frontend import FrontEndConfig


def test_weight_model_moments_match_quadrature():
    wm = WeightModel()  # standard normal

    def phi(t):
        return math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)

    mu_quad, _ = integrate.quad(lambda t: abs(t) * phi(t), -10, 10)
    var_quad, _ = integrate.quad(lambda t: t * t * phi(t), -10, 10)
    assert wm.mu == pytest.approx(mu_quad, abs=1e-10)
    assert wm.mu == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-12)
    assert wm.sigma2 == pytest.approx(var_quad, abs=1e-10)


@pytest.mark.parametrize(
    "dist,scale,mu,sigma2",
    [
        ("rademacher_scaled", 2.0, 2.0, 4.0),
        ("uniform_symmetric", 3.0, 1.5, 3.0),
    ],
)
def test_weight_model_closed_forms(dist, scale, mu, sigma2):
    wm = WeightModel(distribution=dist, scale=scale)
    assert wm.mu == pytest.approx(mu)
    assert wm.sigma2 == pytest.approx(sigma2)
    sample = wm.sample(np.random.default_rng(0), 200000)
    assert abs(np.abs(sample).mean() - mu) < 0.02 * max(mu, 1.0)
    assert abs((sample**2).mean() - sigma2) < 0.03 * sigma2
    assert abs(sample.mean()) < 0.02 * math.sqrt(sigma2)


def test_weight_model_rejects_unknown_distribution():
    with pytest.raises(ValueError):
        WeightModel(distribution="cauchy")


def test_sample_zk_identity_basis_is_sum_of_abs():
    # With the identity basis, Z_K = sum over the support of w_i sign(w_i).
    z = sample_zk(32, 8, WeightModel(), seed=1, trials=4000, basis_kind="identity")
    assert (z >= 0).all()
    mu = math.sqrt(2.0 / math.pi)
    assert abs(z.mean() - 8 * mu) < 4 * z.std(ddof=1) / math.sqrt(z.size)


def test_simulate_semiwhite_concentrates_near_mu():
    wm = WeightModel()
    stats = simulate_semiwhite(256, 64, wm, basis_seed=0, trials=4000)
    assert abs(stats.mean_delta - wm.mu) <= 3 * stats.std_err
    conc = concentration_check(
        simulate_semiwhite(256, 64, wm, basis_seed=0, trials=4000, keep_deltas=True),
        wm,
        64,
    )
    assert conc.passed
    assert conc.chebyshev == pytest.approx((wm.sigma2 + wm.mu**2) / (64 * 0.04))


def test_simulate_semiwhite_deterministic():
    a = simulate_semiwhite(64, 16, trials=500, basis_seed=3)
    b = simulate_semiwhite(64, 16, trials=500, basis_seed=3)
    assert (a.mean_delta, a.var_delta) == (b.mean_delta, b.var_delta)
    c = simulate_semiwhite(64, 16, trials=500, basis_seed=4)
    assert a.mean_delta != c.mean_delta


@pytest.mark.parametrize("n,k", [(256, 32), (512, 64)])
def test_lemma1_mean_and_variance_bound(n, k):
    check = check_lemma1(n, k, trials=4000, seed=7)
    assert check.mean_ok and check.var_ok and check.passed
    assert check.mean_target == pytest.approx(k * math.sqrt(2.0 / math.pi))
    assert check.var_bound == pytest.approx(k * (1.0 + 2.0 / math.pi))


def test_lemma2_bound_single_instance():
    basis = RandomOrthonormalBasis(48, seed=2)
    cfg = FrontEndConfig(basis, 6)
    rng = np.random.default_rng(3)
    check = check_lemma2_bound(cfg, rng.standard_normal(48), rng.standard_normal(48))
    assert check.delta_w <= check.bound + LEMMA2_TOL
    # Orthonormal columns: the bound is met with equality only when the
    # support coefficients line up; generic instances are strict.
    assert not check.tight


def test_lemma2_bulk_random_and_identity():
    bulk = lemma2_bulk(64, 16, trials=5000, seed=4)
    assert bulk.passed and bulk.max_excess <= LEMMA2_TOL
    ident = lemma2_bulk(64, 16, trials=5000, seed=5, basis_kind="identity")
    assert ident.passed
    assert ident.tight_fraction == 1.0


def test_clt_gaussian_limit_and_identity_flag():
    check = check_clt(512, trials=3000, basis_seed=6)
    assert check.hypothesis_ok  # random orthonormal columns are spread out
    assert check.ks_ok and check.passed
    assert check.ks_critical == pytest.approx(1.63 / math.sqrt(3000))
    ident = check_clt(512, trials=3000, basis_seed=7, basis_kind="identity")
    assert not ident.hypothesis_ok  # a standard basis vector is all spike
    assert ident.passed  # flagged, not failed: the limit does not apply


def test_sweep_white_scaling_rows():
    rows = sweep_white_scaling([64, 128], rho=0.125, trials=400, seed=8)
    assert [r.n for r in rows] == [64, 128]
    for r in rows:
        assert r.k == r.n // 8
        assert r.bound_violations == 0
        assert r.mean_delta_w <= r.mean_bound
        assert 0.9 <= r.semiwhite_ratio <= 1.1
        assert r.l1_hypothesis in (True, False)


def test_fit_white_vs_k_linear():
    # Disjoint-support atoms: distortion equals its K-term bound, so the
    # mean is exactly linear in K up to Monte-Carlo noise.
    fit = fit_white_vs_k(256, [8, 16, 32, 64], trials=400, seed=9)
    assert fit.basis_kind == "localized"
    assert fit.l1_hypothesis
    assert fit.max_col_l1 <= 2.0  # block length 4 caps the l1 at sqrt(4)
    assert fit.r2 >= 0.99
    assert fit.max_rel_residual <= 0.10
    assert fit.bound_violations == 0
    assert fit.slope > 0
    assert fit.passed


def test_fit_white_vs_k_dense_frames_flagged():
    # Dense random orthonormal columns have l1 ~ sqrt(N): the localization
    # hypothesis fails, the mean grows like sqrt(K), and only the
    # unconditional bound check stays armed.
    fit = fit_white_vs_k(
        256, [8, 16, 32, 64], trials=200, seed=9, basis_kind="random_orthonormal"
    )
    assert not fit.l1_hypothesis
    assert fit.max_col_l1 > math.log(256)
    assert fit.bound_violations == 0
    assert fit.passed  # linearity not asserted without the hypothesis
    ratios = [m / math.sqrt(k) for m, k in zip(fit.means, fit.k_list)]
    assert max(ratios) / min(ratios) < 1.25


def test_fit_white_vs_k_validation():
    with pytest.raises(ValueError):
        fit_white_vs_k(64, [8])
    with pytest.raises(ValueError):
        fit_white_vs_k(64, [8, 128])
    with pytest.raises(ValueError):
        fit_white_vs_k(64, [8, 16], basis_kind="fourier")


def test_write_scaling_csv_deterministic(tmp_path):
    rows = sweep_white_scaling([64], rho=0.25, trials=100, seed=10)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_scaling_csv(rows, p1)
    write_scaling_csv(rows, p2)
    content = p1.read_text()
    assert content == p2.read_text()
    header = content.splitlines()[0]
    assert header.split(",")[:4] == ["n", "k", "distribution", "trials"]
    assert len(content.splitlines()) == 2
