import numpy as np
import pytest

from ci2d import (FreqBand, RankError, SpectralField, anti_divergence,
                  cn_norm, divergence, frac_laplacian, helmholtz, inv_grad,
                  lp_norm, make_grid, mean, multiply, project, random_field,
                  tracefree_product)
from ci2d.building_blocks import (WaveParams, directions, intermittent_flow,
                                  positive_directions)
from ci2d.errors import ConfigError


def test_project_mean_removal():
    g = make_grid(16)
    f = SpectralField.from_modes(g, "scalar", {(0, 0): 3.0, (1, 0): 0.5, (-1, 0): 0.5})
    got = project(f, FreqBand.nonzero())
    assert mean(got) == 0.0
    assert got.coeff((1, 0))[0] == 0.5


def test_project_keeps_flow_shell():
    # the closed band [lam/2, 2 lam] leaves the intermittent flow intact
    g = make_grid(64)
    wp = WaveParams(10, 2, 1, 1)
    k = positive_directions()[0]
    w, _ = intermittent_flow(k, wp, 0.0, g)
    kept = project(w, FreqBand.band(5.0, 20.0))
    assert np.array_equal(np.asarray(kept.coeffs), np.asarray(w.coeffs))


def test_project_at_least_drops_low_modes():
    g = make_grid(16)
    cosx = SpectralField.from_modes(g, "scalar", {(1, 0): 0.5, (-1, 0): 0.5})
    assert lp_norm(project(cosx, FreqBand.at_least(5)), 2) == 0.0


def test_helmholtz_examples():
    g = make_grid(32)
    grad = SpectralField.from_modes(
        g, "vector", {(1, 0): np.array([0.5, 0]), (-1, 0): np.array([0.5, 0])})
    assert lp_norm(helmholtz(grad), 2) < 1e-14
    shear = SpectralField.from_modes(
        g, "vector", {(0, 1): np.array([-0.5j, 0]), (0, -1): np.array([0.5j, 0])})
    assert lp_norm(helmholtz(shear) - shear, 2) < 1e-14
    f = random_field(g, "vector", 10, seed=1)
    pf = helmholtz(f)
    assert lp_norm(helmholtz(pf) - pf, 2) <= 1e-12 * lp_norm(f, 2)
    assert lp_norm(divergence(pf), 2) <= 1e-12 * lp_norm(f, 2)
    with pytest.raises(RankError):
        helmholtz(f.component(0))


def test_frac_laplacian_multiplier():
    g = make_grid(32)
    e34 = SpectralField.from_modes(g, "scalar", {(3, 4): 1.0}, reality=False)
    assert frac_laplacian(e34, 1.0).coeff((3, 4))[0] == pytest.approx(25.0)
    assert frac_laplacian(e34, 0.5).coeff((3, 4))[0] == pytest.approx(5.0)
    f = SpectralField.from_modes(g, "scalar", {(0, 0): 2.0, (3, 4): 1.0}, reality=False)
    ident = frac_laplacian(f, 0.0)
    assert ident.coeff((0, 0))[0] == 2.0
    assert ident.coeff((3, 4))[0] == 1.0
    assert frac_laplacian(f, 0.7).coeff((0, 0))[0] == 0.0
    with pytest.raises(ConfigError):
        frac_laplacian(f, 1.5)
    with pytest.raises(ConfigError):
        frac_laplacian(f, -0.1)


def test_inv_grad_examples():
    g = make_grid(32)
    cos3 = SpectralField.from_modes(g, "scalar", {(3, 0): 0.5, (-3, 0): 0.5})
    assert lp_norm(inv_grad(cos3) - (1.0 / 3.0) * cos3, np.inf) < 1e-14
    const = SpectralField.from_modes(g, "scalar", {(0, 0): 7.0})
    assert lp_norm(inv_grad(const), 2) == 0.0
    f = random_field(g, "scalar", 10, seed=2)
    pf = project(f, FreqBand.nonzero())
    twice = inv_grad(inv_grad(pf))
    assert lp_norm(frac_laplacian(twice, 1.0) - pf, 2) <= 1e-10 * lp_norm(f, 2)


def test_anti_divergence_single_mode_oracle():
    # oracle: solve Lap g = (sin x2, 0) by hand: g = (-sin x2, 0); then
    # grad g + (grad g)^T - div g Id has t11 = 0 and t12 = -cos x2
    g = make_grid(32)
    f = SpectralField.from_modes(
        g, "vector", {(0, 1): np.array([-0.5j, 0]), (0, -1): np.array([0.5j, 0])})
    rf = anti_divergence(f)
    vals = rf.values()
    x = g.nodes()
    assert np.max(np.abs(vals[0])) < 1e-14
    assert np.max(np.abs(vals[1] - (-np.cos(x))[None, :])) < 1e-14
    zero = SpectralField.zeros(g, "vector")
    assert lp_norm(anti_divergence(zero), 2) == 0.0


def test_anti_divergence_right_inverse_and_metadata():
    g = make_grid(64)
    for seed in range(10):
        f = random_field(g, "vector", 20, seed=seed)
        rf, dropped = anti_divergence(f, return_mean=True)
        assert np.max(np.abs(dropped)) == 0.0
        assert lp_norm(divergence(rf) - f, 2) <= 1e-10 * lp_norm(f, 2)
        assert np.max(np.abs(mean(rf))) == 0.0
    shifted = SpectralField.from_modes(
        g, "vector", {(0, 0): np.array([2.0, -1.0]), (1, 0): np.array([0.5, 0]),
                      (-1, 0): np.array([0.5, 0])})
    rf, dropped = anti_divergence(shifted, return_mean=True)
    assert np.allclose(dropped, [2.0, -1.0])


def test_tracefree_product_display():
    got = tracefree_product((1.0, 0.0), (0.0, 1.0))
    assert np.allclose(got, [[0.0, 1.0], [0.0, 0.0]])
    k = np.array([3.0, 4.0]) / 5.0
    kk = tracefree_product(k, k)
    assert kk[0, 0] == pytest.approx(-7.0 / 50.0)
    assert kk[0, 1] == pytest.approx(12.0 / 25.0)
    assert kk[1, 0] == pytest.approx(12.0 / 25.0)
    # brute force over the eight directions: the rotated frame flips sign
    for d in directions():
        left = tracefree_product(d.k_perp, d.k_perp)
        right = -tracefree_product(d.k, d.k)
        assert np.allclose(left, right, atol=1e-15)


def test_tracefree_product_fields_and_symmetry():
    g = make_grid(64)
    f = random_field(g, "vector", 10, seed=3)
    h = random_field(g, "vector", 10, seed=4)
    t = tracefree_product(f, h)
    sym = tracefree_product(f, h) + tracefree_product(h, f)
    st = sym.as_symtensor()
    assert st.rank == "symtensor"
    with pytest.raises(ConfigError):
        t.as_symtensor(rtol=1e-14)
    with pytest.raises(RankError):
        tracefree_product(f, (1.0, 0.0))


def test_product_estimate_fitted_constant():
    # a periodic fast factor decorrelates from a smooth slow factor up to
    # a kappa^(-1/2) penalty on the slow derivative
    g = make_grid(128)
    rng = np.random.default_rng(7)
    fitted = 0.0
    for _ in range(60):
        kappa = int(rng.choice([4, 8, 16, 32]))
        f = random_field(g, "scalar", 16, seed=int(rng.integers(1 << 30)), decay=1.5)
        modes = {}
        reach = min(2, (g.max_mode - 1) // kappa)
        for a in range(reach + 1):
            for b in range(reach + 1):
                if (a, b) == (0, 0):
                    continue
                amp = rng.standard_normal() + 1j * rng.standard_normal()
                modes[(kappa * a, kappa * b)] = amp
                modes[(-kappa * a, -kappa * b)] = np.conj(amp)
        fast = SpectralField.from_modes(g, "scalar", modes, reality=True)
        lhs = lp_norm(multiply(f, fast, allow_interpolant=True), 2)
        main = lp_norm(f, 2) * lp_norm(fast, 2) / (2 * np.pi)
        rest = kappa ** -0.5 * cn_norm(f, 1) * lp_norm(fast, 2)
        fitted = max(fitted, (lhs - main) / rest)
    assert fitted <= 10.0


def test_high_frequency_smoothing_gain():
    g = make_grid(512)
    a = random_field(g, "scalar", 6, seed=21, decay=1.0, mean_zero=False)
    na = cn_norm(a, 2)
    ratios = []
    for lam in (16, 32, 64, 128):
        f = project(random_field(g, "scalar", 250, seed=22, decay=0.0),
                    FreqBand.at_least(lam))
        smoothed = inv_grad(project(multiply(a, f, allow_interpolant=True),
                                    FreqBand.nonzero()))
        ratios.append(lp_norm(smoothed, 2) / (na * lp_norm(f, 2) / lam))
    assert all(r2 <= 2.0 * r1 for r1, r2 in zip(ratios, ratios[1:]))


def test_antidiv_bounded_by_inv_grad():
    g = make_grid(128)
    worst = 0.0
    for seed in range(20):
        f = project(random_field(g, "vector", 40, seed=seed), FreqBand.nonzero())
        worst = max(worst, lp_norm(anti_divergence(f), 2) / lp_norm(inv_grad(f), 2))
    assert worst <= 2.0001
