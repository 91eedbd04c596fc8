"""Machine-run property suites behind the `check` command.

Each property is a named predicate over seeded data at desk-scale sizes;
the registry mirrors the invariants the test suite asserts, so a clean
`check` run is a quick health gate for an installed build.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from . import ci_step
from .building_blocks import (WaveParams, dirichlet_kernel, directions, eta,
                              flow_shell, intermittent_flow,
                              positive_directions, wave_b, wave_psi)
from .errors import ConstraintViolation, DivisibilityError
from .fourier_calculus import (FreqBand, anti_divergence, frac_laplacian,
                               helmholtz, inv_grad, project, tracefree_product)
from .generators import shear_track, time_grid, zero_track
from .mollifier import bump2_hat
from .param_schedule import PaperSchedule, theta_star, toy_params, validate_schedule
from .spectral_field import (SpectralField, TimeTrack, analyze, cn_norm,
                             derive, divergence, lp_norm, make_grid, mean,
                             multiply, perp_grad, random_field, synthesize)
from .stress_geometry import (StressMatrix, decompose, default_ramp, gamma,
                              reconstruct)

REGISTRY = []


def check(name):
    def deco(fn):
        REGISTRY.append((name, fn))
        return fn
    return deco


# ----------------------------------------------------------------- fields

@check("field.roundtrip_identity")
def _roundtrip(cfg):
    g = make_grid(64)
    f = random_field(g, "vector", 20, seed=1)
    back = analyze(g, synthesize(f), "vector")
    err = np.max(np.abs(back.coeffs - np.asarray(f.coeffs)))
    return err < 1e-12, f"max coefficient error {err:.2e}"


@check("field.parseval")
def _parseval(cfg):
    g = make_grid(64)
    f = random_field(g, "scalar", 20, seed=2)
    quad = lp_norm(f, 2)
    coef = 2 * np.pi * np.sqrt(np.sum(np.abs(f.coeffs) ** 2))
    rel = abs(quad - coef) / coef
    return rel < 1e-10, f"relative mismatch {rel:.2e}"


@check("field.reality_flag")
def _reality(cfg):
    g = make_grid(64)
    f = random_field(g, "scalar", 20, seed=3)
    unflagged = SpectralField(g, "scalar", f.coeffs, reality=False)
    vals = unflagged.values()
    err = np.max(np.abs(vals.imag))
    ok = err <= 1e-12 * np.max(np.abs(vals))
    ok &= np.isrealobj(f.values())
    return bool(ok), f"imag residue {err:.2e}"


@check("field.div_perp_grad_zero")
def _divperp(cfg):
    g = make_grid(64)
    f = random_field(g, "scalar", 25, seed=4)
    d = divergence(perp_grad(f))
    err = lp_norm(d, 2) / lp_norm(f, 2)
    return err <= 1e-12, f"relative residue {err:.2e}"


@check("field.quadrature_constants")
def _quadconst(cfg):
    g = make_grid(32)
    one = SpectralField.from_modes(g, "scalar", {(0, 0): 1.0})
    cosx = SpectralField.from_modes(g, "scalar", {(1, 0): 0.5, (-1, 0): 0.5})
    ok1 = abs(lp_norm(one, 2) - 2 * np.pi) < 1e-12
    ok2 = abs(lp_norm(cosx, 2) - 2 * np.pi * np.sqrt(0.5)) < 1e-12
    ok3 = abs(cn_norm(cosx, 1) - 1.0) < 1e-3
    return ok1 and ok2 and ok3, "norm conventions hold"


# ------------------------------------------------------------- operators

@check("op.projector_idempotent_orthogonal")
def _proj(cfg):
    g = make_grid(64)
    f = random_field(g, "scalar", 30, seed=5)
    lowband = FreqBand.band(0, 10)
    hi = FreqBand.at_least(10.000001)
    a = project(f, lowband)
    b = project(f, hi)
    idem = np.max(np.abs(project(a, lowband).coeffs - a.coeffs))
    cross = np.max(np.abs(project(a, hi).coeffs))
    split = lp_norm(f - a - b, 2)
    return idem == 0.0 and cross == 0.0 and split == 0.0, \
        f"idem {idem:.1e}, cross {cross:.1e}, split {split:.1e}"


@check("op.helmholtz_projector")
def _helm(cfg):
    g = make_grid(64)
    f = random_field(g, "vector", 25, seed=6, mean_zero=False)
    pf = helmholtz(f)
    dd = lp_norm(divergence(pf), 2)
    idem = lp_norm(helmholtz(pf) - pf, 2)
    keep = np.max(np.abs(np.asarray(mean(pf)) - np.asarray(mean(f))))
    ok = dd <= 1e-12 * lp_norm(f, 2) and idem <= 1e-12 * lp_norm(f, 2) and keep < 1e-14
    return ok, f"div {dd:.2e}, idempotence {idem:.2e}"


@check("op.multiplier_composition")
def _fraccomp(cfg):
    g = make_grid(64)
    f = random_field(g, "scalar", 20, seed=7)
    twice = frac_laplacian(frac_laplacian(f, 0.5), 0.5)
    once = frac_laplacian(f, 1.0)
    rel = lp_norm(twice - once, 2) / lp_norm(once, 2)
    gg = inv_grad(inv_grad(f))
    hh = frac_laplacian(project(f, FreqBand.nonzero()), 1.0)
    # |grad|^-2 is the inverse of (-Lap) on mean-free fields
    cyc = lp_norm(frac_laplacian(gg, 1.0) - project(f, FreqBand.nonzero()), 2)
    return rel < 1e-12 and cyc < 1e-10 * lp_norm(f, 2), f"compose {rel:.2e}, inverse {cyc:.2e}"


@check("op.anti_divergence_inverse")
def _antidiv(cfg):
    g = make_grid(128)
    worst = 0.0
    for s in range(20):
        f = random_field(g, "vector", 40, seed=100 + s)
        rf = anti_divergence(f)
        worst = max(worst, lp_norm(divergence(rf) - f, 2) / lp_norm(f, 2))
        worst = max(worst, abs(mean(rf)[0]), abs(mean(rf)[1]))
    return worst < 1e-10, f"worst relative defect {worst:.2e}"


@check("op.product_estimate_constant")
def _lemma_prod(cfg):
    g = make_grid(128)
    rng = np.random.default_rng(11)
    fitted = 0.0
    for trial in range(200):
        kappa = int(rng.choice([4, 8, 16, 32]))
        f = random_field(g, "scalar", 16, seed=int(rng.integers(1 << 30)), decay=1.5)
        sub = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        modes = {}
        for (a_, b_), amp in np.ndenumerate(sub):
            if (a_, b_) != (0, 0):
                modes[(kappa * a_, kappa * b_)] = amp
                modes[(-kappa * a_, -kappa * b_)] = np.conj(amp)
        gfield = SpectralField.from_modes(g, "scalar", modes, reality=True)
        prod = multiply(f, gfield)
        lhs = lp_norm(prod, 2)
        main = lp_norm(f, 2) * lp_norm(gfield, 2) / (2 * np.pi)
        rest = kappa ** -0.5 * cn_norm(f, 1) * lp_norm(gfield, 2)
        fitted = max(fitted, (lhs - main) / rest)
    return fitted <= 10.0, f"fitted constant {fitted:.3f}"


@check("op.high_frequency_gain")
def _lemma_gain(cfg):
    g = make_grid(512)
    a = random_field(g, "scalar", 6, seed=21, decay=1.0, mean_zero=False)
    na = cn_norm(a, 2)
    ratios = []
    for lam in (16, 32, 64, 128):
        f = project(random_field(g, "scalar", 250, seed=22, decay=0.0),
                    FreqBand.at_least(lam))
        comp = inv_grad(project(multiply(a, f, allow_interpolant=True),
                                FreqBand.nonzero()))
        ratios.append(lp_norm(comp, 2) / (lam ** -1 * na * lp_norm(f, 2)))
    ok = all(r2 <= 2.0 * r1 for r1, r2 in zip(ratios, ratios[1:]))
    return ok, "ratios " + ", ".join(f"{r:.3f}" for r in ratios)


@check("op.antidiv_vs_invgrad")
def _lemma_310(cfg):
    g = make_grid(128)
    worst = 0.0
    for s in range(20):
        f = project(random_field(g, "vector", 40, seed=300 + s), FreqBand.nonzero())
        worst = max(worst, lp_norm(anti_divergence(f), 2) / lp_norm(inv_grad(f), 2))
    return worst <= 2.0001, f"constant {worst:.4f}"


# ---------------------------------------------------------------- blocks

@check("blocks.direction_set")
def _dirs(cfg):
    ds = directions()
    ok = len(ds) == 8
    ok &= all(k.five_k[0] ** 2 + k.five_k[1] ** 2 == 25 for k in ds)
    pairs = [np.linalg.norm(a.k + b.k) for a in ds for b in ds
             if (a.five_k[0] + b.five_k[0], a.five_k[1] + b.five_k[1]) != (0, 0)]
    ok &= abs(min(pairs) - np.sqrt(2) / 5) < 1e-14
    ok &= any(k.five_k == (3, 4) and k.positive for k in ds)
    ok &= any(k.five_k == (-3, -4) and not k.positive for k in ds)
    return ok, f"min non-antipodal |k+k'| = {min(pairs):.6f}"


@check("blocks.wave_pair")
def _wavepair(cfg):
    g = make_grid(64)
    lam = 5
    k = positive_directions()[0]
    psi = wave_psi(k, lam, g)
    b = wave_b(k, lam, g)
    ok = np.max(np.abs(perp_grad(psi).coeffs - b.coeffs)) < 1e-15
    ok &= lp_norm(divergence(b), 2) < 1e-13
    curl = divergence(SpectralField(g, "vector",
                                    np.stack([b.coeffs[1], -b.coeffs[0]]), False))
    ok &= lp_norm(curl + lam ** 2 * psi, 2) < 1e-12
    bk = wave_b(k, lam, g).values()
    bmk = wave_b(k.antipode, lam, g).values()
    ok &= np.max(np.abs(np.conj(bk) - bmk)) < 1e-13
    for N in (0, 1, 2):
        ok &= abs(cn_norm(b, N) - lam ** N) < 1e-9 * lam ** N
        ok &= abs(cn_norm(psi, N) - lam ** (N - 1)) < 1e-9 * lam ** max(N - 1, 0)
    return bool(ok), "potential/flow identities hold"


@check("blocks.dirichlet_kernel")
def _dirichlet(cfg):
    g = make_grid(256)
    ok = True
    msg = []
    for r in (2, 5, 10):
        d = dirichlet_kernel(r, g)
        peak = d.values()[0, 0, 0]
        ok &= abs(peak - (2 * r + 1)) < 1e-10
        ok &= abs(lp_norm(d, 2) - 2 * np.pi) < 1e-8
    vals = []
    for r in (4, 8, 16, 32):
        d = dirichlet_kernel(r, g)
        vals.append(lp_norm(d, 4) / np.sqrt(r))
    for a, b in zip(vals, vals[1:]):
        ok &= 0.5 < b / a < 2.0
    return bool(ok), "L2 = 2pi; L4/sqrt(r) in " + ", ".join(f"{v:.3f}" for v in vals)


@check("blocks.kernel_transport_and_mass")
def _etachecks(cfg):
    g = make_grid(128)
    wp = WaveParams(50, 10, 2, 5)
    ok = True
    worst_t = 0.0
    for k in directions():
        f, df = eta(k, wp, 0.37, g)
        sq = multiply(f, f)
        ok &= abs(mean(sq).real - 1.0) < 1e-10
        sgn = 1.0 if k.positive else -1.0
        kdot = (float(k.k[0]) * derive(f, (1, 0)).coeffs
                + float(k.k[1]) * derive(f, (0, 1)).coeffs)
        resid = np.max(np.abs(df.coeffs / wp.mu - sgn * kdot))
        worst_t = max(worst_t, resid)
        ok &= resid <= 1e-12
        fm, _ = eta(k.antipode, wp, 0.37, g)
        ok &= np.array_equal(np.asarray(f.coeffs), np.asarray(fm.coeffs))
        pz = project(f, FreqBand.nonzero())
        ph = project(f, FreqBand.at_least(wp.lam_sigma / 2))
        ok &= np.array_equal(np.asarray(pz.coeffs), np.asarray(ph.coeffs))
    return bool(ok), f"transport residue {worst_t:.2e}"


@check("blocks.flow_shells")
def _flowshell(cfg):
    g = make_grid(256)
    wp = WaveParams(50, 10, 2, 5)
    lo, hi = flow_shell(wp)
    ok = wp.lam / 2 <= lo and hi <= 2 * wp.lam
    k = positive_directions()[0]
    w, _ = intermittent_flow(k, wp, 0.1, g)
    rad, mag2 = w.mode_magnitudes()
    outside = mag2[(rad < wp.lam / 2) | (rad > 2 * wp.lam)].sum()
    ok &= outside / mag2.sum() <= 1e-12
    return bool(ok), f"shell [{lo:.1f}, {hi:.1f}] inside [{wp.lam/2}, {2*wp.lam}]"


@check("blocks.flow_mean_tensor")
def _flowmean(cfg):
    g = make_grid(256)
    wp = WaveParams(50, 10, 2, 5)
    k = positive_directions()[1]
    w, _ = intermittent_flow(k, wp, 0.2, g)
    wm, _ = intermittent_flow(k.antipode, wp, 0.2, g)
    t = tracefree_product(w, wm, allow_interpolant=False)
    got = np.array([[mean(t.t11).real, mean(t.t12).real],
                    [mean(t.t21).real, -mean(t.t11).real]])
    want = -tracefree_product(k.k, k.k)
    err = np.max(np.abs(got - want))
    return err < 1e-12, f"mean tensor error {err:.2e}"


@check("blocks.flow_lp_scaling")
def _flowlp(cfg):
    g = make_grid(512)
    vals = []
    for r in (2, 4, 8):
        wp = WaveParams(100, 20, r, 5)
        w, _ = intermittent_flow(positive_directions()[0], wp, 0.0, g)
        vals.append(lp_norm(w, 4) / r ** 0.5)
    ok = all(0.25 < b / a < 4.0 for a, b in zip(vals, vals[1:]))
    return ok, "L4/r^(1/2): " + ", ".join(f"{v:.3f}" for v in vals)


@check("blocks.sum_reality")
def _sumreal(cfg):
    g = make_grid(128)
    wp = WaveParams(50, 10, 2, 5)
    rng = np.random.default_rng(31)
    amps = {}
    for k in positive_directions():
        amps[k.five_k] = rng.standard_normal() + 1j * rng.standard_normal()
    acc = SpectralField.zeros(g, "vector", reality=False)
    for k in directions():
        a = amps[k.five_k] if k.positive else np.conj(amps[k.antipode.five_k])
        w, _ = intermittent_flow(k, wp, 0.4, g)
        acc = acc + a * w
    vals = acc.values()
    resid = np.max(np.abs(vals.imag)) / max(np.max(np.abs(vals.real)), 1e-300)
    return resid < 1e-12, f"imaginary residue {resid:.2e}"


# -------------------------------------------------------------- geometry

@check("geometry.ramp_profile")
def _ramp(cfg):
    ramp = default_ramp()
    s = np.linspace(-5, 5, 20001)
    v = ramp.value(s)
    anti = np.max(np.abs(v - v[::-1] - s))
    bounds = np.all(v >= 1.0 - 1e-9) and np.all(v <= np.maximum(1.0, s + 2.0) + 1e-9)
    x, w = np.polynomial.legendre.leggauss(64)
    u = 0.5 * (x + 1)
    bump = np.exp(-1.0 / (1 - u ** 2))
    bump_mass = np.dot(w, np.exp(-1.0 / (1 - x ** 2)))
    g0 = 1.0 + np.dot(0.5 * w, u * bump) / bump_mass
    zero_err = abs(ramp.value_at_zero() - g0)
    delta = 1e-3
    fd = (ramp.value(s + delta) - ramp.value(s - delta)) / (2 * delta)
    fd_err = np.max(np.abs(fd - ramp.derivative(s)))
    ok = anti < 1e-12 and bounds and zero_err < 1e-9 and fd_err < 1e-6
    return bool(ok), (f"antisymmetry {anti:.1e}, value(0) err {zero_err:.1e}, "
                      f"derivative fd err {fd_err:.1e}")


@check("geometry.weights_positive_bounded")
def _weights(cfg):
    rng = np.random.default_rng(41)
    ok = True
    for _ in range(200):
        st = StressMatrix(*rng.uniform(-100, 100, 2))
        for k in positive_directions():
            gk = gamma(k, st)
            ok &= gk * gk >= 2.3
            ok &= gk == gamma(k.antipode, st)
            ok &= gk * gk <= (25 / 14 + 25 / 48) * (st.sup + 2) * (1 + 1e-9)
    d = 1e-4
    g_lo = gamma(positive_directions()[2], StressMatrix(1.0, 0.3))
    g_hi = gamma(positive_directions()[2], StressMatrix(1.0 + d, 0.3))
    ok &= g_hi >= g_lo
    return bool(ok), "positivity, symmetry, growth, monotonicity"


@check("geometry.decomposition_identity")
def _decomp(cfg):
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(2000):
        st = StressMatrix(*rng.uniform(-100, 100, 2))
        rec = reconstruct(decompose(st))
        worst = max(worst, abs(rec.r11 - st.r11), abs(rec.r12 - st.r12))
    return worst <= 1e-10, f"max reconstruction error {worst:.2e}"


# -------------------------------------------------------------- schedule

@check("schedule.theta_star")
def _tstar(cfg):
    ok = theta_star(0.75) == 0.5
    ok &= theta_star(0.5) == 0.0
    ok &= theta_star(0.0) == 0.0
    ok &= abs(theta_star(0.5 + 1e-12)) < 1e-11
    return bool(ok), "piecewise values and continuity"


@check("schedule.witness_and_mutations")
def _gate(cfg):
    from fractions import Fraction as F
    witness = dict(theta=F(0), alpha=F(1, 8), B=2561, beta=F(1, 10 ** 9), A=5 ** 8, q=0)
    validate_schedule(PaperSchedule(**witness))
    ok = True
    mutations = [
        (dict(witness, B=100), "++.1"),
        (dict(witness, beta=F(1, 100)), "++.2"),
        (dict(witness, A=5 ** 8 + 5), "++.3"),
        (dict(witness, theta=F(9, 10), alpha=F(1, 4)), "7.16+"),
        (dict(witness, beta=F(7, 2561)), "ell_lambda8"),
    ]
    for mut, label in mutations:
        try:
            validate_schedule(PaperSchedule(**mut))
            ok = False
        except ConstraintViolation as exc:
            ok &= label in exc.labels
    sched = PaperSchedule(**witness)
    p = sched.p_holder
    ok &= 1 < p < 2 and (1 - 6 * sched.alpha) * (2 - 2 / p) == sched.alpha
    ok &= sched.r.exponent * (2 - 2 / p) == sched.alpha * sched.lam(1).exponent
    return bool(ok), "witness accepted, five mutations labeled"


@check("schedule.toy_divisibility")
def _toydiv(cfg):
    ok = True
    toy_params(50, 10, 2, 5, 0.05, 0.4, 1.0)
    try:
        toy_params(10, 4, 1, 2, 0.05, 0.4, 1.0)
        ok = False
    except DivisibilityError:
        pass
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        toy_params(25, 5, 4, 3, 0.05, 0.4, 1.0)
        ok &= any("ordering" in str(w.message) for w in rec)
    return bool(ok), "divisibility fatal, ordering advisory"


# ------------------------------------------------------------------ step

def _small_setup():
    grid = make_grid(128)
    times = time_grid(1.0, 0.1, 17)
    u = shear_track(grid, times, m=1, T=1.0)
    state = ci_step.init_state(u, theta=0.4, nu=1.0, T=1.0)
    toy = toy_params(25, 5, 2, 3, 0.05, 0.4, 1.0, a_const=5.0, eps_next=0.04)
    return state, toy


@check("step.init_residual")
def _initres(cfg):
    state, _ = _small_setup()
    _, rep = ci_step.nsr_residual(state)
    g = state.grid
    zero = ci_step.init_state(zero_track(g, state.times), 0.4, 1.0, 1.0)
    ok = rep["max_rel"] < 1e-6
    ok &= all(lp_norm(s, 2) == 0.0 for s in zero.R.slices)
    return bool(ok), f"initial residual {rep['max_rel']:.2e}"


@check("step.identities_and_supports")
def _stepids(cfg):
    state, toy = _small_setup()
    new_state, diags = ci_step.iterate_step(state, toy)
    idn = diags.identities
    wp_scale = max(idn["w_p_l2"], 1e-300)
    ok = idn["stream_identity_l2"] <= 1e-10 * wp_scale
    ok &= idn["solenoidality_l2"] <= 1e-10 * wp_scale
    ok &= idn["oscillation_c0"] <= 1e-8 * max(idn["oscillation_scale"], 1e-300)
    ok &= all(diags.support.values())
    ok &= diags.residual_report["window_max_rel"] <= 1e-4
    return bool(ok), (f"stream {idn['stream_identity_l2']:.2e}, "
                      f"residual {diags.residual_report['window_max_rel']:.2e}")


@check("step.negative_control")
def _negctrl(cfg):
    state, _ = _small_setup()
    rng = np.random.default_rng(5)
    bad = random_field(state.grid, "vector", 10, seed=17)
    bad = helmholtz(project(bad, FreqBand.nonzero()))
    _, rep0 = ci_step.nsr_residual(state)
    scale = (1.0 + rep0["scale"]) / max(lp_norm(bad, 2), 1e-300)
    bad = scale * bad
    slices = [s + bad for s in state.v.slices]
    broken = ci_step.NSRState(
        TimeTrack(state.times, slices, state.v.dslices),
        state.p, state.R, state.theta, state.nu, state.q, state.T)
    _, rep = ci_step.nsr_residual(broken)
    return rep["max_rel"] >= 0.1, f"perturbed residual {rep['max_rel']:.3f}"


@check("step.mollify_exactness")
def _mollconst(cfg):
    grid = make_grid(64)
    times = time_grid(1.0, 0.1, 17)
    M = 8
    base = SpectralField.from_modes(grid, "scalar",
                                    {(0, M): 0.5, (0, -M): 0.5})
    base_v = SpectralField(grid, "vector",
                           np.stack([base.coeffs[0], np.zeros_like(base.coeffs[0])]), True)
    u = TimeTrack(times, [base_v] * times.size, [0.0 * base_v] * times.size)
    state = ci_step.init_state(u, 0.0, 1.0, 1.0)
    moll = ci_step.mollify(state, 0.05)
    drift = max(lp_norm(a - b, np.inf)
                for a, b in zip(moll.v.slices, moll.v.slices[1:]))
    predicted = (1.0 - bump2_hat(np.array([M * 0.05]))[0]) * 1.0
    got = moll.norms["v_diff_linf"]
    ok = drift < 1e-13 and abs(got - predicted) < 1e-10
    return bool(ok), f"multiplier damping {got:.3e} vs {predicted:.3e}"


def run_all(cfg) -> dict:
    results = []
    t0 = time.time()
    for name, fn in REGISTRY:
        t1 = time.time()
        try:
            ok, detail = fn(cfg)
        except Exception as exc:  # property crashes count as failures
            ok, detail = False, f"error: {type(exc).__name__}: {exc}"
        results.append({"name": name, "passed": bool(ok), "detail": detail,
                        "seconds": round(time.time() - t1, 3)})
    passed = sum(r["passed"] for r in results)
    return {
        "properties": results,
        "n_passed": passed,
        "n_failed": len(results) - passed,
        "seconds": round(time.time() - t0, 3),
    }
