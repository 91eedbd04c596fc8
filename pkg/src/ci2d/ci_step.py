"""One iteration of the stress-reduction scheme.

The pipeline is: mollify the state, detect the temporal support of the
low-frequency stress, build smooth coefficients from the geometric
decomposition, add the principal / corrector / temporal perturbations,
and re-assemble the stress and pressure so the forced momentum balance
holds exactly.

Time is handled as a first-order jet: every track carries its values and,
where available, an analytic derivative channel, and all linear
operations (including temporal mollification) map both channels the same
way.  The residual verifier consumes only the assembled state, so it is
blind to the intermediate algebra.

Pressure convention: states store the pressure of the trace-free
momentum form.  The classical pressure of the full-tensor form is
p - |v|^2 / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .building_blocks import (Direction, WaveParams, eta, lattice_vector,
                              positive_directions)
from .errors import DerivativeChannelMissing, InvalidInput
from .fourier_calculus import (FreqBand, anti_divergence, frac_laplacian,
                               helmholtz, project, sym_tracefree_product,
                               tf_square)
from .mollifier import (TemporalKernel, check_padding, smoothstep,
                        smoothstep_prime, spatial_mollify)
from .param_schedule import ToyParams
from .spectral_field import (Grid2, SpectralField, TimeTrack, _embed, analyze,
                             cn_norm, derive, divergence, l1_norm, lp_norm,
                             mean, multiply, multiply_mode, perp_grad)
from .stress_geometry import (RampProfile, default_ramp, gamma_squared_grid,
                              gamma_squared_grid_dt)

SUPPORT_RTOL = 1e-13


# -- state ------------------------------------------------------------------

@dataclass
class NSRState:
    """A forced-momentum-balance triple (v, p, stress) with metadata."""

    v: TimeTrack
    p: TimeTrack
    R: TimeTrack
    theta: float
    nu: float
    q: int = 0
    T: float = 1.0
    meta: dict = dc_field(default_factory=dict)

    @property
    def grid(self) -> Grid2:
        return self.v.grid

    @property
    def times(self) -> np.ndarray:
        return self.v.times


def gradient(f: SpectralField) -> SpectralField:
    c1 = derive(f, (1, 0)).coeffs[0]
    c2 = derive(f, (0, 1)).coeffs[0]
    return SpectralField(f.grid, "vector", np.stack([c1, c2]), f.reality, _trim=False)


def fd6_channel(track: TimeTrack) -> TimeTrack:
    """Sixth-order centered time differences as a substitute channel.

    Edge nodes fall back to shifted stencils of the same order.
    """
    n = len(track)
    if n < 7:
        raise DerivativeChannelMissing("need at least 7 nodes for the difference channel")
    dt = track.dt
    stencil = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * dt)
    dsl = []
    for i in range(n):
        j0 = min(max(i - 3, 0), n - 7)
        window = track.slices[j0:j0 + 7]
        m = max(s.storage for s in window)
        if i - j0 == 3:
            coefs = stencil
        else:
            coefs = _shifted_diff_weights(i - j0) / dt
        acc = np.zeros((window[0].ncomp, m, m), dtype=complex)
        for c, s in zip(coefs, window):
            if c != 0.0:
                acc += c * _embed(s.coeffs, m)
        dsl.append(SpectralField(track.grid, track.rank, acc, track.slices[0].reality))
    return TimeTrack(track.times, track.slices, dsl)


def _shifted_diff_weights(pos: int) -> np.ndarray:
    """First-derivative weights at node `pos` of a 7-point unit-spaced stencil."""
    xs = np.arange(7, dtype=float) - pos
    V = np.vander(xs, 7, increasing=True).T
    rhs = np.zeros(7)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def _channelled(track: TimeTrack) -> TimeTrack:
    return track if track.has_channel() else fd6_channel(track)


# -- initialization ---------------------------------------------------------

def init_state(u: TimeTrack, theta: float, nu: float, T: float,
               div_tol: float = 1e-8) -> NSRState:
    """Wrap a smooth divergence-free mean-zero track as an exact state.

    The stress absorbs the linear terms through the anti-divergence and
    the trace-free self-product; with the trace-free pressure convention
    the pressure starts at zero.
    """
    for j, s in enumerate(u.slices):
        if lp_norm(divergence(s), 2) > div_tol * max(1.0, lp_norm(s, 2)):
            raise InvalidInput(f"input slice {j} is not divergence-free")
        if np.max(np.abs(mean(s))) > div_tol * max(1.0, lp_norm(s, 2)):
            raise InvalidInput(f"input slice {j} has nonzero mean")
    u = _channelled(u)
    du2 = fd6_channel(TimeTrack(u.times, u.dslices)).dslices  # d^2/dt^2 for the stress channel
    grid = u.grid
    R_slices, dR_slices, p_slices = [], [], []
    for s, ds, dds in zip(u.slices, u.dslices, du2):
        R_slices.append(anti_divergence(ds + nu * frac_laplacian(s, theta))
                        + tf_square(s, allow_interpolant=True))
        dR_slices.append(anti_divergence(dds + nu * frac_laplacian(ds, theta))
                         + sym_tracefree_product(ds, s, allow_interpolant=True))
        p_slices.append(SpectralField.zeros(grid, "scalar"))
    v = TimeTrack(u.times, u.slices, u.dslices)
    p = TimeTrack(u.times, p_slices)
    R = TimeTrack(u.times, R_slices, dR_slices)
    return NSRState(v, p, R, float(theta), float(nu), q=0, T=float(T),
                    meta={"pressure_convention": "tracefree"})


# -- mollification ----------------------------------------------------------

@dataclass
class MollifiedState:
    v: TimeTrack          # with derivative channel
    p: TimeTrack
    R_ell: TimeTrack
    R_m: TimeTrack
    R_ls: TimeTrack       # with derivative channel
    ell: float
    norms: dict


def mollify(state: NSRState, ell: float) -> MollifiedState:
    """Space-time mollification plus the product commutator stress.

    Spatial smoothing is the Fourier multiplier of the periodized bump;
    temporal smoothing is the normalized discrete kernel applied to the
    value and derivative channels alike.  The returned low-frequency
    stress R_ls = R_ell + R_m makes the mollified triple balance exactly
    up to the mollified input residual.
    """
    times = state.times
    check_padding(times, state.T, ell)
    kern = TemporalKernel(times, ell)
    v = _channelled(state.v)
    R = _channelled(state.R)

    def smooth(f):
        return spatial_mollify(f, ell)

    vs = [smooth(s) for s in v.slices]
    dvs = [smooth(s) for s in v.dslices]
    vxv = [smooth(tf_square(s, allow_interpolant=True)) for s in v.slices]
    dvxv = [smooth(sym_tracefree_product(ds, s, allow_interpolant=True))
            for s, ds in zip(v.slices, v.dslices)]

    n_t = len(times)
    v_ell = [kern.apply_fields(vs, i) for i in range(n_t)]
    dv_ell = [kern.apply_fields(dvs, i) for i in range(n_t)]
    ps = [smooth(s) for s in state.p.slices]
    p_ell = [kern.apply_fields(ps, i) for i in range(n_t)]
    Rs = [smooth(s) for s in R.slices]
    dRs = [smooth(s) for s in R.dslices]
    R_ell, dR_ell, R_m, dR_m, R_ls, dR_ls = [], [], [], [], [], []
    for i in range(n_t):
        Ri = kern.apply_fields(Rs, i)
        dRi = kern.apply_fields(dRs, i)
        mi = tf_square(v_ell[i], allow_interpolant=True) - kern.apply_fields(vxv, i)
        dmi = (sym_tracefree_product(dv_ell[i], v_ell[i], allow_interpolant=True)
               - kern.apply_fields(dvxv, i))
        R_ell.append(Ri)
        dR_ell.append(dRi)
        R_m.append(mi)
        dR_m.append(dmi)
        R_ls.append(Ri + mi)
        dR_ls.append(dRi + dmi)

    v_track = TimeTrack(times, v_ell, dv_ell)
    r_peak = int(np.argmax([lp_norm(s, np.inf) for s in R_ls]))
    norms = {
        "v_diff_linf": max(lp_norm(a - b, np.inf)
                           for a, b in zip(v_ell, v.slices)),
        "v_diff_l2": max(lp_norm(a - b, 2) for a, b in zip(v_ell, v.slices)),
        "R_ls_l1": max(l1_norm(s) for s in R_ls),
        "R_ls_c0": max(lp_norm(s, np.inf) for s in R_ls),
        "R_ls_c1_peak": cn_norm(R_ls[r_peak], 1),
        "v_ell_c1_peak": max(cn_norm(f, 1) for f in
                             (v_ell[r_peak], v_ell[len(v_ell) // 2])),
    }
    balance = NSRState(v_track, TimeTrack(times, p_ell),
                       TimeTrack(times, R_ls, dR_ls), state.theta, state.nu,
                       state.q, state.T)
    _, bal_rep = nsr_residual(balance)
    norms["mollified_residual_rel"] = bal_rep["max_rel"]
    return MollifiedState(
        v=v_track,
        p=TimeTrack(times, p_ell),
        R_ell=TimeTrack(times, R_ell, dR_ell),
        R_m=TimeTrack(times, R_m, dR_m),
        R_ls=TimeTrack(times, R_ls, dR_ls),
        ell=float(ell),
        norms=norms,
    )


# -- temporal cutoff ---------------------------------------------------------

def _switch_eval(intervals: list, ell: float, t: np.ndarray):
    """Value and derivative of the product-of-ramps switch at times t."""
    t = np.asarray(t, dtype=float)
    if not intervals:
        z = np.zeros_like(t)
        return z, z.copy()
    w = ell / 2.0
    parts, dparts = [], []
    for (a, b) in intervals:
        xa = (t - (a - ell)) / w
        xb = ((b + ell) - t) / w
        pa, pb = smoothstep(xa), smoothstep(xb)
        dpa = smoothstep_prime(xa) / w
        dpb = -smoothstep_prime(xb) / w
        parts.append(pa * pb)
        dparts.append(dpa * pb + pa * dpb)
    values = np.ones_like(t)
    for p in parts:
        values = values * (1.0 - p)
    values = 1.0 - values
    dvalues = np.zeros_like(t)
    for i, dp in enumerate(dparts):
        rest = np.ones_like(t)
        for j, p in enumerate(parts):
            if j != i:
                rest = rest * (1.0 - p)
        dvalues += dp * rest
    return values, dvalues


@dataclass
class CutoffProfile:
    """Smooth time switch: 1 on the detected stress support, 0 outside
    its ell-neighborhood, with an analytic derivative channel."""

    times: np.ndarray
    values: np.ndarray
    dvalues: np.ndarray
    intervals: list
    ell: float

    def plateau_mask(self) -> np.ndarray:
        return self.values >= 1.0

    def support_mask(self) -> np.ndarray:
        return self.values > 0.0

    def evaluate(self, t):
        """Switch value and derivative at arbitrary times."""
        return _switch_eval(self.intervals, self.ell, t)


def support_mask(track: TimeTrack, rtol: float = SUPPORT_RTOL) -> np.ndarray:
    norms = track.slice_norms("c0")
    top = norms.max()
    if top == 0.0:
        return np.zeros(len(track), dtype=bool)
    return norms > rtol * top


def mask_intervals(times: np.ndarray, mask: np.ndarray) -> list:
    out = []
    i = 0
    n = mask.size
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            out.append((float(times[i]), float(times[j])))
            i = j + 1
        else:
            i += 1
    return out


def neighborhood_mask(times: np.ndarray, mask: np.ndarray, eps: float) -> np.ndarray:
    if not mask.any():
        return np.zeros_like(mask)
    ts = times[mask]
    dist = np.min(np.abs(times[:, None] - ts[None, :]), axis=1)
    return dist <= eps * (1.0 + 1e-12) + 1e-15


def temporal_cutoff(R_ls: TimeTrack, ell: float,
                    support_rtol: float = SUPPORT_RTOL) -> CutoffProfile:
    """Mollified-indicator switch around the detected stress support.

    Equal to 1 on the ell/2-neighborhood of the support (in particular on
    the support itself) and supported inside the ell-neighborhood; ramps
    are width-ell/2 smooth steps, one factor per support interval.
    """
    times = R_ls.times
    mask = support_mask(R_ls, support_rtol)
    intervals = mask_intervals(times, mask)
    values, dvalues = _switch_eval(intervals, float(ell), times)
    return CutoffProfile(times, values, dvalues, intervals, float(ell))


# -- coefficients -------------------------------------------------------------

def _coefficient_slice(grid: Grid2, r11, r12, dr11, dr12, phi: float, dphi: float,
                       a_const: float, eps_next: float, ramp: RampProfile):
    """Per-direction coefficient values (and d/dt) on the grid.

    Returns {positive direction: (a, da)} as value arrays; antipodes share
    the same coefficient by the even symmetry of the weights.
    """
    scale = np.sqrt(a_const * eps_next)
    inv = 1.0 / (a_const * eps_next)
    g11, g12 = r11 * inv, r12 * inv
    dg11, dg12 = dr11 * inv, dr12 * inv
    out = {}
    for k in positive_directions():
        g2 = gamma_squared_grid(k, g11, g12, ramp)
        dg2 = gamma_squared_grid_dt(k, g11, g12, dg11, dg12, ramp)
        g = np.sqrt(g2)
        a = scale * g * phi
        da = scale * (g * dphi + phi * dg2 / (2.0 * g))
        out[k] = (a, da)
    return out


def coefficients(R_ls: TimeTrack, cutoff: CutoffProfile, a_const: float,
                 eps_next: float, ramp: RampProfile | None = None) -> dict:
    """Smooth coefficient tracks a_k (antipodal directions coincide)."""
    ramp = ramp or default_ramp()
    if not R_ls.has_channel():
        R_ls = fd6_channel(R_ls)
    grid = R_ls.grid
    n = grid.n
    tracks = {}
    per_dir_slices = {k: ([], []) for k in positive_directions()}
    for i in range(len(R_ls)):
        vals = R_ls.slices[i].values(n)
        dvals = R_ls.dslices[i].values(n)
        sl = _coefficient_slice(grid, vals[0], vals[1], dvals[0], dvals[1],
                                float(cutoff.values[i]), float(cutoff.dvalues[i]),
                                a_const, eps_next, ramp)
        for k, (a, da) in sl.items():
            per_dir_slices[k][0].append(analyze(grid, a))
            per_dir_slices[k][1].append(analyze(grid, da))
    for k, (sl, dsl) in per_dir_slices.items():
        tr = TimeTrack(R_ls.times, sl, dsl)
        tracks[k] = tr
        tracks[k.antipode] = tr
    return tracks


# -- perturbations -------------------------------------------------------------

def _wave_slice(k: Direction, wp: WaveParams, t: float, grid: Grid2):
    """Kernel fields and values for one positive direction at time t."""
    f, df = eta(k, wp, t, grid)
    eta2 = multiply(f, f)
    deta2 = 2.0 * multiply(f, df)
    p_eta2 = project(eta2, FreqBand.nonzero())
    dp_eta2 = project(deta2, FreqBand.nonzero())
    return {
        "eta": f, "deta": df,
        "eta_vals": f.values(grid.n), "deta_vals": df.values(grid.n),
        "eta2_mean": float(mean(eta2).real),
        "p_eta2": p_eta2, "dp_eta2": dp_eta2,
        "p_eta2_vals": p_eta2.values(grid.n), "dp_eta2_vals": dp_eta2.values(grid.n),
    }


def _perturbation_slice(grid: Grid2, wp: WaveParams, a_slice: dict, waves: dict):
    """Assemble (w_p, w_c, w_t) and their d/dt channels for one time node.

    Multiplication by the single-mode flow/potential is an exact
    coefficient shift, which makes the stream-function identity and both
    solenoidality statements hold mode-wise.
    """
    lam = wp.lam
    zero_v = SpectralField.zeros(grid, "vector", reality=False)
    zero_s = SpectralField.zeros(grid, "scalar", reality=False)
    w_p, dw_p, w_c, dw_c = zero_v, zero_v, zero_v, zero_v
    stream, dstream = zero_s, zero_s
    wt_carrier = SpectralField.zeros(grid, "vector")
    dwt_carrier = SpectralField.zeros(grid, "vector")
    for k in positive_directions():
        a, da = a_slice[k]
        wav = waves[k]
        P = analyze(grid, a * wav["eta_vals"])
        dP = analyze(grid, da * wav["eta_vals"] + a * wav["deta_vals"])
        gP, gdP = perp_grad(P), perp_grad(dP)
        xi = lattice_vector(k.five_k, lam // 5)
        xin = (-xi[0], -xi[1])
        for shift, sign in ((xi, 1.0), (xin, -1.0)):
            amp_b = sign * 1j * k.k_perp
            w_p = w_p + multiply_mode(P, shift, amp_b, clip=True)
            dw_p = dw_p + multiply_mode(dP, shift, amp_b, clip=True)
            w_c = w_c + multiply_mode(gP, shift, 1.0 / lam, clip=True)
            dw_c = dw_c + multiply_mode(gdP, shift, 1.0 / lam, clip=True)
            stream = stream + multiply_mode(P, shift, 1.0 / lam, clip=True)
            dstream = dstream + multiply_mode(dP, shift, 1.0 / lam, clip=True)
        # temporal part: antipodal pairing doubles the positive half
        m_vals = a * a * wav["p_eta2_vals"]
        dm_vals = 2.0 * a * da * wav["p_eta2_vals"] + a * a * wav["dp_eta2_vals"]
        m_f = analyze(grid, m_vals)
        dm_f = analyze(grid, dm_vals)
        kv = k.k
        wt_carrier = wt_carrier + SpectralField(
            grid, "vector", np.stack([m_f.coeffs[0] * kv[0], m_f.coeffs[0] * kv[1]]), True)
        dwt_carrier = dwt_carrier + SpectralField(
            grid, "vector", np.stack([dm_f.coeffs[0] * kv[0], dm_f.coeffs[0] * kv[1]]), True)
    fac = 2.0 / wp.mu
    w_t = fac * helmholtz(project(wt_carrier, FreqBand.nonzero()))
    dw_t = fac * helmholtz(project(dwt_carrier, FreqBand.nonzero()))
    return {"w_p": w_p.as_real(1e-8), "w_c": w_c.as_real(1e-8), "w_t": w_t,
            "dw_p": dw_p.as_real(1e-8), "dw_c": dw_c.as_real(1e-8), "dw_t": dw_t,
            "stream": stream}


def perturbations(a_map: dict, wp: WaveParams):
    """Principal, corrector, and temporal perturbation tracks."""
    some = next(iter(a_map.values()))
    grid, times = some.grid, some.times
    outs = {name: [] for name in ("w_p", "w_c", "w_t", "dw_p", "dw_c", "dw_t")}
    for i, t in enumerate(times):
        a_slice = {}
        for k in positive_directions():
            tr = a_map[k]
            a_slice[k] = (tr.slices[i].values(grid.n), tr.dslices[i].values(grid.n))
        waves = {k: _wave_slice(k, wp, float(t), grid) for k in positive_directions()}
        sl = _perturbation_slice(grid, wp, a_slice, waves)
        for name in outs:
            outs[name].append(sl[name])
    return (TimeTrack(times, outs["w_p"], outs["dw_p"]),
            TimeTrack(times, outs["w_c"], outs["dw_c"]),
            TimeTrack(times, outs["w_t"], outs["dw_t"]))


# -- pressure corrector and stress assembly -----------------------------------

def _inv_lap_div_const(f: SpectralField, kvec: np.ndarray) -> SpectralField:
    """Delta^-1 div (kvec * f) for scalar f and a constant vector kvec."""
    from .spectral_field import _wavenumbers
    m = f.storage
    ks = _wavenumbers(m).astype(float)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    k2 = kx ** 2 + ky ** 2
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    mult = -1j * (kvec[0] * kx + kvec[1] * ky) / k2safe
    mult[0, 0] = 0.0
    return SpectralField(f.grid, "scalar", (f.coeffs[0] * mult)[None], f.reality, _trim=False)


def _pstar_slice(grid: Grid2, wp: WaveParams, a_slice: dict, waves: dict) -> SpectralField:
    """Pressure corrector absorbing the gradient parts of the oscillation
    terms: the potential products over non-antipodal pairs plus the
    kernel-square and temporal-transport pieces on the diagonal."""
    n = grid.n
    lam = wp.lam
    half_shell = FreqBand.at_least(wp.lam_sigma / 2.0)
    dirs = positive_directions()
    all_dirs = dirs + [k.antipode for k in dirs]
    accum = np.zeros((n, n), dtype=complex)

    def rep(k):
        return k if k.positive else k.antipode

    # pair terms (including the diagonal with weight 1/2)
    for i, k in enumerate(all_dirs):
        for j in range(i, len(all_dirs)):
            kp = all_dirs[j]
            if kp.five_k == k.antipode.five_k:
                continue
            weight = 0.5 if j == i else 1.0
            fa = waves[rep(k)]["eta"]
            fb = waves[rep(kp)]["eta"]
            fast = multiply(fa, fb)
            shift = (lam // 5 * (k.five_k[0] + kp.five_k[0]),
                     lam // 5 * (k.five_k[1] + kp.five_k[1]))
            fast = project(multiply_mode(fast, shift, 1.0, clip=True), half_shell)
            a1, _ = a_slice[rep(k)]
            a2, _ = a_slice[rep(kp)]
            accum -= weight * (a1 * a2) * fast.values(n)[0]
    p1 = analyze(grid, accum, reality=False)
    # diagonal transport part
    p2 = SpectralField.zeros(grid, "scalar")
    for k in dirs:
        a, da = a_slice[k]
        wav = waves[k]
        m_vals = a * a * wav["p_eta2_vals"]
        dm_vals = 2.0 * a * da * wav["p_eta2_vals"] + a * a * wav["dp_eta2_vals"]
        m_f = analyze(grid, m_vals)
        dm_f = analyze(grid, dm_vals)
        p2 = p2 + m_f - (2.0 / wp.mu) * _inv_lap_div_const(dm_f, k.k)
    return (p1 + p2).as_real(1e-8)


def assemble_stress(moll: MollifiedState, pert_slices: dict, pstar: SpectralField,
                    i: int, theta: float, nu: float):
    """New stress and pressure at node i from the assembled forcing.

    The forcing is d/dt w + nu (-Lap)^theta w + div(v x w + w x v + w x w)
    + div R_ls; subtracting grad(pstar) and applying the anti-divergence
    gives a stress whose divergence reproduces the forcing exactly, so
    the updated triple balances by construction.
    """
    v_l = moll.v.slices[i]
    w = pert_slices["w_p"] + pert_slices["w_c"] + pert_slices["w_t"]
    dw = pert_slices["dw_p"] + pert_slices["dw_c"] + pert_slices["dw_t"]
    v_new = (v_l + w).as_real(1e-8)
    dv_new = moll.v.dslices[i] + dw
    t_new = tf_square(v_new, allow_interpolant=True)
    t_old = tf_square(v_l, allow_interpolant=True)
    forcing = (dw + nu * frac_laplacian(w, theta)
               + divergence(t_new - t_old) + divergence(moll.R_ls.slices[i]))
    R_new = anti_divergence(forcing - gradient(pstar))
    p_new = moll.p.slices[i] - pstar
    return v_new, dv_new, p_new, R_new


# -- residual verifier ---------------------------------------------------------

def nsr_residual(state: NSRState, use_channel: bool = True):
    """Forced momentum-balance residual per slice, from the state alone.

    residual = d/dt v + div(v x v) + grad p + nu (-Lap)^theta v - div R,
    with the trace-free product and the matching pressure convention
    (the classical pressure is p - |v|^2/2).  Returns the residual track
    and a report with per-slice norms and the relative size
    max ||res||_L2 / (1 + max slice term scale).
    """
    v = state.v if (state.v.has_channel() and use_channel) else fd6_channel(state.v)
    res_slices, res_norms, scales = [], [], []
    for i in range(len(v)):
        vi, dvi = v.slices[i], v.dslices[i]
        terms = [dvi,
                 divergence(tf_square(vi, allow_interpolant=True)),
                 gradient(state.p.slices[i]),
                 state.nu * frac_laplacian(vi, state.theta),
                 -1.0 * divergence(state.R.slices[i])]
        res = terms[0]
        for t in terms[1:]:
            res = res + t
        res_slices.append(res)
        res_norms.append(lp_norm(res, 2))
        scales.append(sum(lp_norm(t, 2) for t in terms))
    res_norms = np.array(res_norms)
    scales = np.array(scales)
    denom = 1.0 + scales.max()
    window = (v.times >= -1e-12) & (v.times <= state.T + 1e-12)
    report = {
        "per_slice_l2": res_norms,
        "scale": float(scales.max()),
        "max_rel": float(res_norms.max() / denom),
        "window_max_rel": float(res_norms[window].max() / denom) if window.any() else 0.0,
        "pressure_note": "trace-free convention; classical pressure is p - |v|^2/2",
    }
    return TimeTrack(v.times, res_slices), report


# -- full step -----------------------------------------------------------------

@dataclass
class StepDiagnostics:
    rows: list = dc_field(default_factory=list)
    residual_report: dict = dc_field(default_factory=dict)
    support: dict = dc_field(default_factory=dict)
    identities: dict = dc_field(default_factory=dict)

    def add(self, name: str, ref: str, value: float, predicted: float | None = None):
        margin = (value / predicted) if predicted else None
        self.rows.append({"quantity": name, "ref": ref, "value": float(value),
                          "predicted_scaling": predicted, "margin": margin})


def iterate_step(state: NSRState, toy: ToyParams,
                 ramp: RampProfile | None = None):
    """One full stress-reduction step at desk-scale parameters.

    Returns the new state and the measured diagnostics.  The loop is
    slice-streamed: wave data, coefficients, perturbations, the pressure
    corrector, and the new stress are built per time node and released.
    """
    ramp = ramp or default_ramp()
    wp = toy.wp
    grid = state.grid
    n = grid.n
    times = state.times
    diags = StepDiagnostics()

    moll = mollify(state, toy.ell)
    cut = temporal_cutoff(moll.R_ls, toy.ell)
    plateau = cut.plateau_mask()

    v_new, dv_new, p_new, R_new = [], [], [], []
    w_norms = {"w_p": 0.0, "w_c": 0.0, "w_t": 0.0, "dw_p": 0.0}
    stream_err = 0.0
    sol_err = 0.0
    osc_err = 0.0
    osc_scale = 0.0
    w_support = np.zeros(len(times), dtype=bool)
    l2_increment = 0.0
    peak = int(np.argmax(cut.values))
    p_rep = 1.5
    groups = {}

    for i, t in enumerate(times):
        phi, dphi = float(cut.values[i]), float(cut.dvalues[i])
        if phi == 0.0 and dphi == 0.0:
            v_new.append(moll.v.slices[i])
            dv_new.append(moll.v.dslices[i])
            p_new.append(moll.p.slices[i])
            R_new.append(anti_divergence(divergence(moll.R_ls.slices[i])))
            continue
        rv = moll.R_ls.slices[i].values(n)
        drv = moll.R_ls.dslices[i].values(n)
        a_slice = _coefficient_slice(grid, rv[0], rv[1], drv[0], drv[1],
                                     phi, dphi, toy.a_const, toy.eps_next, ramp)
        waves = {k: _wave_slice(k, wp, float(t), grid) for k in positive_directions()}
        pert = _perturbation_slice(grid, wp, a_slice, waves)
        pstar = _pstar_slice(grid, wp, a_slice, waves)
        vi, dvi, pi, Ri = assemble_stress(moll, pert, pstar, i, state.theta, state.nu)
        if i == peak:
            # stress error groups at the strongest slice, one norm each
            w = pert["w_p"] + pert["w_c"] + pert["w_t"]
            groups["lin_time"] = lp_norm(
                anti_divergence(pert["dw_p"] + pert["dw_c"]), p_rep)
            groups["lin_dissipation_cross"] = lp_norm(
                anti_divergence(state.nu * frac_laplacian(w, state.theta))
                + sym_tracefree_product(moll.v.slices[i], w, allow_interpolant=True),
                p_rep)
            corr = (sym_tracefree_product(pert["w_c"] + pert["w_t"], w,
                                          allow_interpolant=True)
                    + sym_tracefree_product(pert["w_p"], pert["w_c"] + pert["w_t"],
                                            allow_interpolant=True))
            # the symmetrized corrector double-counts the plain sum
            groups["corrector"] = 0.5 * lp_norm(corr, p_rep)
            osc_force = (divergence(tf_square(pert["w_p"], allow_interpolant=True)
                                    + moll.R_ls.slices[i]) + pert["dw_t"])
            groups["oscillation"] = lp_norm(
                anti_divergence(osc_force - gradient(pstar)), p_rep)
        v_new.append(vi)
        dv_new.append(dvi)
        p_new.append(pi)
        R_new.append(Ri)
        w_support[i] = True
        # identity and size diagnostics
        w_norms["w_p"] = max(w_norms["w_p"], lp_norm(pert["w_p"], 2))
        w_norms["w_c"] = max(w_norms["w_c"], lp_norm(pert["w_c"], 2))
        w_norms["w_t"] = max(w_norms["w_t"], lp_norm(pert["w_t"], 2))
        w_norms["dw_p"] = max(w_norms["dw_p"], lp_norm(pert["dw_p"], 2))
        stream_err = max(stream_err, lp_norm(
            pert["w_p"] + pert["w_c"] - perp_grad(pert["stream"]), 2))
        sol_err = max(sol_err,
                      lp_norm(divergence(pert["w_p"] + pert["w_c"]), 2),
                      lp_norm(divergence(pert["w_t"]), 2))
        l2_increment = max(l2_increment, lp_norm(vi - moll.v.slices[i], 2))
        if plateau[i]:
            acc11 = rv[0].copy()
            acc12 = rv[1].copy()
            for k in positive_directions():
                a, _ = a_slice[k]
                t11 = 0.5 * (k.k[0] ** 2 - k.k[1] ** 2)
                t12 = k.k[0] * k.k[1]
                m2 = waves[k]["eta2_mean"]
                acc11 -= 2.0 * a * a * t11 * m2
                acc12 -= 2.0 * a * a * t12 * m2
            osc_err = max(osc_err, float(np.max(np.hypot(acc11, acc12))))
            osc_scale = max(osc_scale, float(np.max(np.hypot(rv[0], rv[1]))))

    new_state = NSRState(
        v=TimeTrack(times, v_new, dv_new),
        p=TimeTrack(times, p_new),
        R=TimeTrack(times, R_new),
        theta=state.theta, nu=state.nu, q=state.q + 1, T=state.T,
        meta=dict(state.meta, parent_q=state.q),
    )

    _, rep = nsr_residual(new_state)
    diags.residual_report = rep

    # support containments, slice-exact on the grid
    r_old = support_mask(state.R)
    r_ls = support_mask(moll.R_ls)
    r_new_mask = support_mask(new_state.R)
    phi_mask = cut.support_mask()
    diags.support = {
        "w_in_phi": bool(np.all(~w_support | phi_mask)),
        "phi_in_Nell_Rls": bool(np.all(~phi_mask | neighborhood_mask(times, r_ls, toy.ell))),
        "Rls_in_Nell_Rq": bool(np.all(~r_ls | neighborhood_mask(times, r_old, toy.ell))),
        "Rnew_in_N2ell_Rq": bool(np.all(~r_new_mask | neighborhood_mask(times, r_old, 2 * toy.ell))),
    }
    diags.identities = {
        "stream_identity_l2": stream_err,
        "solenoidality_l2": sol_err,
        "oscillation_c0": osc_err,
        "oscillation_scale": osc_scale,
        "w_p_l2": w_norms["w_p"],
        "v_new_mean_max": max(float(np.max(np.abs(mean(s)))) for s in v_new),
        "mollified_residual_rel": moll.norms["mollified_residual_rel"],
    }

    s = float(wp.sigma)
    lam, mu, r = wp.lam, wp.mu, wp.r
    ell = toy.ell
    rpow = r ** (2 - 2 / p_rep)
    if groups:
        diags.add("stress_group_lin_time", "7.16a", groups["lin_time"],
                  ell ** -8 * s * mu * rpow)
        diags.add("stress_group_lin_dissipation", "7.16b",
                  groups["lin_dissipation_cross"],
                  ell ** -4 * lam ** theta_star_value(state.theta)
                  * r ** (1 - 2 / p_rep))
        diags.add("stress_group_corrector", "7.16c", groups["corrector"],
                  ell ** -8 * (r / mu) * rpow)
        diags.add("stress_group_oscillation", "7.16d", groups["oscillation"],
                  ell ** -8 * (1.0 / (lam * s) + s * r) * rpow)
    diags.add("w_p_L_inf_L2", "3.42", w_norms["w_p"],
              np.sqrt(toy.a_const * toy.eps_next) + ell ** -2 / np.sqrt(lam * s))
    diags.add("w_c_plus_w_t_L2", "3.44", w_norms["w_c"] + w_norms["w_t"],
              ell ** -4 * (s + 1.0 / mu) * r)
    diags.add("dt_w_p_L2", "3.45", w_norms["dw_p"], ell ** -4 * lam * s * mu * r)
    diags.add("v_increment_L_inf_L2", "2.5", l2_increment,
              np.sqrt(toy.a_const * toy.eps_next))
    r_lp = max(lp_norm(f, p_rep) for f in R_new)
    r_l1 = max(l1_norm(f) for f in R_new)
    r_c1 = 0.0 if len(R_new) == 0 else max(
        lp_norm(f, np.inf) for f in R_new)
    diags.add("R_new_L_3/2", "7.16", r_lp,
              ell ** -8 * (s * mu + s * r + r / mu + 1.0 / (lam * s)) * rpow
              + ell ** -4 * lam ** theta_star_value(state.theta) * r ** (1 - 2 / p_rep))
    diags.add("R_new_L1", "2.3b", r_l1, None)
    diags.add("R_new_C0", "7.17", r_c1, None)
    diags.add("residual_window_max_rel", "2.1", rep["window_max_rel"], None)
    diags.add("stream_identity", "3.33", stream_err, None)
    diags.add("solenoidality", "3.33+", sol_err, None)
    diags.add("oscillation_cancel", "3.34", osc_err, None)
    return new_state, diags


def theta_star_value(theta: float) -> float:
    return 2.0 * theta - 1.0 if theta > 0.5 else 0.0
