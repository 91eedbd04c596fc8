"""Band-limited fields on the square 2-torus [0, 2pi)^2.

A field is a trigonometric polynomial stored by its complex Fourier
coefficients in FFT layout.  Scalars carry one component, vectors two,
and symmetric trace-free tensors two (t11, t12; the remaining entries
are reconstructed as t21 = t12, t22 = -t11).

Conventions fixed here and relied on everywhere else:

* f(x) = sum_xi c(xi) exp(i xi . x), xi on the integer lattice,
  |xi_i| < n/2 (the Nyquist bin is always empty);
* integrals are unnormalized Lebesgue integrals over the (2pi)^2 torus,
  evaluated by the rectangle rule, which is exact for trigonometric
  polynomials of degree below the grid Nyquist;
* Parseval: int |f|^2 dx = (2pi)^2 sum |c|^2.

Coefficient arrays may be stored on a smaller internal FFT size than the
logical grid; zero-padding between sizes is exact, so this is purely a
memory optimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingRisk, ConfigError, RankError

# Relative floor below which coefficients are treated as numerically absent
# when measuring a field's band-limit.
BAND_RTOL = 1e-13

_RANK_NCOMP = {"scalar": 1, "vector": 2, "symtensor": 2}


@dataclass(frozen=True)
class Grid2:
    """Uniform n-by-n grid on [0, 2pi)^2 with nodes x_j = 2pi j / n."""

    n: int

    def nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def cell_measure(self) -> float:
        return (2.0 * np.pi / self.n) ** 2

    @property
    def max_mode(self) -> int:
        return self.n // 2 - 1


def make_grid(n: int) -> Grid2:
    """Validate and build a grid; n must be a power of two, n >= 4."""
    if not isinstance(n, (int, np.integer)) or n < 4 or (n & (n - 1)) != 0:
        raise ConfigError(f"grid size must be a power of two >= 4, got {n!r}")
    return Grid2(int(n))


def _fft_size(band: int) -> int:
    """Smallest power-of-two FFT size whose Nyquist strictly exceeds band."""
    m = 8
    while m // 2 - 1 < band:
        m *= 2
    return m


def _wavenumbers(m: int) -> np.ndarray:
    return np.fft.fftfreq(m, 1.0 / m).astype(np.int64)


def _embed(coeffs: np.ndarray, m_new: int) -> np.ndarray:
    """Zero-pad (or validate same-size) FFT-layout coefficients to m_new."""
    m = coeffs.shape[-1]
    if m_new == m:
        return coeffs
    if m_new < m:
        raise ValueError("embedding target smaller than source")
    out = np.zeros(coeffs.shape[:-2] + (m_new, m_new), dtype=complex)
    h = m // 2
    out[..., :h, :h] = coeffs[..., :h, :h]
    out[..., :h, m_new - h:] = coeffs[..., :h, h:]
    out[..., m_new - h:, :h] = coeffs[..., h:, :h]
    out[..., m_new - h:, m_new - h:] = coeffs[..., h:, h:]
    return out


class SpectralField:
    """A scalar / vector / symmetric-trace-free tensor trig polynomial."""

    __slots__ = ("grid", "rank", "coeffs", "reality", "_band")

    def __init__(self, grid: Grid2, rank: str, coeffs: np.ndarray,
                 reality: bool, _trim: bool = True):
        if rank not in _RANK_NCOMP:
            raise RankError(f"unknown rank {rank!r}")
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if coeffs.shape[0] != _RANK_NCOMP[rank] or coeffs.shape[-1] != coeffs.shape[-2]:
            raise ConfigError(f"coefficient array shape {coeffs.shape} does not match rank {rank!r}")
        m = coeffs.shape[-1]
        if m > grid.n:
            raise AliasingRisk(f"storage size {m} exceeds grid {grid.n}")
        self.grid = grid
        self.rank = rank
        self.reality = bool(reality)
        self._band = None
        if _trim:
            coeffs = self._trimmed(coeffs)
        self.coeffs = coeffs
        self.coeffs.flags.writeable = False

    # -- construction -------------------------------------------------

    @classmethod
    def zeros(cls, grid: Grid2, rank: str, reality: bool = True) -> "SpectralField":
        nc = _RANK_NCOMP[rank]
        return cls(grid, rank, np.zeros((nc, 8, 8), dtype=complex), reality, _trim=False)

    @classmethod
    def from_modes(cls, grid: Grid2, rank: str, modes: dict, reality: bool | None = None) -> "SpectralField":
        """Build a field from a {(xi1, xi2): amplitude(s)} dictionary."""
        nc = _RANK_NCOMP[rank]
        band = max((max(abs(x1), abs(x2)) for (x1, x2) in modes), default=0)
        if band > grid.max_mode:
            raise AliasingRisk(f"mode band {band} exceeds grid Nyquist {grid.max_mode}")
        m = min(_fft_size(band), grid.n)
        arr = np.zeros((nc, m, m), dtype=complex)
        for (x1, x2), amp in modes.items():
            amp = np.atleast_1d(np.asarray(amp, dtype=complex))
            arr[:, x1 % m, x2 % m] += amp
        if reality is None:
            reality = _is_conjugate_symmetric(arr)
        return cls(grid, rank, arr, reality, _trim=False)

    def _trimmed(self, coeffs: np.ndarray) -> np.ndarray:
        band = _measure_band(coeffs)
        self._band = band
        m_opt = min(_fft_size(band), self.grid.n)
        m = coeffs.shape[-1]
        if m_opt >= m:
            return coeffs
        ks = _wavenumbers(m)
        keep = np.abs(ks) <= m_opt // 2 - 1
        out = np.zeros(coeffs.shape[:-2] + (m_opt, m_opt), dtype=complex)
        sel1 = ks[keep] % m_opt
        out[..., sel1[:, None], sel1[None, :]] = coeffs[..., keep, :][..., :, keep]
        return out

    # -- basic queries -------------------------------------------------

    @property
    def ncomp(self) -> int:
        return _RANK_NCOMP[self.rank]

    @property
    def storage(self) -> int:
        return self.coeffs.shape[-1]

    def band(self) -> int:
        """Largest |xi|_inf carrying relative weight above BAND_RTOL."""
        if self._band is None:
            self._band = _measure_band(self.coeffs)
        return self._band

    def coeff(self, xi) -> np.ndarray:
        """Coefficient(s) at wave vector xi = (xi1, xi2)."""
        x1, x2 = int(xi[0]), int(xi[1])
        m = self.storage
        if max(abs(x1), abs(x2)) > m // 2 - 1:
            if max(abs(x1), abs(x2)) > self.grid.max_mode:
                raise ConfigError(f"mode {xi} outside the grid band")
            return np.zeros(self.ncomp, dtype=complex)
        return self.coeffs[:, x1 % m, x2 % m].copy()

    def mode_magnitudes(self):
        """(|xi| array, summed |coeff|^2 array) over the storage lattice."""
        m = self.storage
        ks = _wavenumbers(m)
        kx, ky = np.meshgrid(ks, ks, indexing="ij")
        mag2 = np.sum(np.abs(self.coeffs) ** 2, axis=0)
        return np.hypot(kx, ky), mag2

    # -- transforms ----------------------------------------------------

    def values(self, n: int | None = None) -> np.ndarray:
        """Physical samples on the n-by-n grid (real array when reality)."""
        n = self.grid.n if n is None else n
        if n < self.storage:
            if self.band() > n // 2 - 1:
                raise AliasingRisk("requested grid coarser than the stored band")
            ks = _wavenumbers(self.storage)
            keep = np.abs(ks) <= n // 2 - 1
            sel = ks[keep] % n
            small = np.zeros(self.coeffs.shape[:-2] + (n, n), dtype=complex)
            small[..., sel[:, None], sel[None, :]] = \
                self.coeffs[..., keep, :][..., :, keep]
            vals = np.fft.ifft2(small, axes=(-2, -1)) * (n * n)
            if self.reality:
                return np.ascontiguousarray(vals.real)
            return vals
        big = _embed(self.coeffs, n)
        vals = np.fft.ifft2(big, axes=(-2, -1)) * (n * n)
        if self.reality:
            return np.ascontiguousarray(vals.real)
        return vals

    # -- algebra ---------------------------------------------------------

    def _binary_check(self, other: "SpectralField"):
        if self.grid.n != other.grid.n:
            raise ConfigError("fields live on different grids")
        if self.rank != other.rank:
            raise RankError(f"rank mismatch {self.rank} vs {other.rank}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._binary_check(other)
        m = max(self.storage, other.storage)
        return SpectralField(self.grid, self.rank,
                             _embed(self.coeffs, m) + _embed(other.coeffs, m),
                             self.reality and other.reality)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._binary_check(other)
        m = max(self.storage, other.storage)
        return SpectralField(self.grid, self.rank,
                             _embed(self.coeffs, m) - _embed(other.coeffs, m),
                             self.reality and other.reality)

    def __mul__(self, c) -> "SpectralField":
        c = complex(c)
        real = self.reality and c.imag == 0.0
        return SpectralField(self.grid, self.rank, self.coeffs * c, real, _trim=False)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * (-1.0)

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, "scalar", self.coeffs[i:i + 1], self.reality, _trim=False)

    def as_real(self, rtol: float = 1e-10) -> "SpectralField":
        """Assert conjugate symmetry and set the reality flag."""
        if not _is_conjugate_symmetric(self.coeffs, rtol):
            raise ConfigError("field is not conjugate-symmetric; cannot flag as real")
        return SpectralField(self.grid, self.rank, self.coeffs, True, _trim=False)


def _measure_band(coeffs: np.ndarray) -> int:
    mag = np.max(np.abs(coeffs), axis=0)
    cmax = mag.max()
    if cmax == 0.0:
        return 0
    m = coeffs.shape[-1]
    ks = np.abs(_wavenumbers(m))
    mask = mag > BAND_RTOL * cmax
    kx = ks[:, None] * np.ones(m, dtype=np.int64)[None, :]
    ky = np.ones(m, dtype=np.int64)[:, None] * ks[None, :]
    return int(np.maximum(kx, ky)[mask].max())


def _is_conjugate_symmetric(coeffs: np.ndarray, rtol: float = 1e-10) -> bool:
    m = coeffs.shape[-1]
    flipped = np.conj(coeffs[..., (m - np.arange(m)) % m, :][..., :, (m - np.arange(m)) % m])
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return True
    return float(np.max(np.abs(coeffs - flipped))) <= rtol * scale


# -- spec operations -----------------------------------------------------

def analyze(grid: Grid2, values: np.ndarray, rank: str = "scalar",
            reality: bool | None = None) -> SpectralField:
    """Fourier-analyze physical samples on the grid into a SpectralField.

    The Nyquist row/column is zeroed: fields never carry |xi_i| >= n/2.
    """
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[None]
    if values.shape[0] != _RANK_NCOMP[rank]:
        raise RankError(f"component count {values.shape[0]} does not match rank {rank!r}")
    n = values.shape[-1]
    if n != grid.n or values.shape[-2] != grid.n:
        raise ConfigError(f"samples shaped {values.shape} do not live on the {grid.n}^2 grid")
    if reality is None:
        reality = bool(np.isrealobj(values))
    coeffs = np.fft.fft2(values, axes=(-2, -1)) / (n * n)
    coeffs[..., n // 2, :] = 0.0
    coeffs[..., :, n // 2] = 0.0
    return SpectralField(grid, rank, coeffs, reality)


def synthesize(field: SpectralField, n: int | None = None) -> np.ndarray:
    """Physical-grid view of the field (inverse of analyze)."""
    return field.values(n)


def derive(field: SpectralField, multi_index) -> SpectralField:
    """Spectral derivative d^a/dx1^a d^b/dx2^b."""
    a, b = int(multi_index[0]), int(multi_index[1])
    if a < 0 or b < 0:
        raise ConfigError("derivative orders must be nonnegative")
    m = field.storage
    ks = _wavenumbers(m)
    mult = np.ones((m, m), dtype=complex)
    if a:
        mult = mult * (1j * ks[:, None]) ** a
    if b:
        mult = mult * (1j * ks[None, :]) ** b
    return SpectralField(field.grid, field.rank, field.coeffs * mult,
                         field.reality, _trim=False)


def perp_grad(f: SpectralField) -> SpectralField:
    """Rotated gradient (-d2 f, d1 f); always divergence-free."""
    if f.rank != "scalar":
        raise RankError("perp_grad needs a scalar field")
    m = f.storage
    ks = _wavenumbers(m)
    c1 = -1j * ks[None, :] * f.coeffs[0]
    c2 = 1j * ks[:, None] * f.coeffs[0]
    return SpectralField(f.grid, "vector", np.stack([c1, c2]), f.reality, _trim=False)


def divergence(field: SpectralField) -> SpectralField:
    """Row-wise spectral divergence of a vector or symtensor field."""
    m = field.storage
    ks = _wavenumbers(m)
    d1 = 1j * ks[:, None]
    d2 = 1j * ks[None, :]
    if field.rank == "vector":
        c = d1 * field.coeffs[0] + d2 * field.coeffs[1]
        return SpectralField(field.grid, "scalar", c[None], field.reality, _trim=False)
    if field.rank == "symtensor":
        t11, t12 = field.coeffs[0], field.coeffs[1]
        r1 = d1 * t11 + d2 * t12
        r2 = d1 * t12 - d2 * t11
        return SpectralField(field.grid, "vector", np.stack([r1, r2]),
                             field.reality, _trim=False)
    raise RankError("divergence needs a vector or symtensor field")


def pointwise_magnitude(field: SpectralField, n: int | None = None) -> np.ndarray:
    vals = field.values(n)
    if field.rank == "symtensor":
        # full 2x2 Frobenius magnitude from the two stored components
        return np.sqrt(2.0 * np.abs(vals[0]) ** 2 + 2.0 * np.abs(vals[1]) ** 2)
    return np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))


def lp_norm(field: SpectralField, p: float) -> float:
    """Unnormalized L^p norm by grid quadrature; p = inf is the grid max."""
    if not (p > 1.0):
        raise ConfigError(f"L^p norm needs p in (1, inf], got {p}")
    mag = pointwise_magnitude(field)
    if np.isinf(p):
        return float(mag.max())
    w = field.grid.cell_measure
    return float((np.sum(mag ** p) * w) ** (1.0 / p))


def l1_norm(field: SpectralField) -> float:
    """Quadrature L^1 size, used for reporting (lp_norm's contract is p > 1)."""
    return float(np.sum(pointwise_magnitude(field)) * field.grid.cell_measure)


def cn_norm(field: SpectralField, order: int) -> float:
    """Grid sup over the derivative tensors of total order <= order.

    The j-th derivative enters through its full tensor magnitude
    (sum over ordered index tuples, i.e. multinomial weights on the
    multi-indices); on a single-mode wave of frequency lambda this makes
    the C^N size exactly lambda^N.
    """
    if order < 0:
        raise ConfigError("derivative order must be nonnegative")
    from math import comb
    best = 0.0
    for j in range(order + 1):
        acc = None
        for a in range(j + 1):
            d = pointwise_magnitude(derive(field, (a, j - a))) ** 2 * comb(j, a)
            acc = d if acc is None else acc + d
        best = max(best, float(np.sqrt(acc.max())))
    return best


def mean(field: SpectralField):
    """Torus average, i.e. the coefficient at xi = 0 (per component)."""
    val = field.coeff((0, 0))
    if field.reality:
        val = val.real
    if field.rank == "scalar":
        return val[0]
    return val


# -- products -------------------------------------------------------------

def multiply(f: SpectralField, g: SpectralField, *,
             allow_interpolant: bool = False) -> SpectralField:
    """Pointwise product of a scalar with a scalar/vector/symtensor field.

    When the operand bands fit below Nyquist the product is formed on a
    grid that resolves their sum, hence exact.  Otherwise it is the
    interpolant product on the master grid, which is only legitimate for
    grid-defined compositions; callers must opt in via allow_interpolant.
    """
    if f.grid.n != g.grid.n:
        raise ConfigError("fields live on different grids")
    if f.rank != "scalar" and g.rank != "scalar":
        raise RankError("multiply needs at least one scalar operand")
    if f.rank != "scalar":
        f, g = g, f
    bsum = f.band() + g.band()
    n = f.grid.n
    if bsum <= n // 2 - 1:
        m = min(_fft_size(bsum), n)
    elif allow_interpolant:
        m = n
    else:
        raise AliasingRisk(
            f"product band {bsum} exceeds grid Nyquist {n // 2 - 1}; "
            "refine the grid or use the interpolant product knowingly")
    fv = f.values(m)
    gv = g.values(m)
    prod = fv[0][None] * gv
    coeffs = np.fft.fft2(prod, axes=(-2, -1)) / (m * m)
    coeffs[..., m // 2, :] = 0.0
    coeffs[..., :, m // 2] = 0.0
    return SpectralField(f.grid, g.rank, coeffs, f.reality and g.reality)


def multiply_mode(f: SpectralField, xi, amplitudes, clip: bool = False) -> SpectralField:
    """Exact product with a single-mode field amp * exp(i xi . x).

    Implemented as a coefficient shift, so no grid sampling or aliasing
    is involved.  Content shifted past the grid band is unrepresentable:
    by default that raises, while clip=True discards it (legitimate when
    only the numerically thin edge of a grid-composed factor is
    affected).  The discard mask depends on the target mode alone, so
    identities among consistently clipped objects stay mode-exact.
    `amplitudes` is a scalar (rank-preserving) or a length-2 vector
    (promoting a scalar f to a vector result).
    """
    x1, x2 = int(xi[0]), int(xi[1])
    shift = max(abs(x1), abs(x2))
    m = _fft_size(f.band() + shift)  # may exceed the grid size transiently
    base = _embed(f.coeffs, m)
    shifted = np.roll(base, (x1, x2), axis=(-2, -1))
    bmax = f.grid.max_mode
    if m > f.grid.n:
        ks = _wavenumbers(m)
        outside = (np.abs(ks)[:, None] > bmax) | (np.abs(ks)[None, :] > bmax)
        top = np.max(np.abs(shifted))
        lost = np.max(np.abs(shifted[..., outside])) if outside.any() else 0.0
        if not clip and top > 0.0 and lost > BAND_RTOL * top:
            raise AliasingRisk(
                f"mode shift pushes weight {lost:.2e} past the grid band {bmax}")
        keep = np.abs(ks) <= bmax
        sel = ks[keep] % f.grid.n
        small = np.zeros(shifted.shape[:-2] + (f.grid.n, f.grid.n), dtype=complex)
        small[..., sel[:, None], sel[None, :]] = shifted[..., keep, :][..., :, keep]
        shifted = small
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    if amps.size == 1:
        out = shifted * amps[0]
        rank = f.rank
    else:
        if f.rank != "scalar":
            raise RankError("vector amplitude needs a scalar field")
        out = np.concatenate([shifted * a for a in amps])
        rank = "vector" if amps.size == 2 else f.rank
    return SpectralField(f.grid, rank, out, False, _trim=False)


def random_field(grid: Grid2, rank: str, band: int, seed: int,
                 decay: float = 1.0, mean_zero: bool = True) -> SpectralField:
    """Seeded random real field with spectrum ~ (1+|xi|)^-decay inside band."""
    if band > grid.max_mode:
        raise AliasingRisk(f"band {band} exceeds grid Nyquist {grid.max_mode}")
    rng = np.random.default_rng(seed)
    nc = _RANK_NCOMP[rank]
    m = min(_fft_size(band), grid.n)
    ks = _wavenumbers(m)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    inside = np.maximum(np.abs(kx), np.abs(ky)) <= band
    amp = (rng.standard_normal((nc, m, m)) + 1j * rng.standard_normal((nc, m, m)))
    amp *= inside / (1.0 + np.hypot(kx, ky)) ** decay
    # enforce conjugate symmetry: c(-xi) = conj(c(xi))
    rev = (m - np.arange(m)) % m
    amp = 0.5 * (amp + np.conj(amp[..., rev, :][..., :, rev]))
    if mean_zero:
        amp[..., 0, 0] = 0.0
    else:
        amp[..., 0, 0] = amp[..., 0, 0].real
    return SpectralField(grid, rank, amp, True)


# -- time tracks ----------------------------------------------------------

class TimeTrack:
    """Uniformly sampled family of fields over a padded time interval.

    `dslices`, when present, is the analytic time-derivative channel; the
    pair (slices, dslices) is treated as a first-order jet and every
    linear operation maps both channels identically.
    """

    __slots__ = ("times", "slices", "dslices")

    def __init__(self, times: np.ndarray, slices: list, dslices: list | None = None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ConfigError("a time track needs at least two nodes")
        dt = np.diff(times)
        if np.any(dt <= 0) or np.max(np.abs(dt - dt[0])) > 1e-12 * max(1.0, abs(dt[0])):
            raise ConfigError("time nodes must be strictly increasing and uniform")
        if len(slices) != times.size:
            raise ConfigError("slice count does not match time nodes")
        if dslices is not None and len(dslices) != times.size:
            raise ConfigError("derivative channel count does not match time nodes")
        g0, r0 = slices[0].grid, slices[0].rank
        for s in slices:
            if s.grid.n != g0.n or s.rank != r0:
                raise ConfigError("all slices must share one grid and rank")
        self.times = times
        self.slices = list(slices)
        self.dslices = list(dslices) if dslices is not None else None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def grid(self) -> Grid2:
        return self.slices[0].grid

    @property
    def rank(self) -> str:
        return self.slices[0].rank

    def __len__(self) -> int:
        return len(self.slices)

    def has_channel(self) -> bool:
        return self.dslices is not None

    def slice_norms(self, kind: str = "c0") -> np.ndarray:
        if kind == "c0":
            return np.array([lp_norm(s, np.inf) for s in self.slices])
        if kind == "l2":
            return np.array([lp_norm(s, 2.0) for s in self.slices])
        raise ConfigError(f"unknown norm kind {kind!r}")

    def map(self, fn, map_channel: bool = True) -> "TimeTrack":
        """Apply a linear field operation to values (and channel)."""
        new = [fn(s) for s in self.slices]
        dnew = None
        if self.dslices is not None and map_channel:
            dnew = [fn(s) for s in self.dslices]
        return TimeTrack(self.times, new, dnew)
