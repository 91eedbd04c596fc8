"""Frequency-side operator toolkit.

Sharp-cutoff frequency projectors (Euclidean shells), the Helmholtz-Leray
projector, the fractional Laplacian, the order -1 smoother |grad|^-1, the
anti-divergence operator, and the trace-free tensor product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RankError
from .spectral_field import (SpectralField, _embed, _wavenumbers, lp_norm,
                             multiply)


@dataclass(frozen=True)
class FreqBand:
    """A radial frequency window: closed band, at-least, or mean-removal."""

    lo: float
    hi: float
    kind: str  # "band" | "at_least" | "nonzero"

    def __post_init__(self):
        if self.kind not in ("band", "at_least", "nonzero"):
            raise ConfigError(f"unknown band kind {self.kind!r}")
        if self.kind == "band" and not (0 <= self.lo <= self.hi):
            raise ConfigError("band needs 0 <= lo <= hi")

    @staticmethod
    def band(lo: float, hi: float) -> "FreqBand":
        return FreqBand(float(lo), float(hi), "band")

    @staticmethod
    def at_least(lo: float) -> "FreqBand":
        return FreqBand(float(lo), np.inf, "at_least")

    @staticmethod
    def nonzero() -> "FreqBand":
        return FreqBand(0.0, np.inf, "nonzero")


def _abs2_lattice(m: int) -> np.ndarray:
    ks = _wavenumbers(m)
    return (ks[:, None].astype(float)) ** 2 + (ks[None, :].astype(float)) ** 2


def project(field: SpectralField, band: FreqBand) -> SpectralField:
    """Keep the coefficients whose Euclidean |xi| lies in the window."""
    m = field.storage
    if band.kind == "nonzero":
        out = field.coeffs.copy()
        out[..., 0, 0] = 0.0
        return SpectralField(field.grid, field.rank, out, field.reality, _trim=False)
    k2 = _abs2_lattice(m)
    if band.kind == "at_least":
        mask = k2 >= band.lo ** 2
    else:
        mask = (k2 >= band.lo ** 2) & (k2 <= band.hi ** 2)
    return SpectralField(field.grid, field.rank, field.coeffs * mask,
                         field.reality, _trim=False)


def helmholtz(field: SpectralField) -> SpectralField:
    """Leray projection onto divergence-free fields; the mean is kept."""
    if field.rank != "vector":
        raise RankError("helmholtz projector needs a vector field")
    m = field.storage
    ks = _wavenumbers(m).astype(float)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    k2 = kx ** 2 + ky ** 2
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    dot = kx * field.coeffs[0] + ky * field.coeffs[1]
    c1 = field.coeffs[0] - kx * dot / k2safe
    c2 = field.coeffs[1] - ky * dot / k2safe
    c1[0, 0] = field.coeffs[0][0, 0]
    c2[0, 0] = field.coeffs[1][0, 0]
    return SpectralField(field.grid, "vector", np.stack([c1, c2]),
                         field.reality, _trim=False)


def frac_laplacian(field: SpectralField, theta: float) -> SpectralField:
    """(-Laplace)^theta via the |xi|^(2 theta) multiplier.

    The xi = 0 coefficient maps to 0 for theta > 0 and to itself for
    theta = 0 (the operator degenerates to the identity).
    """
    if not (0.0 <= theta <= 1.0):
        raise ConfigError(f"theta must lie in [0, 1], got {theta}")
    k2 = _abs2_lattice(field.storage)
    if theta == 0.0:
        mult = np.ones_like(k2)
    else:
        mult = k2 ** theta
    return SpectralField(field.grid, field.rank, field.coeffs * mult,
                         field.reality, _trim=False)


def inv_grad(field: SpectralField) -> SpectralField:
    """|grad|^-1: divide nonzero modes by |xi|; the mean is dropped."""
    k2 = _abs2_lattice(field.storage)
    mult = np.zeros_like(k2)
    nz = k2 > 0
    mult[nz] = 1.0 / np.sqrt(k2[nz])
    return SpectralField(field.grid, field.rank, field.coeffs * mult,
                         field.reality, _trim=False)


def anti_divergence(field: SpectralField, return_mean: bool = False):
    """Symmetric trace-free potential R f with div(R f) = f - avg f.

    Solves Delta g = f - avg f and returns grad g + (grad g)^T minus
    (div g) Id, assembled directly in coefficient space.  The subtracted
    mean is returned as metadata when requested.
    """
    if field.rank != "vector":
        raise RankError("anti-divergence needs a vector field")
    m = field.storage
    ks = _wavenumbers(m).astype(float)
    kx, ky = np.meshgrid(ks, ks, indexing="ij")
    k2 = kx ** 2 + ky ** 2
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    f1, f2 = field.coeffs[0], field.coeffs[1]
    t11 = -1j * (kx * f1 - ky * f2) / k2safe
    t12 = -1j * (ky * f1 + kx * f2) / k2safe
    t11[0, 0] = 0.0
    t12[0, 0] = 0.0
    out = SpectralField(field.grid, "symtensor", np.stack([t11, t12]),
                        field.reality, _trim=False)
    if return_mean:
        dropped = field.coeff((0, 0))
        if field.reality:
            dropped = dropped.real
        return out, dropped
    return out


# -- trace-free tensor product --------------------------------------------

class TraceFree2x2:
    """Full trace-free 2x2 field: entries (t11, t12; t21, -t11).

    The general product of two distinct vector fields need not be
    symmetric; the symmetric combinations the scheme uses collapse to a
    symtensor via `as_symtensor`.
    """

    __slots__ = ("t11", "t12", "t21")

    def __init__(self, t11: SpectralField, t12: SpectralField, t21: SpectralField):
        self.t11 = t11
        self.t12 = t12
        self.t21 = t21

    def __add__(self, other: "TraceFree2x2") -> "TraceFree2x2":
        return TraceFree2x2(self.t11 + other.t11, self.t12 + other.t12,
                            self.t21 + other.t21)

    def asymmetry(self) -> float:
        return lp_norm(self.t12 - self.t21, np.inf)

    def as_symtensor(self, rtol: float = 1e-10) -> SpectralField:
        scale = max(lp_norm(self.t12, np.inf), lp_norm(self.t11, np.inf), 1e-300)
        if self.asymmetry() > rtol * scale:
            raise ConfigError("tensor is not symmetric; keep the full display")
        m = max(self.t11.storage, self.t12.storage, self.t21.storage)
        c11 = _embed(self.t11.coeffs[0], m)
        c12 = 0.5 * (_embed(self.t12.coeffs[0], m) + _embed(self.t21.coeffs[0], m))
        real = self.t11.reality and self.t12.reality and self.t21.reality
        return SpectralField(self.t11.grid, "symtensor", np.stack([c11, c12]), real)


def tracefree_product(f, g, *, allow_interpolant: bool = False):
    """Trace-free part of the tensor product, per the component display.

    Constant vectors yield a plain 2x2 array; vector fields yield a
    TraceFree2x2 of pointwise products.
    """
    if isinstance(f, SpectralField) != isinstance(g, SpectralField):
        raise RankError("operands must both be fields or both constant vectors")
    if not isinstance(f, SpectralField):
        f = np.asarray(f, dtype=float)
        g = np.asarray(g, dtype=float)
        if f.shape != (2,) or g.shape != (2,):
            raise RankError("constant operands must be 2-vectors")
        return np.array([
            [0.5 * f[0] * g[0] - 0.5 * f[1] * g[1], f[0] * g[1]],
            [f[1] * g[0], 0.5 * f[1] * g[1] - 0.5 * f[0] * g[0]],
        ])
    if f.rank != "vector" or g.rank != "vector":
        raise RankError("trace-free product needs vector fields")
    p = lambda a, b: multiply(a, b, allow_interpolant=allow_interpolant)
    f1, f2 = f.component(0), f.component(1)
    g1, g2 = g.component(0), g.component(1)
    t11 = 0.5 * p(f1, g1) - 0.5 * p(f2, g2)
    t12 = p(f1, g2)
    t21 = p(f2, g1)
    return TraceFree2x2(t11, t12, t21)


def sym_tracefree_product(f: SpectralField, g: SpectralField, *,
                          allow_interpolant: bool = False) -> SpectralField:
    """The symmetric combination f x g + g x f (trace-free), as a symtensor."""
    if f.rank != "vector" or g.rank != "vector":
        raise RankError("trace-free product needs vector fields")
    p = lambda a, b: multiply(a, b, allow_interpolant=allow_interpolant)
    f1, f2 = f.component(0), f.component(1)
    g1, g2 = g.component(0), g.component(1)
    t11 = p(f1, g1) - p(f2, g2)
    t12 = p(f1, g2) + p(f2, g1)
    m = max(t11.storage, t12.storage)
    arr = np.stack([_embed(t11.coeffs[0], m), _embed(t12.coeffs[0], m)])
    return SpectralField(f.grid, "symtensor", arr, t11.reality and t12.reality)


def tf_square(f: SpectralField, *, allow_interpolant: bool = False) -> SpectralField:
    """f x f trace-free (always symmetric), as a symtensor."""
    if f.rank != "vector":
        raise RankError("trace-free square needs a vector field")
    p = lambda a, b: multiply(a, b, allow_interpolant=allow_interpolant)
    f1, f2 = f.component(0), f.component(1)
    t11 = 0.5 * p(f1, f1) - 0.5 * p(f2, f2)
    t12 = p(f1, f2)
    m = max(t11.storage, t12.storage)
    arr = np.stack([_embed(t11.coeffs[0], m), _embed(t12.coeffs[0], m)])
    return SpectralField(f.grid, "symtensor", arr, t11.reality and t12.reality)
