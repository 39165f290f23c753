"""Linearisation helpers for the conic formulation.

Three ingredients turn the nonlinear feeder physics into rows a cone
solver accepts:

* a least-squares affine fit of 1/conj(V) over the polar voltage region a
  phase actually operates in, which makes constant-power balance linear;
* a supporting half-plane that replaces the nonconvex lower voltage
  magnitude bound (any point satisfying the cut has |V| >= vm_min, so the
  relaxation is an inner, always-safe approximation);
* the four-inequality envelope that binds z = x*y exactly for binary x
  and bounded continuous y.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

DEFAULT_CENTERS = {"a": 0.0, "b": -2.0 * math.pi / 3.0, "c": 2.0 * math.pi / 3.0}
DEFAULT_HALF_WIDTH = math.radians(3.0)
DEFAULT_GRID = 15

# condition-number ceiling for the normal equations
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class VoltageRegion:
    """Polar box: magnitudes in [vm_min, vm_max], angles center +/- half_width."""

    vm_min: float
    vm_max: float
    center_angle: float
    half_width: float

    def __post_init__(self):
        if not (0.0 < self.vm_min < self.vm_max):
            raise ValueError(
                f"voltage region: need 0 < vm_min < vm_max, got [{self.vm_min}, {self.vm_max}]"
            )
        if not (0.0 < self.half_width < math.pi / 6.0):
            raise ValueError(
                f"voltage region: half width {self.half_width} out of (0, pi/6)"
            )


@dataclass(frozen=True)
class InvConjFit:
    """Affine surrogate 1/conj(V) ~ (kx X + ky Y + bx) + j(hx X + hy Y + by)."""

    kx: float
    ky: float
    bx: float
    hx: float
    hy: float
    by: float
    max_err: float

    def evaluate(self, v: complex) -> complex:
        x, y = v.real, v.imag
        return complex(
            self.kx * x + self.ky * y + self.bx,
            self.hx * x + self.hy * y + self.by,
        )


@dataclass(frozen=True)
class ProductBounds:
    """Range of the continuous factor in a binary-continuous product."""

    y_min: float
    y_max: float

    def __post_init__(self):
        if not (math.isfinite(self.y_min) and math.isfinite(self.y_max)):
            raise ValueError("product bounds must be finite")
        if self.y_min > self.y_max:
            raise ValueError(f"product bounds reversed: [{self.y_min}, {self.y_max}]")


@dataclass(frozen=True)
class LinearCut:
    """Row cx*x + cy*y + cz*z <= rhs over a (binary, continuous, product) triple."""

    cx: float
    cy: float
    cz: float
    rhs: float


def phase_regions(
    vm_min: float,
    vm_max: float,
    centers: dict | None = None,
    half_width: float = DEFAULT_HALF_WIDTH,
) -> dict:
    """One voltage region per phase around the nominal phase angles."""
    centers = DEFAULT_CENTERS if centers is None else centers
    return {
        p: VoltageRegion(vm_min, vm_max, centers[p], half_width) for p in ("a", "b", "c")
    }


def sample_region(region: VoltageRegion, n_mag: int = DEFAULT_GRID, n_ang: int = DEFAULT_GRID):
    """Polar grid over the region, magnitudes x angles, row-major."""
    if n_mag < 2 or n_ang < 2:
        raise ValueError("sample_region: need at least a 2x2 grid")
    mags = np.linspace(region.vm_min, region.vm_max, n_mag)
    angs = np.linspace(
        region.center_angle - region.half_width,
        region.center_angle + region.half_width,
        n_ang,
    )
    return [cmath.rect(m, a) for m in mags for a in angs]


def fit_inverse_conjugate(samples) -> InvConjFit:
    """Least-squares affine fit of 1/conj(V) over the given samples.

    Real and imaginary parts are fitted as two independent 3-coefficient
    problems through the normal equations; a condition estimate above
    1e12 is rejected as rank deficient.
    """
    if len(samples) < 6:
        raise ValueError(f"fit_inverse_conjugate: need >= 6 samples, got {len(samples)}")
    v = np.asarray(samples, dtype=complex)
    design = np.column_stack([v.real, v.imag, np.ones(v.shape[0])])
    target = v / (v.real**2 + v.imag**2)  # 1/conj(v)

    gram = design.T @ design
    if np.linalg.cond(gram) > _COND_LIMIT:
        raise ValueError("fit_inverse_conjugate: sample set is rank deficient")
    cho = sla.cho_factor(gram)
    coef_re = sla.cho_solve(cho, design.T @ target.real)
    coef_im = sla.cho_solve(cho, design.T @ target.imag)

    approx = design @ coef_re + 1j * (design @ coef_im)
    max_err = float(np.max(np.abs(approx - target)))
    return InvConjFit(
        kx=float(coef_re[0]),
        ky=float(coef_re[1]),
        bx=float(coef_re[2]),
        hx=float(coef_im[0]),
        hy=float(coef_im[1]),
        by=float(coef_im[2]),
        max_err=max_err,
    )


def lower_vm_cut(region: VoltageRegion, vm_min: float):
    """Supporting half-plane cos(d)*X + sin(d)*Y >= vm_min for |V| >= vm_min.

    The projection of V onto the region's centre direction never exceeds
    |V|, so every point satisfying the cut meets the magnitude bound; the
    price is that boundary points at the angular extremes are cut away by
    a gap of vm_min*(1 - cos(half_width)).
    """
    if vm_min <= 0:
        raise ValueError("lower_vm_cut: vm_min must be positive")
    return math.cos(region.center_angle), math.sin(region.center_angle), vm_min


def _trig_range(lo: float, hi: float, fn) -> tuple:
    """Exact range of cos/sin over [lo, hi] via endpoint + critical points."""
    cands = [fn(lo), fn(hi)]
    step = math.pi / 2.0
    k = math.ceil(lo / step)
    while k * step <= hi:
        cands.append(fn(k * step))
        k += 1
    return min(cands), max(cands)


def region_xy_bounds(region: VoltageRegion) -> tuple:
    """Exact ranges of X = |V|cos(theta), Y = |V|sin(theta) over the region.

    Used to size the binary-product envelopes: the true rectangular parts
    of any in-region voltage stay inside these intervals.
    """
    lo_a = region.center_angle - region.half_width
    hi_a = region.center_angle + region.half_width
    clo, chi = _trig_range(lo_a, hi_a, math.cos)
    slo, shi = _trig_range(lo_a, hi_a, math.sin)
    mags = (region.vm_min, region.vm_max)

    def extremes(tlo, thi):
        cands = [m * t for m in mags for t in (tlo, thi)]
        return ProductBounds(min(cands), max(cands))

    return extremes(clo, chi), extremes(slo, shi)


def bind_product(bounds: ProductBounds):
    """Four half-planes that pin z = x*y when x is binary and y bounded.

    For x in {0, 1} the rows collapse to z = x*y exactly; for fractional
    x they describe the tightest linear envelope over the box.
    Row order: z <= x*y_max, z >= x*y_min, z - y <= (x-1)*y_min,
    z - y >= (x-1)*y_max, all expressed as <=.
    """
    lo, hi = bounds.y_min, bounds.y_max
    return (
        LinearCut(cx=-hi, cy=0.0, cz=1.0, rhs=0.0),
        LinearCut(cx=lo, cy=0.0, cz=-1.0, rhs=0.0),
        LinearCut(cx=-lo, cy=-1.0, cz=1.0, rhs=-lo),
        LinearCut(cx=hi, cy=1.0, cz=-1.0, rhs=hi),
    )
