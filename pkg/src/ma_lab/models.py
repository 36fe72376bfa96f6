"""Geometry backends: symmetric Kahler surfaces with unit volume.

Three models are provided.  The radial model on the projective plane
reduces everything to one profile with slope cap 1/2; the product of
two lines keeps one profile per factor with slope cap 1; the toric
model is a genuine 2-D discrete potential on a box in log-coordinates,
with the measure realized as an Aleksandrov subgradient measure.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInput
from .profiles import Profile, default_grid

RADIAL_P2 = "RadialP2"
PRODUCT_P1P1 = "ProductP1P1"
TORIC_P1P1 = "ToricP1P1"


def psi_fs(t):
    """Reference radial potential, 0.5*log(1+e^t), overflow-safe."""
    return 0.5 * np.logaddexp(0.0, t)


def psi_line(t):
    """Reference potential of one line factor, log(1+e^t)."""
    return np.logaddexp(0.0, t)


@dataclass(frozen=True)
class KahlerModel:
    """Immutable model descriptor.

    Parameters
    ----------
    kind : str
        One of RADIAL_P2, PRODUCT_P1P1, TORIC_P1P1.
    reference_potential : Profile or tuple
        The reference Kahler potential; a pair of factor profiles for
        the product model, a (t1, t2, Psi) triple for the toric model.
    volume : float
        Raw total mass of the reference measure (1 for the radial
        model, 2 for the surfaces built from two line factors).
    slope_cap : float
        Per-profile (per-axis) maximal slope.
    cdf_power : int
        Exponent d in the normalized sublevel-mass law
        mass{t <= T} = (slope(T)/slope_cap)**d; 2 for the radial model,
        1 per line factor.
    resolution : int or None
        Grid resolution per axis (toric only).
    """

    kind: str
    reference_potential: object
    volume: float
    slope_cap: float
    cdf_power: int
    resolution: int = None

    def normalize(self, mass):
        """Convert a raw mass to the unit-volume normalization."""
        return mass / self.volume


@lru_cache(maxsize=None)
def radial_p2():
    """The radial model on the projective plane.

    The measure of a potential with slopes s(t) has sublevel mass
    (2 s(T))**2, density 8 psi' psi'' dt in the smooth case, an atom at
    the fixed point of mass 4*slope(-inf)**2 and an atom on the divisor
    at infinity of mass 1 - 4*slope(+inf)**2.  Two anchor facts pin
    these constants and are asserted at construction: the reference
    measure has total mass 1, and the potential t/2 has a unit atom at
    the fixed point.
    """
    g = default_grid()
    base = Profile(g, psi_fs(g), 0.0, 0.5, 0.5)
    model = KahlerModel(RADIAL_P2, base, 1.0, 0.5, 2)
    _radial_self_test(model)
    return model


def _radial_self_test(model):
    from . import ma

    full = ma.ma_measure(model, None)  # reference measure
    assert abs(full.total_mass - 1.0) < 1e-10
    from .profiles import RelativeProfile

    base = model.reference_potential
    dirac = RelativeProfile(base, base.grid / 2 - base.values)
    m = ma.ma_measure(model, dirac)
    assert dict(m.atoms).get("fixed_point_a", 0.0) > 1.0 - 1e-12
    assert np.abs(m.density).max() < 1e-12


@lru_cache(maxsize=None)
def product_p1p1():
    """Product of two lines; one factor profile per axis, cap 1 each.

    The raw volume is 2 (each factor reference measure has mass 1);
    reports carry both raw and unit-volume numbers.
    """
    g = default_grid()
    f = Profile(g, psi_line(g), 0.0, 1.0, 1.0)
    return KahlerModel(PRODUCT_P1P1, (f, f), 2.0, 1.0, 1)


@lru_cache(maxsize=None)
def toric_p1p1(resolution=64, box=8.0):
    """2-D toric backend on a box in log-coordinates.

    Parameters
    ----------
    resolution : int
        Cells per axis (the grid has resolution+1 nodes per axis).
    box : float
        Half-width of the log-coordinate box.  Any box works because
        the subgradient cells are always clipped to the full moment
        square; 8 keeps the smallest boundary cell masses well above
        rounding.

    Raises
    ------
    InvalidInput
        If resolution < 16.
    """
    if resolution < 16:
        raise InvalidInput("toric resolution must be >= 16")
    t1 = np.linspace(-box, box, resolution + 1)
    t2 = t1.copy()
    Psi = psi_line(t1)[:, None] + psi_line(t2)[None, :]
    return KahlerModel(TORIC_P1P1, (t1, t2, Psi), 2.0, 1.0, 1, resolution)


@dataclass(frozen=True)
class ToricGrid:
    """A 2-D potential on the toric model's log-coordinate grid."""

    t1: np.ndarray
    t2: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.t1), len(self.t2)):
            raise InvalidInput("toric values shape must match the axis grids")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("non-finite toric potential")

    def combine(self, other, w):
        """Convex combination (1-w)*self + w*other."""
        return ToricGrid(self.t1, self.t2, (1 - w) * self.values + w * other.values)

    def offset_vs(self, model):
        return self.values - model.reference_potential[2]


def model_from_descriptor(desc):
    """Build a model from a descriptor dict or name string.

    Strings take the form "radial-p2", "product-p1p1", "toric-p1p1" or
    "toric-p1p1:R" with R the grid resolution.
    """
    if isinstance(desc, str):
        name, _, res = desc.partition(":")
        desc = {"kind": name}
        if res:
            desc["resolution"] = int(res)
    kind = desc.get("kind")
    if kind in (RADIAL_P2, "radial-p2"):
        return radial_p2()
    if kind in (PRODUCT_P1P1, "product-p1p1"):
        return product_p1p1()
    if kind in (TORIC_P1P1, "toric-p1p1"):
        return toric_p1p1(int(desc.get("resolution", 64)))
    raise InvalidInput(f"unknown model kind {kind!r}")
