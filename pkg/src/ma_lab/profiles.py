"""Convex-calculus kernel for 1-D potential profiles.

A profile is a convex piecewise-linear function of the invariant
log-coordinate t, with slopes confined to [0, slope_cap].  Outside the
grid it continues affinely with the stored asymptotic slopes, so every
profile is globally defined and every integral against it is a finite
sum over grid cells.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NotOmegaPsh, PreconditionViolated

TOL_CONVEX = 1e-10

_GRID_CACHE = {}


def default_grid(core_half_width=40.0, core_step=0.02, octaves=45, per_octave=8):
    """Composite abscissa grid: uniform core plus logarithmic extensions.

    The core resolves the curved region of the reference potentials;
    the extensions reach |t| ~ 1.4e15 so that slowly decaying tail
    contributions (power-law singularities) are summed rather than
    modeled.

    Returns
    -------
    ndarray
        Strictly increasing abscissae, symmetric about 0.
    """
    key = (core_half_width, core_step, octaves, per_octave)
    if key not in _GRID_CACHE:
        core = np.arange(-core_half_width, core_half_width + core_step / 2, core_step)
        m = np.arange(1, per_octave * octaves + 1)
        ext = core_half_width * 2.0 ** (m / per_octave)
        _GRID_CACHE[key] = np.concatenate([-ext[::-1], core, ext])
    return _GRID_CACHE[key]


def slopes_of(grid, values):
    """First divided differences of a grid function."""
    return np.diff(values) / np.diff(grid)


@dataclass(frozen=True)
class Profile:
    """A convex potential profile psi(t).

    Parameters
    ----------
    grid : ndarray
        Strictly increasing abscissae.
    values : ndarray
        psi evaluated on the grid.
    slope_minus_inf, slope_plus_inf : float
        Affine continuation slopes beyond the grid.
    slope_cap : float or None
        Maximal admissible slope of the model (1/2 on the radial
        surface, 1 on a line factor).  None disables the [0, cap]
        slope constraint and only convexity is enforced; this is used
        for plain convex functions such as conjugates.
    """

    grid: np.ndarray
    values: np.ndarray
    slope_minus_inf: float
    slope_plus_inf: float
    slope_cap: float = 0.5

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if g.ndim != 1 or v.shape != g.shape or g.size < 2:
            raise InvalidInput("profile needs matching 1-D grid/values, >= 2 points")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
            raise InvalidInput("non-finite profile data")
        if np.any(np.diff(g) <= 0):
            raise InvalidInput("grid must be strictly increasing")
        s = slopes_of(g, v)
        scale = max(1.0, np.abs(s).max() if s.size else 1.0)
        ext = np.concatenate([[self.slope_minus_inf], s, [self.slope_plus_inf]])
        if np.any(np.diff(ext) < -TOL_CONVEX * scale):
            raise NotOmegaPsh("profile is not convex")
        if self.slope_cap is not None:
            if self.slope_minus_inf < -TOL_CONVEX or self.slope_plus_inf > self.slope_cap + TOL_CONVEX:
                raise NotOmegaPsh("asymptotic slopes outside [0, slope_cap]")

    @classmethod
    def from_values(cls, grid, values, slope_cap=0.5):
        """Build a profile taking the boundary cell slopes as tails."""
        s = slopes_of(np.asarray(grid, float), np.asarray(values, float))
        return cls(grid, values, float(s[0]), float(s[-1]), slope_cap)

    @property
    def slopes(self):
        return slopes_of(self.grid, self.values)

    def extended_slopes(self):
        """Cell slopes bracketed by the asymptotic tail slopes."""
        return np.concatenate([[self.slope_minus_inf], self.slopes, [self.slope_plus_inf]])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.grid, self.values)
        lo = t < self.grid[0]
        hi = t > self.grid[-1]
        out = np.where(lo, self.values[0] + self.slope_minus_inf * (t - self.grid[0]), out)
        out = np.where(hi, self.values[-1] + self.slope_plus_inf * (t - self.grid[-1]), out)
        return out if out.ndim else float(out)

    def to_json(self):
        return json.dumps(
            {
                "grid": self.grid.tolist(),
                "values": self.values.tolist(),
                "slope_minus_inf": self.slope_minus_inf,
                "slope_plus_inf": self.slope_plus_inf,
                "slope_cap": self.slope_cap,
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            np.array(d["grid"]),
            np.array(d["values"]),
            d["slope_minus_inf"],
            d["slope_plus_inf"],
            d["slope_cap"],
        )


@dataclass(frozen=True)
class RelativeProfile:
    """A potential phi written relatively to a reference profile.

    The stored offset satisfies full = base + offset; the offset is
    bounded above because its tail slopes are differences of admissible
    slopes.  sup_value is the supremum of the offset over the line.
    """

    base: Profile
    offset: np.ndarray
    sup_value: float = field(default=None)

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=float)
        object.__setattr__(self, "offset", off)
        if off.shape != self.base.grid.shape:
            raise InvalidInput("offset shape must match base grid")
        if not np.all(np.isfinite(off)):
            raise InvalidInput("non-finite offset")
        if self.sup_value is None:
            object.__setattr__(self, "sup_value", float(off.max()))
        # offset tails must not increase outward, else phi is unbounded above
        s = self.full_profile().extended_slopes()
        if s[0] - self.base.slope_minus_inf < -TOL_CONVEX or \
           s[-1] - self.base.slope_plus_inf > TOL_CONVEX:
            raise NotOmegaPsh("offset tail slopes escape the admissible cone")

    def full_values(self):
        return self.base.values + self.offset

    def full_profile(self):
        return Profile.from_values(self.base.grid, self.full_values(), self.base.slope_cap)

    def offset_tail_slopes(self):
        """Offset slopes beyond the grid ends (full tail minus base tail)."""
        f = self.full_profile()
        return (f.slope_minus_inf - self.base.slope_minus_inf,
                f.slope_plus_inf - self.base.slope_plus_inf)

    def limit_values(self):
        """Offset limits at t -> -inf and t -> +inf (may be -inf)."""
        lo, hi = self.offset_tail_slopes()
        left = -np.inf if lo > TOL_CONVEX else float(self.offset[0])
        right = -np.inf if hi < -TOL_CONVEX else float(self.offset[-1])
        return left, right

    def shifted(self, c):
        return RelativeProfile(self.base, self.offset + c)

    def normalized(self, sup=-1.0):
        """Additive renormalization to the requested supremum."""
        return self.shifted(sup - self.sup_value)

    def to_json(self):
        return json.dumps(
            {
                "base": json.loads(self.base.to_json()),
                "offset": self.offset.tolist(),
                "sup_value": self.sup_value,
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        base = Profile.from_json(json.dumps(d["base"]))
        return cls(base, np.array(d["offset"]), d["sup_value"])


def zero_offset(base):
    return RelativeProfile(base, np.zeros_like(base.values))


def convex_envelope(samples_t, samples_y, slope_cap=0.5):
    """Greatest convex minorant with slopes clamped to [0, slope_cap].

    Parameters
    ----------
    samples_t, samples_y : array_like
        Sample abscissae and obstacle values.  Abscissae are sorted and
        deduplicated (keeping the pointwise minimum of duplicates).
    slope_cap : float
        Upper slope bound; the lower bound is 0.

    Returns
    -------
    Profile
        The envelope on the sample grid.  Beyond the data the boundary
        cell slopes are kept.

    Notes
    -----
    Lower convex hull by a monotone chain, then slope clamping by
    clipping the hull's cell slopes and re-integrating from the hull's
    minimizer; both steps are exact for piecewise-linear data.
    """
    t = np.asarray(samples_t, dtype=float).ravel()
    y = np.asarray(samples_y, dtype=float).ravel()
    if t.size != y.size or t.size < 2:
        raise InvalidInput("need >= 2 samples")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise InvalidInput("non-finite sample")
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    keep_t, keep_y = [t[0]], [y[0]]
    for ti, yi in zip(t[1:], y[1:]):
        if ti == keep_t[-1]:
            keep_y[-1] = min(keep_y[-1], yi)
        else:
            keep_t.append(ti)
            keep_y.append(yi)
    t = np.array(keep_t)
    y = np.array(keep_y)
    if t.size < 2:
        raise InvalidInput("need >= 2 distinct abscissae")

    # monotone-chain lower hull
    hull = []  # indices
    for i in range(t.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # pop i1 if it lies above chord i0 -> i
            if (y[i1] - y[i0]) * (t[i] - t[i0]) >= (y[i] - y[i0]) * (t[i1] - t[i0]):
                hull.pop()
            else:
                break
        hull.append(i)
    hv = np.interp(t, t[hull], y[hull])

    s = np.clip(slopes_of(t, hv), 0.0, slope_cap if slope_cap is not None else np.inf)
    raw = slopes_of(t, hv)
    # anchor at the hull minimizer: first node whose outgoing slope >= 0
    nonneg = np.nonzero(raw >= 0)[0]
    i0 = int(nonneg[0]) if nonneg.size else t.size - 1
    vals = np.empty_like(hv)
    vals[i0] = hv[i0]
    seg = s * np.diff(t)
    vals[i0 + 1:] = hv[i0] + np.cumsum(seg[i0:])
    vals[:i0] = hv[i0] - np.cumsum(seg[:i0][::-1])[::-1]
    return Profile.from_values(t, vals, slope_cap)


def legendre(p, num=2001):
    """Discrete Legendre conjugate of a convex profile.

    Parameters
    ----------
    p : Profile
    num : int
        Number of slope samples on the moment interval.

    Returns
    -------
    Profile
        The conjugate on [slope_minus_inf, slope_plus_inf], with
        slope_cap None (it is a plain convex function of the slope
        variable, not an admissible potential).
    """
    s_lo, s_hi = p.slope_minus_inf, p.slope_plus_inf
    if s_hi - s_lo < 1e-300:
        # affine profile: the conjugate is a single point
        v = float(np.max(s_lo * p.grid - p.values))
        eps = max(1e-12, abs(s_lo) * 1e-12)
        return Profile(np.array([s_lo - eps, s_lo + eps]), np.array([v, v]),
                       -np.inf, np.inf, None)
    s = np.linspace(s_lo, s_hi, num)
    vals = np.empty(num)
    chunk = max(1, 10_000_000 // p.grid.size)
    for a in range(0, num, chunk):
        b = min(num, a + chunk)
        vals[a:b] = np.max(s[a:b, None] * p.grid[None, :] - p.values[None, :], axis=1)
    return Profile(s, vals, float(p.grid[0]), float(p.grid[-1]), None)


def compose_weight(p, chi):
    """Compose a normalized potential with an admissible concave-increasing weight.

    Parameters
    ----------
    p : RelativeProfile
        Must satisfy phi <= -1 pointwise.
    chi : tuple
        ("power", alpha) for phi -> -(-phi)**alpha with alpha in [0, 1],
        or ("neglog",) for phi -> -log(-phi).

    Returns
    -------
    RelativeProfile

    Raises
    ------
    PreconditionViolated
        If phi > -1 somewhere.
    InvalidInput
        If alpha lies outside [0, 1] or the weight is unknown.
    NotOmegaPsh
        If the composed potential fails the convexity check.  Admissible
        weights preserve the class, so this indicates bad input; the
        operation asserts and never repairs.
    """
    if p.sup_value > -1.0 + 1e-12:
        raise PreconditionViolated("weight composition requires phi <= -1")
    phi = p.offset
    if chi[0] == "power":
        alpha = float(chi[1])
        if not 0.0 <= alpha <= 1.0:
            raise InvalidInput("power weight needs alpha in [0, 1]")
        new = -np.power(-phi, alpha)
    elif chi[0] == "neglog":
        new = -np.log(-phi)
    else:
        raise InvalidInput(f"unknown weight {chi[0]!r}")
    out = RelativeProfile(p.base, new)
    out.full_profile()  # convexity assertion
    return out


def max_profiles(p, q):
    """Pointwise maximum of two profiles on a shared grid."""
    if p.grid.shape != q.grid.shape or not np.array_equal(p.grid, q.grid):
        raise InvalidInput("profiles must share a grid; resample first")
    v = np.maximum(p.values, q.values)
    # the dominant branch at each end dictates the tail slope
    left = p.slope_minus_inf if p.values[0] >= q.values[0] else q.slope_minus_inf
    if p.values[0] == q.values[0]:
        left = min(p.slope_minus_inf, q.slope_minus_inf)
    right = p.slope_plus_inf if p.values[-1] >= q.values[-1] else q.slope_plus_inf
    if p.values[-1] == q.values[-1]:
        right = max(p.slope_plus_inf, q.slope_plus_inf)
    cap = p.slope_cap if p.slope_cap is not None else q.slope_cap
    return Profile(p.grid, v, left, right, cap)


def max_offsets(p, q):
    """Pointwise maximum of two relative potentials over the same base."""
    if p.base is not q.base and not np.array_equal(p.base.values, q.base.values):
        raise InvalidInput("relative profiles must share a base")
    return RelativeProfile(p.base, np.maximum(p.offset, q.offset))


def scale(p, lam):
    """lam * phi for lam in [0, 1] (larger factors leave the class)."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidInput("scaling factor must lie in [0, 1]")
    return RelativeProfile(p.base, lam * p.offset)


def truncate(p, k):
    """Canonical cutoff max(phi, -k); bounded, decreasing in k."""
    if not k > 0:
        raise InvalidInput("truncation level must be positive")
    return RelativeProfile(p.base, np.maximum(p.offset, -float(k)))


def resample(p, new_grid):
    """Piecewise-linear resampling of a profile (linear in psi)."""
    new_grid = np.asarray(new_grid, dtype=float)
    return Profile(new_grid, p(new_grid), p.slope_minus_inf, p.slope_plus_inf, p.slope_cap)
