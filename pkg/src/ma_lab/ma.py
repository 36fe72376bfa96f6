"""Monge-Ampere, mixed, and gradient measures on the model surfaces.

On the 1-D backends every measure is the pushforward of the slope map:
for the invariant potential with normalized slopes s(t)/s_max, the mass
of {t <= T} is the product of the normalized slopes of the two wedge
factors at T.  A piecewise-linear potential therefore has a purely
atomic measure supported on the grid nodes, and all identities below
(mass conservation, polarization, comparison) hold exactly at the
discrete level because the discrete objects are honest admissible
potentials.

The toric backend uses the Aleksandrov subgradient measure: the mass at
a node is the area of its cell in the moment square, computed from the
lower convex hull of the lifted grid.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import ConvexHull

from .errors import InvalidInput, NotOmegaPsh
from .models import PRODUCT_P1P1, RADIAL_P2, TORIC_P1P1
from .profiles import RelativeProfile, zero_offset

ATOM_SLOPE_TOL = 1e-12  # slope deficits below this are treated as zero

FIXED_POINT = "fixed_point_a"
DIVISOR = "divisor_at_infinity"


@dataclass(frozen=True)
class MaMeasure:
    """A measure with grid-node masses plus named atoms.

    Parameters
    ----------
    kind : str
        "OneD" or "TwoD".
    grid : ndarray or tuple
        Node abscissae (1-D), or the pair of axis grids (2-D).
    density : ndarray or None
        Lumped mass per grid node.  None for product-form measures,
        which carry their factor measures instead.
    atoms : tuple of (str, float)
        Named atoms off the grid (fixed point, divisor at infinity,
        product corners).
    total_mass : float
    cdf_seq : ndarray or None
        For 1-D measures, mass of {t <= T} sampled just right of each
        node, prefixed by the fixed-point atom; kept exact (no cumsum).
    factors : tuple or None
        Product measures: ((coef, m1, m2), ...) meaning
        sum coef * m1 (x) m2 over the two line factors.
    """

    kind: str
    grid: object
    density: object
    atoms: tuple
    total_mass: float
    cdf_seq: object = None
    factors: tuple = None

    def atom_mass(self, tag):
        return dict(self.atoms).get(tag, 0.0)

    def cdf(self):
        """Mass of {t <= t_i} per node (1-D only)."""
        if self.cdf_seq is None:
            raise InvalidInput("cdf available for 1-D measures only")
        return self.cdf_seq[1:]


def _normalized_ext_slopes(full_profile, cap):
    s = np.clip(full_profile.extended_slopes() / cap, 0.0, 1.0)
    return s


def measure_1d_pair(grid, ns1, ns2):
    """Measure whose sublevel mass is the product of two normalized slope maps.

    Parameters
    ----------
    grid : ndarray
    ns1, ns2 : ndarray
        Extended normalized slope sequences (length N+1) of the two
        wedge factors.

    Returns
    -------
    MaMeasure
        Total mass exactly 1.
    """
    c = ns1 * ns2
    node_mass = np.diff(c)
    atoms = []
    a0 = c[0]
    if min(ns1[0], ns2[0]) > ATOM_SLOPE_TOL:
        atoms.append((FIXED_POINT, float(a0)))
    else:
        node_mass = node_mass.copy()
        node_mass[0] += a0
    a1 = 1.0 - c[-1]
    if min(1.0 - ns1[-1], 1.0 - ns2[-1]) > ATOM_SLOPE_TOL:
        atoms.append((DIVISOR, float(a1)))
    else:
        node_mass = np.array(node_mass)
        node_mass[-1] += a1
    return MaMeasure("OneD", grid, node_mass, tuple(atoms), 1.0, cdf_seq=c)


def _require_radial(model):
    if model.kind != RADIAL_P2:
        raise InvalidInput("operation requires the radial model")


def _as_offset(model, phi):
    if phi is None:
        if model.kind == PRODUCT_P1P1:
            b1, b2 = model.reference_potential
            return (zero_offset(b1), zero_offset(b2))
        if model.kind == TORIC_P1P1:
            from .models import ToricGrid

            t1, t2, base = model.reference_potential
            return ToricGrid(t1, t2, base)
        return zero_offset(model.reference_potential)
    return phi


def ma_measure(model, phi):
    """Full Monge-Ampere measure of a potential.

    Parameters
    ----------
    model : KahlerModel
    phi : RelativeProfile, (RelativeProfile, RelativeProfile),
          ToricGrid, or None
        None means the zero potential (reference measure).  The product
        model accepts separable potentials u (+) v as a pair.

    Returns
    -------
    MaMeasure
        Mass equal to the model volume.  Atoms appear iff the slope
        deficits at the ends exceed the detection threshold.
    """
    phi = _as_offset(model, phi)
    if model.kind == RADIAL_P2:
        ns = _normalized_ext_slopes(phi.full_profile(), model.slope_cap)
        return measure_1d_pair(phi.base.grid, ns, ns)
    if model.kind == PRODUCT_P1P1:
        u, v = phi
        mu = factor_measure(u)
        mv = factor_measure(v)
        return product_measure(((2.0, mu, mv),))
    if model.kind == TORIC_P1P1:
        return toric_measure(model, phi)
    raise InvalidInput(f"unknown model kind {model.kind!r}")


def factor_measure(u):
    """Measure of one line factor (normalized slope is the sublevel mass)."""
    ns = _normalized_ext_slopes(u.full_profile(), u.base.slope_cap)
    ones = np.ones_like(ns)
    return measure_1d_pair(u.base.grid, ns, ones)


def product_measure(factor_pairs):
    """Assemble a product-model measure from factor tensor terms."""
    total = sum(c * m1.total_mass * m2.total_mass for c, m1, m2 in factor_pairs)
    atoms = {}
    for c, m1, m2 in factor_pairs:
        for tag1, a1 in m1.atoms:
            for tag2, a2 in m2.atoms:
                key = f"corner:{tag1}|{tag2}"
                atoms[key] = atoms.get(key, 0.0) + c * a1 * a2
    g = (factor_pairs[0][1].grid, factor_pairs[0][2].grid)
    return MaMeasure("TwoD", g, None, tuple(sorted(atoms.items())), total,
                     factors=tuple(factor_pairs))


def mixed_measure(model, phi, psi):
    """Mixed wedge measure of two potentials.

    Defined by polarization from the full measures; on the slope side
    the polarization collapses to the product of the two normalized
    slope maps, which is used directly (it is the same algebraic
    identity, evaluated without cancellation).
    """
    phi = _as_offset(model, phi)
    psi = _as_offset(model, psi)
    if model.kind == RADIAL_P2:
        ns1 = _normalized_ext_slopes(phi.full_profile(), model.slope_cap)
        ns2 = _normalized_ext_slopes(psi.full_profile(), model.slope_cap)
        return measure_1d_pair(phi.base.grid, ns1, ns2)
    if model.kind == PRODUCT_P1P1:
        u1, v1 = phi
        u2, v2 = psi
        return product_measure(
            ((1.0, factor_measure(u1), factor_measure(v2)),
             (1.0, factor_measure(u2), factor_measure(v1))))
    if model.kind == TORIC_P1P1:
        mid = toric_measure(model, phi.combine(psi, 0.5))
        m1 = toric_measure(model, phi)
        m2 = toric_measure(model, psi)
        dens = 2.0 * mid.density - 0.5 * m1.density - 0.5 * m2.density
        if dens.min() < -1e-9:
            raise NotOmegaPsh("polarization produced negative mass")
        dens = np.maximum(dens, 0.0)
        return MaMeasure("TwoD", mid.grid, dens, (), float(dens.sum()))
    raise InvalidInput(f"unknown model kind {model.kind!r}")


def reference_wedge(model, phi):
    """The measure omega ^ omega_phi (mixed with the zero potential)."""
    return mixed_measure(model, phi, None)


def gradient_current_mass(model, phi, psi=None, weight=None):
    """Mass of the gradient pairing d phi ^ d^c phi ^ omega_psi.

    Parameters
    ----------
    model : KahlerModel
    phi : RelativeProfile or pair
    psi : same, optional
        The potential of the background form; None means the reference
        form.
    weight : ndarray, optional
        Extra per-cell weight (evaluated by the caller), e.g. a power
        of -phi at cell midpoints.

    Returns
    -------
    float
        The raw grid sum; always finite because the grid is finite.
        Divergence verdicts for the underlying improper integral are
        the energy module's octave analysis.
    """
    if model.kind == RADIAL_P2:
        phi = _as_offset(model, phi)
        psi = _as_offset(model, psi)
        g = phi.base.grid
        h = np.diff(g)
        dphi = np.diff(phi.offset) / h
        du = np.diff(psi.full_values()) / h
        contrib = (dphi ** 2) * du * h / model.slope_cap ** 2
        if weight is not None:
            contrib = contrib * weight
        return float(np.sum(contrib))
    if model.kind == PRODUCT_P1P1:
        phi = _as_offset(model, phi)
        psi = _as_offset(model, psi)
        total = 0.0
        for (u, bg) in zip(phi, psi):
            g = u.base.grid
            h = np.diff(g)
            dphi = np.diff(u.offset) / h
            du = np.diff(bg.full_values()) / h
            contrib = (dphi ** 2) * du * h
            if weight is not None:
                contrib = contrib * weight
            # the complementary factor of omega_psi integrates to 1
            total += float(np.sum(contrib))
        return total
    raise InvalidInput("gradient pairing implemented on the 1-D backends")


def gradient_cell_contributions(model, phi, psi=None):
    """Per-cell contributions of the gradient pairing (radial model)."""
    _require_radial(model)
    phi = _as_offset(model, phi)
    psi = _as_offset(model, psi)
    g = phi.base.grid
    h = np.diff(g)
    dphi = np.diff(phi.offset) / h
    du = np.diff(psi.full_values()) / h
    return (dphi ** 2) * du * h / model.slope_cap ** 2


def weighted_mass(measure, w_nodes, w_left=None, w_right=None):
    """Integral of a nonnegative weight against a 1-D measure.

    Parameters
    ----------
    measure : MaMeasure (OneD)
    w_nodes : ndarray
        Weight at the grid nodes.
    w_left, w_right : float, optional
        Weight limits at t -> -inf / +inf, charged to the fixed-point /
        divisor atoms.  May be numpy.inf, in which case the result is
        inf whenever the corresponding atom is present.
    """
    out = float(np.dot(measure.density, w_nodes))
    for tag, mass in measure.atoms:
        w = w_left if tag == FIXED_POINT else w_right
        if w is None:
            raise InvalidInput(f"measure has atom {tag} but no limit weight given")
        if np.isinf(w):
            return float(np.inf)
        out += mass * w
    return out


def cdf_sup_distance(m1, m2):
    """Sup distance between the sublevel-mass functions of two measures."""
    if m1.kind == "OneD" and m2.kind == "OneD":
        return float(np.abs(m1.cdf_seq - m2.cdf_seq).max())
    if m1.factors is not None and m2.factors is not None:
        # separable measures: compare per-factor sublevel masses
        d = 0.0
        for (c1, a1, b1), (c2, a2, b2) in zip(m1.factors, m2.factors):
            d = max(d, float(np.abs(c1 * a1.cdf_seq - c2 * a2.cdf_seq).max()),
                    float(np.abs(c1 * b1.cdf_seq - c2 * b2.cdf_seq).max()))
        return d
    if m1.density is not None and m2.density is not None:
        diff = m1.density - m2.density
        cum = np.cumsum(np.cumsum(diff, axis=0), axis=1)
        return float(np.abs(cum).max())
    raise InvalidInput("incomparable measure kinds")


def restricted_mass(measure, node_mask, include_left, include_right):
    """Mass of a union of grid nodes plus optionally the two end atoms."""
    out = float(measure.density[node_mask].sum())
    for tag, mass in measure.atoms:
        if tag == FIXED_POINT and include_left:
            out += mass
        if tag == DIVISOR and include_right:
            out += mass
    return out


def comparison_masses(model, phi, psi):
    """Both sides of the comparison principle on {phi < psi}.

    Returns
    -------
    (float, float)
        Mass of omega_psi^2 and of omega_phi^2 on the sublevel set;
        the first never exceeds the second for admissible bounded
        potentials.
    """
    _require_radial(model)
    mask = phi.offset < psi.offset
    inc_l = bool(mask[0])
    inc_r = bool(mask[-1])
    m_psi = ma_measure(model, psi)
    m_phi = ma_measure(model, phi)
    return (restricted_mass(m_psi, mask, inc_l, inc_r),
            restricted_mass(m_phi, mask, inc_l, inc_r))


def demailly_margin(model, phi, psi, c=0.0):
    """Worst margin of the local-max inequality.

    The measure of max(phi, psi - c) dominates the measure of phi on
    the region where phi wins; the margin reported is the minimum of
    (mass_max - mass_phi) over the winning nodes (>= 0 when the
    inequality holds).
    """
    _require_radial(model)
    from .profiles import max_offsets

    top = max_offsets(phi, psi.shifted(-c))
    m_top = ma_measure(model, top)
    m_phi = ma_measure(model, phi)
    win = phi.offset >= psi.offset - c
    diff = m_top.density - m_phi.density
    return float(diff[win].min()) if win.any() else 0.0


# ----------------------------------------------------------------------
# toric backend: Aleksandrov cells on the moment square
# ----------------------------------------------------------------------

def toric_cells(t1, t2, Psi, want_jac=False):
    """Subgradient cell areas, first moments, and the area Jacobian.

    Parameters
    ----------
    t1, t2 : ndarray
        Axis grids.
    Psi : ndarray, shape (len(t1), len(t2))
        Potential values.
    want_jac : bool
        Also assemble d(areas)/d(Psi) as a sparse matrix.

    Returns
    -------
    areas : ndarray, shape (N,)
        Cell areas in the moment square; they tile the square exactly,
        so areas.sum() == 1 up to rounding.  Nodes off the lower convex
        hull get area 0.
    mom : ndarray, shape (N, 2)
        First moments of the cells (used by the solver's merit
        function).
    H : scipy.sparse matrix or None
        Symmetric Jacobian; row sums vanish.
    """
    n1, n2 = len(t1), len(t2)
    X, Y = np.meshgrid(t1, t2, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), np.asarray(Psi, float).ravel()])
    hull = ConvexHull(pts, qhull_options="Qt")
    tris = hull.simplices[hull.equations[:, 2] < -1e-12]
    N = n1 * n2
    nbrs = [set() for _ in range(N)]
    for a, b, c in tris:
        nbrs[a].update((b, c))
        nbrs[b].update((a, c))
        nbrs[c].update((a, b))
    V = pts[:, :2]
    Z = pts[:, 2]
    areas = np.zeros(N)
    mom = np.zeros((N, 2))
    rows, cols, vals = [], [], []
    on_hull = np.zeros(N, bool)
    if tris.size:
        on_hull[tris.ravel()] = True
    for k in range(N):
        if not on_hull[k]:
            continue
        # clip the unit square by the half-planes of k's neighbors,
        # tracking which neighbor produced each polygon edge
        poly = [((0.0, 0.0), -1), ((1.0, 0.0), -1), ((1.0, 1.0), -1), ((0.0, 1.0), -1)]
        for l in nbrs[k]:
            d = V[l] - V[k]
            rhs = Z[l] - Z[k]
            out = []
            n = len(poly)
            for i in range(n):
                (p, lab), (q, _) = poly[i], poly[(i + 1) % n]
                fp = d[0] * p[0] + d[1] * p[1] - rhs
                fq = d[0] * q[0] + d[1] * q[1] - rhs
                if fp <= 0:
                    out.append((p, lab))
                    if fq > 0:
                        s = fp / (fp - fq)
                        out.append(((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])), l))
                elif fq < 0:
                    s = fp / (fp - fq)
                    out.append(((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])), lab))
            poly = out
            if not poly:
                break
        if len(poly) >= 3:
            A = mx = my = 0.0
            n = len(poly)
            for i in range(n):
                (x1, y1), lab = poly[i]
                (x2, y2), _ = poly[(i + 1) % n]
                cr = x1 * y2 - x2 * y1
                A += cr
                mx += (x1 + x2) * cr
                my += (y1 + y2) * cr
                if want_jac and lab >= 0:
                    L = np.hypot(x2 - x1, y2 - y1)
                    if L > 0:
                        rows.append(k)
                        cols.append(lab)
                        vals.append(L / np.hypot(*(V[lab] - V[k])))
            sgn = 1.0 if A >= 0 else -1.0
            areas[k] = 0.5 * abs(A)
            mom[k, 0] = sgn * mx / 6.0
            mom[k, 1] = sgn * my / 6.0
    H = None
    if want_jac:
        H = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
        H = 0.5 * (H + H.T)
        H = H - sp.diags(np.asarray(H.sum(axis=1)).ravel())
    return areas, mom, H


def toric_hull_projection(t1, t2, Psi):
    """Project a toric potential onto its lower convex hull.

    Returns the projected array and the sup projection distance.
    """
    from scipy.interpolate import LinearNDInterpolator

    n1, n2 = len(t1), len(t2)
    X, Y = np.meshgrid(t1, t2, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), np.asarray(Psi, float).ravel()])
    hull = ConvexHull(pts, qhull_options="Qt")
    tris = hull.simplices[hull.equations[:, 2] < -1e-12]
    verts = np.unique(tris.ravel())
    interp = LinearNDInterpolator(pts[verts, :2], pts[verts, 2])
    low = interp(pts[:, :2])
    low = np.where(np.isnan(low), pts[:, 2], low)
    low = np.minimum(low, pts[:, 2])
    dist = float((pts[:, 2] - low).max())
    return low.reshape(n1, n2), dist


def toric_measure(model, phi, check_convex=True):
    """Aleksandrov measure of a toric potential (raw mass = 2)."""
    t1, t2, base = model.reference_potential
    Psi = base if phi is None else phi.values
    if check_convex:
        _, dist = toric_hull_projection(t1, t2, Psi)
        scale = max(1.0, float(np.abs(Psi).max()))
        if dist > 1e-8 * scale:
            raise NotOmegaPsh("toric potential is not convex")
    areas, _, _ = toric_cells(t1, t2, Psi)
    dens = 2.0 * areas.reshape(len(t1), len(t2))
    return MaMeasure("TwoD", (t1, t2), dens, (), float(dens.sum()))
