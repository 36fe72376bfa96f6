"""Solvers for the measure equation on each backend.

The radial backend inverts the sublevel-mass law in closed form: the
target's distribution function F determines the solution slopes
s = cap * sqrt(F) cell by cell, and one cumulative sum recovers the
potential.  The separable product backend does the same per factor with
s = F.  The toric backend runs a damped Newton method on the
Aleksandrov cell areas through a mollification schedule, with a convex
dual merit function, an active-set reduced Jacobian, and a mass-floor
line search.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import energy, ma
from .errors import InvalidInput, NotSolvableInModel, PreconditionViolated
from .models import PRODUCT_P1P1, RADIAL_P2, TORIC_P1P1, ToricGrid

DEFAULT_WIDTHS = tuple(2.0 ** -j for j in range(3, 11))


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solve.

    psi is normalized to sup = -1.  residual is the sup distance of the
    sublevel-mass functions of the recovered measure and the target, on
    the target's own discretization.
    """

    psi: object
    residual: float
    energy_trace: tuple
    verdict: str
    diagnostics: dict = field(default_factory=dict)


def radial_target(model, node_mass, atom_a=0.0, atom_div=0.0):
    """Package raw node masses and end atoms as a radial target measure."""
    g = model.reference_potential.grid
    node_mass = np.asarray(node_mass, dtype=float)
    c = atom_a + np.concatenate([[0.0], np.cumsum(node_mass)])
    atoms = []
    if atom_a > 0:
        atoms.append((ma.FIXED_POINT, float(atom_a)))
    if atom_div > 0:
        atoms.append((ma.DIVISOR, float(atom_div)))
    total = float(c[-1] + atom_div)
    return ma.MaMeasure("OneD", g, node_mass, tuple(atoms), total, cdf_seq=c)


def dirac_target(model):
    """The unit atom at the fixed point."""
    g = model.reference_potential.grid
    return radial_target(model, np.zeros(g.size), atom_a=1.0)


def dirac_preimages(model, slope_deficit=1e-8, kink=-100.0):
    """Two profiles whose measures agree with the fixed-point atom.

    The first is the cusp solution the closed-form solver returns.  The
    second runs at slope cap*(1 - slope_deficit) left of the kink, so
    its measure is within 2*slope_deficit of the atom in sup distance
    while the potentials differ non-constantly, by cap * slope_deficit
    per unit length.  The atom target is not in the finite-self-energy
    class, and there the measure pins the potential down no better than
    this: the solution set of the exact problem has infinite dimension.
    """
    from .profiles import RelativeProfile

    base = model.reference_potential
    g = base.grid
    cap = model.slope_cap
    full1 = cap * g
    full2 = cap * g - cap * slope_deficit * np.minimum(g - kink, 0.0)
    phi1 = RelativeProfile(base, full1 - base.values).normalized(-1.0)
    phi2 = RelativeProfile(base, full2 - base.values).normalized(-1.0)
    return phi1, phi2


def solve_radial(model, target, p=1.0):
    """Closed-form radial solve.

    Parameters
    ----------
    model : KahlerModel (radial)
    target : MaMeasure
        1-D measure of mass 1 on the model grid.
    p : float
        Exponent used for the energy trace entry.

    Raises
    ------
    InvalidInput
        Mass differs from 1 beyond 1e-10.
    NotSolvableInModel
        The target distribution function exceeds 1, which would demand
        slopes above the cap.
    """
    if model.kind != RADIAL_P2:
        raise InvalidInput("solve_radial needs the radial model")
    if abs(target.total_mass - 1.0) > 1e-10:
        raise InvalidInput("target mass must be 1")
    F = target.cdf_seq
    if F.size != model.reference_potential.grid.size + 1:
        raise InvalidInput("target must live on the model grid")
    if F.max() > 1.0 + 1e-12 or F.min() < -1e-15:
        raise NotSolvableInModel("target distribution function leaves [0, 1]")
    cap = model.slope_cap
    s = cap * np.sqrt(np.clip(F, 0.0, 1.0))
    base = model.reference_potential
    g = base.grid
    vals = _integrate_slopes(g, s[1:-1])
    psi = _as_relative(base, vals).normalized(-1.0)
    got = ma.ma_measure(model, psi)
    residual = ma.cdf_sup_distance(got, target)
    rep = energy.energy_report(model, psi, p)
    verdict = "solved" if rep.memberships["in_Ep"] else "not_in_Ep"
    return SolveResult(psi, residual, (rep.E_p_full,), verdict,
                       {"in_Ep": rep.memberships["in_Ep"]})


def _as_relative(base, vals):
    from .profiles import RelativeProfile

    return RelativeProfile(base, vals - base.values)


def _integrate_slopes(g, s_cells):
    """Cumulative integral of cell slopes, anchored at the grid center.

    Anchoring in the core keeps the small-step cells at full precision;
    integrating from a far tail would carry values ~1e14 into the core
    where the ULP exceeds the cell width times any slope jitter budget.
    """
    deltas = s_cells * np.diff(g)
    i0 = int(np.searchsorted(g, 0.0))
    vals = np.empty(g.size)
    vals[i0] = 0.0
    vals[i0 + 1:] = np.cumsum(deltas[i0:])
    vals[:i0] = -np.cumsum(deltas[:i0][::-1])[::-1]
    return vals


def solve_separable(model, factor_targets, p=1.0):
    """Per-factor closed-form solve on the product model.

    factor_targets is a pair of 1-D measures of mass 1, one per line
    factor, describing the target 2 * m1 (x) m2.
    """
    if model.kind != PRODUCT_P1P1:
        raise InvalidInput("solve_separable needs the product model")
    sols = []
    for base, m in zip(model.reference_potential, factor_targets):
        if abs(m.total_mass - 1.0) > 1e-10:
            raise InvalidInput("factor target mass must be 1")
        F = m.cdf_seq
        if F.max() > 1.0 + 1e-12:
            raise NotSolvableInModel("factor distribution function exceeds 1")
        s = np.clip(F, 0.0, 1.0)
        sols.append(_as_relative(base, _integrate_slopes(base.grid, s[1:-1])))
    u, v = sols
    shift = u.sup_value + v.sup_value + 1.0
    u = u.shifted(-shift)
    psi = (u, v)
    got = ma.ma_measure(model, psi)
    tgt = ma.product_measure(((2.0, factor_targets[0], factor_targets[1]),))
    residual = ma.cdf_sup_distance(got, tgt)
    rep = energy.energy_report(model, psi, p)
    return SolveResult(psi, residual, (rep.E_p_full,), "solved", {})


def _dual_merit(areas, mom, V, P, tgt):
    # convex dual of the cell-area map; its gradient is tgt - areas
    return float(np.sum(mom[:, 0] * V[:, 0] + mom[:, 1] * V[:, 1] - P * areas)
                 + np.dot(tgt, P))


def _separable_init(t1, t2, T):
    def pot(t, mrg):
        s = np.clip(np.cumsum(mrg)[:-1], 0.0, 1.0)
        return np.concatenate([[0.0], np.cumsum(s * np.diff(t))])

    return pot(t1, T.sum(axis=1))[:, None] + pot(t2, T.sum(axis=0))[None, :]


def _newton(t1, t2, Psi0, tgt, itmax=40, tol=1e-11):
    """Damped Newton on cell areas; returns (Psi, residual, info)."""
    X, Y = np.meshgrid(t1, t2, indexing="ij")
    V = np.column_stack([X.ravel(), Y.ravel()])
    areas, mom, H = ma.toric_cells(t1, t2, Psi0, want_jac=True)
    P = np.asarray(Psi0, float).ravel().copy()
    F = _dual_merit(areas, mom, V, P, tgt)
    res = float(np.abs(areas - tgt).sum())
    supp = tgt > 0
    floor = 0.5 * min(areas[supp].min(), tgt[supp].min()) if supp.any() else 0.0
    if floor <= 0:
        # an initializer starving a target cell would deadlock the mass
        # floor; nudge toward the reference shape handled by caller
        floor = 0.0
    proj_dists = []
    iters = 0
    for it in range(itmax):
        iters = it
        if res < tol:
            break
        r = tgt - areas
        act = (areas > 0) | supp
        Ha = H[act][:, act].tocsc()
        Ha = Ha - sp.eye(Ha.shape[0]) * max(1e-14 * np.abs(Ha.diagonal()).max(), 1e-300)
        da = spla.spsolve(Ha, r[act])
        d = np.zeros(tgt.size)
        d[act] = da
        gd = float(np.dot(r, d))
        tau, ok = 1.0, False
        while tau > 2.0 ** -20:
            Pt = P + tau * d
            shaped = Pt.reshape(Psi0.shape)
            at, mt, Ht = ma.toric_cells(t1, t2, shaped, want_jac=True)
            Ft = _dual_merit(at, mt, V, Pt, tgt)
            if (not supp.any() or at[supp].min() >= floor) and \
                    Ft <= F + 1e-4 * tau * min(gd, 0.0):
                ok = True
                break
            tau *= 0.5
        if not ok:
            return P.reshape(Psi0.shape), res, {"iterations": iters, "stalled": True,
                                                "projection_distances": tuple(proj_dists)}
        P, areas, mom, H, F = Pt, at, mt, Ht, Ft
        # convexity safeguard: replace by the lower hull; only nodes with
        # zero area and zero target move, so areas and merit are unchanged
        hullP, dist = ma.toric_hull_projection(t1, t2, P.reshape(Psi0.shape))
        proj_dists.append(dist)
        P = hullP.ravel()
        res = float(np.abs(areas - tgt).sum())
    # running out of iterations above tolerance is a stall, not success
    return P.reshape(Psi0.shape), res, {"iterations": iters,
                                        "stalled": bool(res >= tol),
                                        "projection_distances": tuple(proj_dists)}


def _gauss_smooth(T, h, eps):
    """Discrete Gaussian mollification of node masses, mass preserving."""
    half = int(np.ceil(4 * eps / h))
    if half == 0:
        return T
    x = np.arange(-half, half + 1) * h
    k = np.exp(-0.5 * (x / eps) ** 2)
    k /= k.sum()
    pad = np.pad(T, half, mode="constant")
    # separable convolution; mass leaking off the box is renormalized back
    for axis in (0, 1):
        pad = np.apply_along_axis(lambda m: np.convolve(m, k, mode="same"), axis, pad)
    core = pad[half:pad.shape[0] - half, half:pad.shape[1] - half].copy()
    if core.sum() > 0:
        core *= T.sum() / core.sum()
    return core


def solve_newton_toric(model, target, p=1.0, widths=DEFAULT_WIDTHS, itmax=40):
    """Damped Newton solve of the 2-D discrete measure equation.

    The target is approximated by a decreasing-width schedule
    mu_j = c_j * (G_{eps_j} * mu + eps_j * reference), each level solved
    by warm-started Newton, then the unmollified target is solved last.
    The energy trace across levels must stay bounded for the membership
    verdict; Newton stagnation yields a diverged verdict with the trace.
    """
    if model.kind != TORIC_P1P1:
        raise InvalidInput("solve_newton_toric needs the toric model")
    if target.atoms:
        raise InvalidInput("atoms interior to the moment square are not solvable "
                           "on the Newton path")
    t1, t2, base = model.reference_potential
    if abs(target.total_mass - model.volume) > 1e-10:
        raise InvalidInput("target mass must equal the model volume")
    T = np.asarray(target.density, float) / model.volume  # cell areas, sum 1
    ref_areas, _, _ = ma.toric_cells(t1, t2, base)
    ref = ref_areas.reshape(T.shape)
    h = float(t1[1] - t1[0])
    widths = tuple(widths)
    if len(widths) > 1 and not all(b < a for a, b in zip(widths, widths[1:])):
        raise InvalidInput("mollification widths must decrease strictly")
    Psi = _separable_init(t1, t2, T)
    trace = []
    info = {}
    consistency = []
    prev_offset = None
    for eps in list(widths) + [None]:
        if eps is None:
            tgt = T
        else:
            sm = _gauss_smooth(T, h, eps)
            mix = sm + eps * ref
            tgt = mix / mix.sum()
        # intermediate levels are warm starts; only the final level needs
        # the full tolerance
        lvl_tol = 1e-9 if eps is not None else 1e-11
        Psi, res, info = _newton(t1, t2, Psi, tgt.ravel(), itmax=itmax, tol=lvl_tol)
        if info["stalled"] and res <= 100.0 * lvl_tol:
            # line search exhausted within float noise of the target:
            # that is convergence, not stagnation
            info = dict(info, stalled=False)
        off = Psi - base
        off = off - off.max() - 1.0
        trace.append(float(np.sum(tgt.ravel() * (-off.ravel()) ** p) * model.volume))
        if prev_offset is not None:
            consistency.append(float(np.sum(np.abs(off - prev_offset).ravel()
                                            * tgt.ravel()) * model.volume))
        prev_offset = off
        if info["stalled"]:
            break
    off = Psi - base
    psi = ToricGrid(t1, t2, Psi - off.max() - 1.0)
    got = ma.toric_measure(model, psi, check_convex=False)
    diff = got.density - np.asarray(target.density, float)
    residual = float(np.abs(np.cumsum(np.cumsum(diff, axis=0), axis=1)).max())
    verdict = "solved"
    if info.get("stalled"):
        verdict = "diverged"
    elif len(trace) >= 3 and trace[-1] > 100.0 * max(trace[0], 1.0):
        verdict = "not_in_Ep"
    return SolveResult(psi, residual, tuple(trace), verdict,
                       {"newton": info, "mollification_consistency": tuple(consistency),
                        "l1_residual": float(np.abs(diff).sum())})


def uniqueness_check(model, psi1, psi2, measure_tol=1e-7, deviation_tol=1e-5):
    """Compare two candidate solutions of one target.

    Raises PreconditionViolated if their measures disagree beyond
    measure_tol.  Reports the sup deviation of psi1 - psi2 from its
    mean; within the finite-self-energy class this deviation vanishes,
    and the check passes iff it is below deviation_tol.
    """
    m1 = ma.ma_measure(model, psi1)
    m2 = ma.ma_measure(model, psi2)
    dist = ma.cdf_sup_distance(m1, m2)
    if dist > measure_tol:
        raise PreconditionViolated("candidate measures disagree")
    if model.kind == TORIC_P1P1:
        d = (psi1.values - psi2.values).ravel()
    elif model.kind == PRODUCT_P1P1:
        d = (psi1[0].offset + psi1[1].offset) - (psi2[0].offset + psi2[1].offset)
        g = psi1[0].base.grid
        d = d[np.abs(g) <= 1e4]
    else:
        d = psi1.offset - psi2.offset
        # beyond |t| ~ 1e4 the potentials are affine continuations whose
        # value ULP exceeds any sensible tolerance; the measure cannot
        # pin the potential below representation error there
        d = d[np.abs(psi1.base.grid) <= 1e4]
    dev = float(np.abs(d - d.mean()).max())
    return {"measure_distance": dist, "deviation": dev,
            "passed": dev <= deviation_tol}
