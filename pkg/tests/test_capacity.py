"""Capacity: extremal profiles, decay, and competitor domination."""

import numpy as np
import pytest

import ma_lab.capacity as cap_mod
from ma_lab import ma, verify
from ma_lab.errors import InvalidInput, PreconditionViolated
from ma_lab.profiles import RelativeProfile, truncate, zero_offset


def test_whole_space_capacity(radial):
    assert cap_mod.capacity(radial, cap_mod.whole_space()) == 1.0
    u = cap_mod.relative_extremal(radial, cap_mod.whole_space())
    assert np.all(u.offset == -1.0)


def test_empty_set_capacity(radial):
    # a sublevel at t -> -inf carries no mass
    phi = zero_offset(radial.reference_potential).shifted(-0.5)
    assert cap_mod.capacity(radial, cap_mod.phi_sublevel(phi, 3.0)) == 0.0


def test_capacity_monotone_in_T(radial):
    Ts = np.linspace(-20.0, 20.0, 15)
    caps = [cap_mod.capacity(radial, cap_mod.sublevel_set(T)) for T in Ts]
    assert np.all(np.diff(caps) >= 0.0)
    assert 0.0 < caps[0] < 1.0
    assert caps[-1] <= 1.0


def test_extremal_profile_shape(radial):
    K = cap_mod.sublevel_set(0.0)
    u = cap_mod.relative_extremal(radial, K)
    g = u.base.grid
    on_set = g <= 0.0
    assert np.abs(u.offset[on_set] + 1.0).max() < 1e-12
    assert np.all(u.offset <= 1e-12) and np.all(u.offset >= -1.0 - 1e-12)
    u.full_profile()  # admissibility assertion


def test_extremal_mass_equals_capacity(radial):
    # the capacity is the extremal potential's own mass on the set; the
    # set boundary is snapped to a grid node so the restriction mask and
    # the slope jump agree
    grid = radial.reference_potential.grid
    for T0 in (-4.0, 0.0, 3.0, 10.0):
        T = float(grid[int(np.searchsorted(grid, T0))])
        K = cap_mod.sublevel_set(T)
        u = cap_mod.relative_extremal(radial, K)
        m = ma.ma_measure(radial, u)
        g = u.base.grid
        got = ma.restricted_mass(m, g <= T, True, False)
        assert got == pytest.approx(cap_mod.capacity(radial, K), abs=1e-9)


def test_capacity_dominates_competitors(radial, corpus36):
    # any admissible u in [-1, 0] puts no more mass on the set than the
    # extremal profile does
    T = 2.0
    K = cap_mod.sublevel_set(T)
    c = cap_mod.capacity(radial, K)
    g = radial.reference_potential.grid
    for e in corpus36.with_tag("bounded"):
        u = e.phi.normalized(0.0)
        u = RelativeProfile(u.base, np.maximum(u.offset, -1.0))
        mass = ma.restricted_mass(ma.ma_measure(radial, u), g <= T, True, False)
        assert mass <= c + 1e-9


def test_scaling_competitor_bound(radial):
    phi = RelativeProfile(radial.reference_potential,
                          radial.reference_potential.grid / 2
                          - radial.reference_potential.values - 1.0)
    for t, s in ((2.0, 8.0), (4.0, 64.0)):
        lo = cap_mod.scaling_competitor_bound(radial, phi, t, s)
        c = cap_mod.capacity(radial, cap_mod.phi_sublevel(phi, t))
        assert lo <= c + 1e-9
    with pytest.raises(InvalidInput):
        cap_mod.scaling_competitor_bound(radial, phi, 4.0, 2.0)


def test_capacity_curve_preconditions(radial):
    base = radial.reference_potential
    deep = RelativeProfile(base, base.grid / 2 - base.values - 1.0)
    with pytest.raises(PreconditionViolated):
        cap_mod.capacity_curve(radial, deep.shifted(-3.0), [2.0, 4.0])
    with pytest.raises(InvalidInput):
        cap_mod.capacity_curve(radial, deep, [0.5, 2.0])


def test_decay_bound(radial):
    base = radial.reference_potential
    phi = RelativeProfile(base, base.grid / 2 - base.values - 1.0)
    C = cap_mod.decay_constant(radial, phi)
    assert np.isfinite(C) and C > 2.0
    for t in (2.0, 8.0, 32.0):
        c = cap_mod.capacity(radial, cap_mod.phi_sublevel(phi, t))
        assert c <= C / t ** 2 + 1e-9


def test_sandwich_order(radial):
    base = radial.reference_potential
    phi = RelativeProfile(base, base.grid / 2 - base.values - 1.0)
    vals = cap_mod.capacity_energy_sandwich(radial, phi, p=1.0)
    assert vals["sandwich_lower"] <= vals["sandwich_mid"] * (1 + 1e-6) + 1e-9
    assert vals["sandwich_mid"] <= vals["sandwich_upper"] * (1 + 1e-6) + 1e-9


def test_sublevel_masses(radial):
    base = radial.reference_potential
    phi = truncate(RelativeProfile(base, base.grid / 2 - base.values - 1.0), 16.0)
    m = ma.ma_measure(radial, phi)
    ts = np.array([1.0, 4.0, 20.0])
    masses = cap_mod.sublevel_masses(m, phi, ts)
    assert np.all(np.diff(masses) <= 1e-12)
    assert masses[-1] == 0.0  # truncation empties the deep sublevels
