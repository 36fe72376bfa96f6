"""Model backends: reference measures, anchors, descriptor parsing."""

import numpy as np
import pytest

from ma_lab import ma, models
from ma_lab.errors import InvalidInput
from ma_lab.models import (ToricGrid, model_from_descriptor, product_p1p1,
                           radial_p2, toric_p1p1)


def test_radial_reference_cdf_law(radial):
    # sublevel mass of the reference measure is sigma(t)^2 (the measure
    # of {|z| <= r} under the Fubini-Study form on the plane is
    # (r^2/(1+r^2))^2, and t = 2 log|z| here)
    m = ma.ma_measure(radial, None)
    g = radial.reference_potential.grid
    from scipy.special import expit

    sig = expit(g)
    assert np.abs(m.cdf() - sig ** 2).max() < 5e-3
    i0 = int(np.searchsorted(g, 0.0))
    assert abs(m.cdf()[i0] - 0.25) < 5e-3
    assert m.total_mass == pytest.approx(1.0, abs=1e-12)
    assert not m.atoms


def test_radial_dirac_anchor(radial):
    base = radial.reference_potential
    from ma_lab.profiles import RelativeProfile

    dirac = RelativeProfile(base, base.grid / 2 - base.values)
    m = ma.ma_measure(radial, dirac)
    assert m.atom_mass(ma.FIXED_POINT) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(m.density).max() < 1e-12


def test_product_volume(product):
    assert product.volume == 2.0
    assert product.normalize(2.0) == 1.0
    m = ma.ma_measure(product, None)
    assert m.total_mass == pytest.approx(2.0, abs=1e-12)


def test_toric_reference_mass(toric32):
    m = ma.ma_measure(toric32, None)
    assert m.total_mass == pytest.approx(2.0, abs=1e-6)
    assert m.density.shape == (33, 33)


def test_toric_resolution_floor():
    with pytest.raises(InvalidInput):
        toric_p1p1(8)


def test_toric_grid_shape_check():
    m = toric_p1p1(16)
    t1, t2, base = m.reference_potential
    with pytest.raises(InvalidInput):
        ToricGrid(t1, t2, base[:-1, :])
    with pytest.raises(InvalidInput):
        ToricGrid(t1, t2, np.full_like(base, np.nan))


def test_toric_grid_combine():
    m = toric_p1p1(16)
    t1, t2, base = m.reference_potential
    a = ToricGrid(t1, t2, base)
    b = ToricGrid(t1, t2, base + 1.0)
    assert np.allclose(a.combine(b, 0.25).values, base + 0.25)


def test_descriptor_strings():
    assert model_from_descriptor("radial-p2") is radial_p2()
    assert model_from_descriptor("product-p1p1") is product_p1p1()
    assert model_from_descriptor("toric-p1p1").resolution == 64
    assert model_from_descriptor("toric-p1p1:32").resolution == 32


def test_descriptor_dicts():
    assert model_from_descriptor({"kind": "RadialP2"}) is radial_p2()
    got = model_from_descriptor({"kind": "toric-p1p1", "resolution": 16})
    assert got.resolution == 16
    with pytest.raises(InvalidInput):
        model_from_descriptor({"kind": "spherical"})
    with pytest.raises(InvalidInput):
        model_from_descriptor("no-such-model")


def test_reparameterization_invariance(radial):
    # masses are invariant under t -> 2t + 1 because only slopes of the
    # full potential relative to the cap enter the measure law
    from ma_lab.profiles import Profile, RelativeProfile

    base = radial.reference_potential
    g2 = 2.0 * base.grid + 1.0
    base2 = Profile(g2, base.values, 0.0, 0.25, 0.25)
    full = 0.5 * models.psi_fs(base.grid - 2.0) + 0.5 * models.psi_fs(base.grid + 1.0)
    off = full - base.values

    def ns(b, cap):
        return np.clip(RelativeProfile(b, off).full_profile().extended_slopes() / cap,
                       0.0, 1.0)

    m1 = ma.measure_1d_pair(base.grid, ns(base, 0.5), ns(base, 0.5))
    m2 = ma.measure_1d_pair(g2, ns(base2, 0.25), ns(base2, 0.25))
    assert np.abs(m1.cdf_seq - m2.cdf_seq).max() < 1e-12
