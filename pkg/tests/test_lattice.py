import itertools
import math

import numpy as np
import pytest

from lbm_taylor.algebra import ScalarMode
from lbm_taylor.analytics import gamma_reference
from lbm_taylor.dispersion import amplification, measured_rate
from lbm_taylor.experiments import full_sphere_spectrum, octant_spectrum, transport_coefficient
from lbm_taylor.lattice import (GHOST, BoundaryRule, Simulator, apply_symmetry_planes, bessel_seed,
                                build_boundary_links, disk, octant, periodic_box, plane_wave, random_fields, sphere)
from lbm_taylor.schemes import make_model
from test_schemes import GENERIC


def _float_model(kind, rates=None, params=None):
    r, p = GENERIC[kind]
    return make_model(kind, {k: float(v) for k, v in (rates or r).items()},
                      {k: float(v) for k, v in (params or p).items()}, mode=ScalarMode.FLOAT)


def test_equilibrium_is_a_fixed_point():
    for kind, shape in (("thermal-d2q5", (8, 6)), ("fluid-d2q9", (5, 7)), ("fluid-d3q19", (4, 3, 5))):
        scheme, psi = _float_model(kind)
        sim = Simulator(scheme, psi, periodic_box(shape))
        w = np.ones((psi.conserved,) + shape) * np.arange(1, psi.conserved + 1)[(slice(None),) + (None,) * len(shape)]
        s0 = sim.equilibrium(w)
        s1 = sim.run(s0, 5)
        np.testing.assert_allclose(s1.f, s0.f, atol=1e-13)


def test_unit_rates_project_onto_equilibrium():
    scheme, psi = make_model("thermal-d1q3", {"s1": 1, "s2": 1}, {"alpha": 0.3, "u": 0.2}, mode=ScalarMode.FLOAT)
    sim = Simulator(scheme, psi, periodic_box((9,)))
    f = np.random.default_rng(1).standard_normal((3, 9 + 2 * GHOST))
    m_after = sim.moments @ sim.collide(f)
    rho = (sim.moments @ f)[0]
    np.testing.assert_allclose(m_after, np.outer(sim.equilibrium_block[:, 0], rho), atol=1e-13)


def test_plane_wave_decays_at_one_point_rate():
    scheme, psi = _float_model("thermal-d2q5")
    geo = periodic_box((32, 32))
    sim = Simulator(scheme, psi, geo)
    modes = (3, 1)
    k = np.array([2 * math.pi * i / 32 for i in modes])
    state = sim.run(sim.equilibrium(plane_wave(geo, modes)), 100)
    a100 = np.max(np.abs(sim.conserved_fields(state)))
    state = sim.run(state, 100)
    a200 = np.max(np.abs(sim.conserved_fields(state)))
    g_sim = -math.log(a200 / a100) / 100
    g_one, _ = measured_rate(amplification(scheme, psi, k), g_sim)
    assert g_sim == pytest.approx(g_one, rel=1e-10)


def test_periodic_runs_conserve_mass_and_momentum():
    scheme, psi = _float_model("fluid-d2q9")
    geo = periodic_box((12, 10))
    sim = Simulator(scheme, psi, geo)
    state = sim.equilibrium(random_fields(geo, 3, seed=4) + 1.0)
    before = sim.conserved_fields(state).sum(axis=(1, 2))
    after = sim.conserved_fields(sim.run(state, 1000)).sum(axis=(1, 2))
    np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-12 * abs(before[0]))


def test_mirrored_start_gives_mirrored_trajectory():
    scheme, psi = _float_model("fluid-d2q9")
    geo = disk(5.2, center_offset=(0.0, 0.3), shape=(15, 15))
    sim = Simulator(scheme, psi, geo, BoundaryRule("bounce-back", 2))
    w = random_fields(geo, 3, seed=2)
    wm = w[:, ::-1, :].copy()
    wm[1] *= -1
    a = sim.conserved_fields(sim.run(sim.equilibrium(w), 20))
    b = sim.conserved_fields(sim.run(sim.equilibrium(wm), 20))
    b = b[:, ::-1, :]
    b[1] *= -1
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_disk_link_fraction_and_link_table_completeness():
    scheme, _ = _float_model("thermal-d2q5")
    geo = disk(2.5, center_offset=(0.0, 0.0), shape=(7, 7))
    links = build_boundary_links(geo, scheme)
    assert np.all((links.q > 0) & (links.q <= 1))
    pshape = geo.fluid_padded.shape
    x = np.ravel_multi_index((3 + 2 + GHOST, 3 + GHOST), pshape)
    east = scheme.lattice_velocities.index((1, 0))
    i = np.flatnonzero((links.node == x) & (links.velocity == east))
    assert len(i) == 1 and links.q[i[0]] == pytest.approx(0.5, abs=1e-14)
    # every outgoing link of a fluid node hits fluid or is listed exactly once
    listed = set(zip(links.node.tolist(), links.velocity.tolist()))
    assert len(listed) == len(links)
    fp = geo.fluid_padded
    for idx in np.argwhere(fp[geo.interior]):
        node = tuple(idx + GHOST)
        for j, e in enumerate(scheme.lattice_velocities):
            dst = tuple(a + b for a, b in zip(node, e))
            assert fp[dst] or (np.ravel_multi_index(node, pshape), j) in listed


def test_sphere_table_for_reference_radius():
    scheme, _ = _float_model("thermal-d3q7")
    geo = sphere(17.2)
    links = build_boundary_links(geo, scheme)
    assert len(links) > 0 and np.all((links.q > 0) & (links.q < 1))
    assert len(build_boundary_links(periodic_box((4, 4, 4)), scheme)) == 0
    with pytest.raises(ValueError):
        build_boundary_links(disk(3.0), scheme)


@pytest.mark.parametrize("kind,sign", [("bounce-back", 1.0), ("anti-bounce-back", -1.0)])
def test_half_link_reduces_to_plain_reflection(kind, sign):
    scheme, psi = _float_model("thermal-d2q5")
    geo = disk(2.5, center_offset=(0.0, 0.0), shape=(7, 7))
    sim = Simulator(scheme, psi, geo, BoundaryRule(kind, 1))
    state = sim.equilibrium(random_fields(geo, 1, seed=0))
    state.f += np.random.default_rng(3).standard_normal(state.f.shape) * sim.active
    fstar = sim.collide(state.f)
    sim.fill_ghosts(fstar)
    fnew = sim.stream(fstar)
    sim.apply_boundary(fnew, fstar)
    east = scheme.lattice_velocities.index((1, 0))
    west = scheme.opposite(east)
    x = (3 + 2 + GHOST, 3 + GHOST)
    assert fnew[(west,) + x] == pytest.approx(sign * fstar[(east,) + x], abs=1e-14)


def test_boundary_rule_and_geometry_validation():
    with pytest.raises(ValueError):
        BoundaryRule("slip", 1)
    with pytest.raises(ValueError):
        BoundaryRule("bounce-back", 3)
    scheme, psi = _float_model("thermal-d2q5")
    with pytest.raises(ValueError, match="3D"):
        Simulator(scheme, psi, sphere(3.0))
    with pytest.raises(ValueError):
        disk(40.0, shape=(20, 20))
    with pytest.raises(ValueError):
        octant(4.0, ("even", "sideways", "odd"))
    sim = Simulator(scheme, psi, disk(3.0))
    with pytest.raises(ValueError, match="octant"):
        apply_symmetry_planes(sim, sim.empty_state().f)
    with pytest.raises(ValueError):
        sim.equilibrium(np.zeros((1, 3, 3)))


def test_non_finite_state_aborts_with_step_index():
    scheme, psi = _float_model("thermal-d2q5")
    sim = Simulator(scheme, psi, periodic_box((4, 4)))
    state = sim.equilibrium(np.ones((1, 4, 4)))
    state.f[0, GHOST, GHOST] = np.nan
    with pytest.raises(FloatingPointError, match="step 1"):
        sim.step(state)


@pytest.mark.parametrize("parity", [("even", "even", "even"), ("odd", "even", "odd")])
def test_symmetry_planes_mirror_fields_with_parity(parity):
    scheme, psi = _float_model("fluid-d3q19")
    geo = octant(4.5, parity)
    sim = Simulator(scheme, psi, geo, BoundaryRule("bounce-back", 1))
    f = sim.equilibrium(random_fields(geo, 4, seed=5)).f
    f += np.random.default_rng(6).standard_normal(f.shape) * sim.active
    apply_symmetry_planes(sim, f)
    m = np.tensordot(sim.moments[:4], f, axes=1)
    for a, name in enumerate(parity):
        sign = 1.0 if name == "even" else -1.0
        ghost = [slice(GHOST, GHOST + 3)] * 3
        inner = list(ghost)
        ghost[a] = GHOST - 1
        inner[a] = GHOST
        # density follows the plane parity; the normal momentum takes the opposite sign
        np.testing.assert_allclose(m[(0,) + tuple(ghost)], sign * m[(0,) + tuple(inner)], atol=1e-13)
        np.testing.assert_allclose(m[(1 + a,) + tuple(ghost)], -sign * m[(1 + a,) + tuple(inner)], atol=1e-13)


def test_octant_sectors_cover_the_full_sphere_spectrum():
    rates, params = {"s1": 1.5, "s4": 1.2, "s6": 1.3}, {"alpha": 0.0}
    radius = 5.3
    kappa = transport_coefficient("thermal-d3q7", {"s1": 1 / 1.5 - 0.5}, params)
    target = gamma_reference("heat-sphere", 0, 1, radius, kappa)
    rule = BoundaryRule("anti-bounce-back", 1)
    sectors = []
    for parity in itertools.product(("even", "odd"), repeat=3):
        sectors += octant_spectrum("thermal-d3q7", rates, params, radius, parity, rule, target, count=3, power=5,
                                   krylov_size=20)
    full = full_sphere_spectrum("thermal-d3q7", rates, params, radius, rule, target, count=4, power=5, krylov_size=40)
    for g in full:
        assert min(abs(s / g - 1) for s in sectors) < 1e-8
    assert min(full) == pytest.approx(target, rel=0.05)


def test_initial_fields():
    geo = periodic_box((8, 4))
    w = plane_wave(geo, (1, 0), component=1, conserved=3)
    assert w.shape == (3, 8, 4) and np.all(w[0] == 0) and w[1, 0, 0] == 1.0
    d = disk(6.0)
    seed = bessel_seed(d, "heat-disk", 0, 1, 1)
    assert np.all(seed[0][~d.fluid] == 0) and seed.max() > 0.9
    with pytest.raises(ValueError):
        bessel_seed(sphere(4.0), "heat-sphere", 2, 1, 1)
    a, b = random_fields(d, 1, 7), random_fields(d, 1, 7)
    assert np.array_equal(a, b)
