import numpy as np
import pytest

from morawetz_lab.fields import coordinate_symbols, potential_from_expressions
from morawetz_lab.manufactured import gaussian, manufactured_field, outgoing_wave, shell_bump
from morawetz_lab.morawetz import (TERM_LABELS, HelmholtzInstance, covariant_gradient, estimate_report,
                                   identity_breakdown, manufacture_instance, radial_tangential_split,
                                   sanity_checks, smooth_multiplier, zero_resonance_diagnostic)
from morawetz_lab.multipliers import multiplier_set

from conftest import ANGULAR

PHI = multiplier_set(2, 1, 3, 3)


@pytest.fixture(scope="module")
def dirichlet_instance(ball, example1):
    mf = outgoing_wave(1.0, 3, 7, obstacle=ball, angular=ANGULAR)
    return manufacture_instance(mf, ball, example1, 1.0, 0.1)


@pytest.fixture(scope="module")
def compact_instance(ball, bumps):
    return manufacture_instance(shell_bump(3.5, 2.4, phase_k=1.0, angular=ANGULAR), ball, bumps, 1.5, 0.05, -1)


def test_instance_flags(dirichlet_instance, compact_instance):
    assert dirichlet_instance.boundary_condition == "dirichlet"
    assert dirichlet_instance.trace_max == 0.0
    # the bump's support starts off the boundary, so the trace test passes too
    assert compact_instance.boundary_condition == "dirichlet"
    assert compact_instance.provenance == "manufactured"


def test_instance_validation(coarse_grid, zero):
    u = np.ones(coarse_grid.shape, complex)
    with pytest.raises(ValueError, match="sign"):
        HelmholtzInstance(coarse_grid, zero, 1.0, 0.1, 0, u, u)
    with pytest.raises(ValueError, match="trace"):
        HelmholtzInstance(coarse_grid, zero, 1.0, 0.1, 1, u, u, "dirichlet")
    with pytest.raises(ValueError, match="gradient"):
        manufacture_instance(gaussian([0, 0, 3], 1), None, zero, 1.0, 0.1, grid=coarse_grid,
                             gradient="spectral")


def test_identity_terms_and_labels(dirichlet_instance):
    tb = identity_breakdown(dirichlet_instance, PHI)
    assert set(tb.terms) == set(TERM_LABELS)
    assert tb.relative < 5e-3
    assert tb.lhs == pytest.approx(tb.rhs, rel=5e-3)
    d = tb.as_dict()
    assert d["terms"]["T1"]["label"] == "hessian"
    assert d["multiplier"].startswith("phi_R")
    # u vanishes on both surfaces, so the two T12 forms coincide
    assert tb.t12_plain == pytest.approx(tb.t12_covariant, abs=1e-12 * tb.scale)


def test_identity_with_both_signs(compact_instance):
    tb = identity_breakdown(compact_instance, PHI)
    assert tb.relative < 5e-3
    assert tb.boundary_max == 0.0


def test_covariant_transport_closes_the_identity_with_a_trace(ball):
    X = coordinate_symbols(3)
    p = potential_from_expressions([0.3 + 0.1 * X[1], 0.2 * X[2], 0.1 * X[0]], 0, 3)
    inst = manufacture_instance(gaussian([0.3, 0, 0], 2.0), ball, p, 1.0, 0.1)
    covariant = identity_breakdown(inst, PHI, "covariant")
    plain = identity_breakdown(inst, PHI, "plain")
    assert covariant.relative < 1e-3
    assert plain.relative > 1e-2
    assert plain.t12_covariant == pytest.approx(covariant.terms["T12"])


def test_identity_is_quadratic(dirichlet_instance):
    base = identity_breakdown(dirichlet_instance, smooth_multiplier())
    scaled = identity_breakdown(dirichlet_instance.scaled(-2.5), smooth_multiplier())
    for key, value in base.terms.items():
        assert scaled.terms[key] == pytest.approx(6.25 * value, rel=1e-12, abs=1e-12 * base.scale)


def test_multiplier_radius_must_be_a_breakpoint(dirichlet_instance):
    with pytest.raises(ValueError, match="breakpoint"):
        identity_breakdown(dirichlet_instance, multiplier_set(3.0, 1, 3, 3))
    with pytest.raises(ValueError, match="outside"):
        identity_breakdown(dirichlet_instance, multiplier_set(16.0, 1, 3, 3))
    with pytest.raises(ValueError, match="T12"):
        identity_breakdown(dirichlet_instance, PHI, "gauge")


def test_split_and_covariant_gradient(coarse_grid, rng):
    g = rng.normal(size=coarse_grid.points.shape) + 1j * rng.normal(size=coarse_grid.points.shape)
    radial, tangential = radial_tangential_split(g, coarse_grid)
    total = np.sum(np.abs(g) ** 2, axis=-1)
    np.testing.assert_allclose(np.abs(radial) ** 2 + tangential**2, total, rtol=1e-12)
    u = np.exp(0.2j * coarse_grid.points[..., 2])
    A = np.zeros(coarse_grid.points.shape)
    A[..., 2] = 0.2
    # e^{i z/5} is covariantly constant for A = e_z/5; |grad u| = 0.2
    assert np.max(np.abs(covariant_gradient(u, A, coarse_grid))) < 0.1 * 0.2


def test_estimate_reports(dirichlet_instance, bumpy, example1):
    rep = estimate_report(dirichlet_instance, "thm11")
    assert all(v >= 0 for v in rep.lhs.values())
    assert rep.rhs["boundary_plus_flux"] == 0.0
    assert 0 < rep.ratio < np.inf and not rep.degenerate
    assert rep.as_dict()["meta"]["constants"] == "C = 1"
    for theorem in ("thm12", "thm12_highfreq"):
        rep = estimate_report(dirichlet_instance, theorem)
        assert rep.beta == pytest.approx(1.0)
        assert rep.lhs["boundary_normal"] > 0
    inst = manufacture_instance(outgoing_wave(1.0, 3, 7, obstacle=bumpy), bumpy, example1, 1.0, 0.1)
    rep = estimate_report(inst, "thm12")
    assert 0 < rep.beta < 1
    with pytest.raises(ValueError, match="theorem"):
        estimate_report(dirichlet_instance, "thm13")
    with pytest.raises(ValueError, match="base point"):
        estimate_report(dirichlet_instance, y=[1, 1, 1])


def test_estimate_restriction(dirichlet_instance):
    full = estimate_report(dirichlet_instance)
    inner = estimate_report(dirichlet_instance, r_max=4.0)
    assert inner.meta["truncation"] == 4.0
    assert inner.lhs["tangential_gradient"] < full.lhs["tangential_gradient"]


def test_zero_field_is_degenerate(ball, zero, coarse_grid):
    inst = manufacture_instance(manufactured_field("0", 3), ball, zero, 1.0, 0.1, grid=coarse_grid)
    rep = estimate_report(inst)
    assert rep.degenerate and np.isnan(rep.ratio) and rep.as_dict()["ratio"] is None


def test_sanity_relations(dirichlet_instance, compact_instance):
    for inst in (dirichlet_instance, compact_instance):
        rep = sanity_checks(inst)
        assert rep.energy_identity.holds and rep.hardy.holds
        assert set(rep.as_dict()) == {"epsilon_inequality", "energy_identity", "hardy"}


def test_zero_resonance_classes(ball, coarse_grid):
    g = coarse_grid
    V = np.zeros(g.shape)
    harmonic = 1 - 1 / g.r
    assert zero_resonance_diagnostic(harmonic, V, g).classification == "resonance_candidate"
    assert zero_resonance_diagnostic(1 / g.r, V, g).classification == "not_candidate"
    bump = np.where(np.abs(g.r - 2.5) < 1, (1 - (g.r - 2.5) ** 2) ** 3, 0.0)
    rep = zero_resonance_diagnostic(bump, V, g)
    assert rep.classification == "not_candidate"
    assert rep.sup_value > 0 and rep.liminf_proxy == pytest.approx(0.0, abs=1e-12)
