import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwheb.analysis import (
    HEBSpec,
    base_case_check,
    c_prime_denominator,
    distance_to_optset,
    envelope_check,
    estimate_heb,
    fit_rate,
    gap_certificate_check,
    lemma1_check,
    lemma1_margins,
    lemma2_check,
    linear_branch_constants,
    monotone_check,
    smoothness_descent_check,
    theorem_constants,
)
from fwheb.errors import (
    DegenerateConstantError,
    InvalidInputError,
    NotApplicableError,
    TooFewPointsError,
)
from fwheb.geometry import Ball
from fwheb.objectives import ShiftedSqNorm
from fwheb.problems import CANNED_KINDS, Problem, make_problem
from fwheb.solver import IterRecord, SolverConfig, StepRule, Termination, Trace, fw_solve

SQ2 = math.sqrt(2.0)


def synthetic_trace(h, grad_norm=1.0):
    recs = tuple(
        IterRecord(t=t, f=float(v), h=float(v), dual_gap=float(v), grad_norm=grad_norm, eta=0.5,
                   lemma2_bound=None)
        for t, v in enumerate(h)
    )
    return Trace(recs, np.zeros(2), Termination.MAX_ITERS, StepRule.OPTION_I)


# --- constants -------------------------------------------------------------


def test_constants_theta_half():
    tc = theorem_constants(0.5, SQ2, 1.0, 1.0, 2.0)
    beta = 0.5
    first = (2 - 2**beta) / (2**beta - 1)
    assert first == pytest.approx(SQ2, rel=1e-14)
    assert tc.C_prime == pytest.approx(2 + SQ2, rel=1e-14)
    assert tc.k == pytest.approx(2 + SQ2, rel=1e-14)
    assert tc.beta == 0.5


def test_constants_theta_zero():
    tc = theorem_constants(0.0, SQ2, 1.0, 1.0, 2.0)
    assert tc.C_prime == 1.0 and tc.k == 1.0
    assert tc.M == pytest.approx(1 / (8 * SQ2), rel=1e-15)
    assert tc.C == pytest.approx(16 * SQ2, rel=1e-14)
    assert tc.C == pytest.approx(22.63, abs=5e-3)


def test_rho_example():
    assert theorem_constants(0.5, 1.0, 1.0, 1.0, 2.0).rho == 0.875
    assert linear_branch_constants(1.0, 1.0, 1.0).rho == 0.875


def test_theta_one_is_degenerate():
    with pytest.raises(DegenerateConstantError):
        theorem_constants(1.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(InvalidInputError):
        theorem_constants(0.5, -1.0, 1.0, 1.0, 2.0)
    with pytest.raises(InvalidInputError):
        theorem_constants(1.5, 1.0, 1.0, 1.0, 2.0)


def test_constant_sanity_on_theta_grid():
    firsts = []
    for theta in np.arange(10) / 10:
        tc = theorem_constants(theta, 1.0, 1.0, 1.0, 2.0)
        assert tc.C_prime > 0
        assert 0 < tc.beta <= 1 and 0.5 <= tc.rho < 1
        if theta > 0:
            assert tc.k >= tc.C_prime > 1
        else:
            assert tc.k == 1.0
        b = 1 - theta
        firsts.append((2 - 2**b) / (2**b - 1))
    assert firsts[0] == 0.0
    assert np.all(np.diff(firsts) > 0)


@pytest.mark.parametrize("theta", np.linspace(0, 0.95, 20))
def test_c_prime_proof_form_matches(theta):
    beta = 1 - theta
    proof = 1 / (beta - (1 - beta) * (2**beta - 1))
    assert 1 / c_prime_denominator(theta) == pytest.approx(proof, rel=1e-13)


def test_envelope_at_t1_dominates_base_case():
    for theta in (0.0, 0.25, 0.5, 0.75):
        tc = theorem_constants(theta, 1.0, 1.0, 3.0, 2.0)
        assert tc.C / (1 + tc.k) ** (1 / (1 - theta)) >= 3.0 * 4 / 2 * (1 - 1e-12)


# --- gradient lower bound --------------------------------------------------


def test_grad_bound_levelset_example():
    p = make_problem("levelset_kkt")
    rep = lemma1_check(p, [[0.0, 0.0]])
    assert rep.passed
    assert rep.worst == pytest.approx(math.sqrt(1.5) - 2.0)


def test_grad_bound_at_optimum_holds():
    p = make_problem("sc_interior")
    assert lemma1_check(p, [p.ground_truth.optset]).passed


def test_grad_bound_sc_interior_identity(rng):
    p = make_problem("sc_interior")
    pts = p.set.sample(rng, 2000)
    rep = lemma1_check(p, pts)
    assert rep.passed
    # the margin is exactly ||x - z|| / 2 - ||x - z||
    gn = np.linalg.norm(pts - p.ground_truth.optset, axis=1)
    assert rep.worst == pytest.approx(np.max(-0.5 * gn), abs=1e-12)


def test_grad_bound_flags_overclaimed_constant():
    p = make_problem("sc_interior")
    bad = HEBSpec(0.5, 0.5, p.ground_truth.optset, 0.0)
    rep = lemma1_check(p, p.set.sample(np.random.default_rng(0), 500), heb=bad)
    assert rep.violations > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0.0, 0.9), st.integers(0, 1000))
def test_grad_bound_rescaling_invariance(lam, theta, seed):
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0, 2, 50)
    grads = rng.uniform(0, 2, 50)
    c = rng.uniform(0.2, 3)
    base = lemma1_margins(grads, gaps, theta, c)
    scaled = lemma1_margins(lam * grads, lam * gaps, theta, c * lam ** (-theta))
    # margins scale by lam, so the sign pattern is unchanged away from round-off
    clear = np.abs(base) > 1e-9 * (1 + np.abs(grads))
    np.testing.assert_array_equal(base[clear] > 0, scaled[clear] > 0)
    np.testing.assert_allclose(scaled, lam * base, rtol=1e-9, atol=1e-12 * lam)


def test_grad_bound_needs_heb():
    with pytest.raises(NotApplicableError):
        lemma1_check(make_problem("simplex_control", 3), [[1 / 3] * 3])


# --- per-step contraction --------------------------------------------------


def test_contraction_run_example():
    p = make_problem("grad_below")
    tr = fw_solve(p, SolverConfig("I", max_iters=200))
    assert lemma2_check(tr, 1.0, 1.0, 0.5).violations == 0


def test_contraction_zero_trace():
    tr = synthetic_trace(np.zeros(20))
    assert lemma2_check(tr, 1.0, 1.0, 0.0).violations == 0


def test_contraction_flags_stagnation():
    # factor = max(1/2, 1 - 1*4/8) = 1/2 < 1, so every flat step violates
    tr = synthetic_trace(np.ones(11), grad_norm=4.0)
    rep = lemma2_check(tr, 1.0, 1.0, 0.0)
    assert rep.violations == 10 and rep.first_violation_t == 1


def test_contraction_needs_f_star():
    with pytest.raises(NotApplicableError):
        lemma2_check(synthetic_trace(np.ones(3)), 1.0, 1.0, None)


# --- envelope --------------------------------------------------------------


def test_envelope_sc_interior():
    p = make_problem("sc_interior")
    tc = theorem_constants(0.5, SQ2, 1.0, 1.0, 2.0)
    for rule in ("I", "II"):
        tr = fw_solve(p, SolverConfig(rule, max_iters=10_000))
        assert envelope_check(tr, tc, 0.5).violations == 0


def test_envelope_linear_branch_grad_below():
    p = make_problem("grad_below")
    tc = linear_branch_constants(1.0, 1.0, 1.0)
    tr = fw_solve(p, SolverConfig("I", max_iters=200))
    rep = envelope_check(tr, tc, 1.0)
    assert rep.violations == 0 and rep.params["rho"] == 0.875


def test_envelope_flags_slow_trace():
    tc = theorem_constants(0.5, SQ2, 1.0, 1.0, 2.0)
    h = np.full(100, 1.0)
    rep = envelope_check(synthetic_trace(h), tc, 0.5)
    assert rep.violations > 0


def test_envelope_on_every_applicable_canned_problem():
    for kind in CANNED_KINDS:
        p = make_problem(kind, 3)
        if p.alpha <= 0:
            continue
        heb = p.heb
        if heb is not None:
            tc, theta = theorem_constants(heb.theta, heb.c, p.alpha, p.L_f, p.D), heb.theta
        else:
            tc, theta = linear_branch_constants(p.alpha, 1 / p.ground_truth.grad_min, p.L_f), 1.0
        for rule in ("I", "II"):
            tr = fw_solve(p, SolverConfig(rule, max_iters=5000))
            assert envelope_check(tr, tc, theta).violations == 0, (kind, rule)


# --- trace checks ----------------------------------------------------------


def test_trace_checks_on_canned_runs():
    for kind in CANNED_KINDS:
        p = make_problem(kind, 3)
        for rule in ("I", "II"):
            tr = fw_solve(p, SolverConfig(rule, max_iters=3000))
            assert monotone_check(tr).passed
            assert smoothness_descent_check(tr, p.L_f).passed
            assert gap_certificate_check(tr, p.f_star).passed
            assert base_case_check(tr, p.L_f, p.D, p.f_star).passed


def test_monotone_check_flags_increase():
    assert monotone_check(synthetic_trace([1.0, 0.5, 0.6])).violations == 1


# --- fit_rate --------------------------------------------------------------


def test_fit_power_law():
    t = np.arange(1, 1001)
    fit = fit_rate((t, 5.0 / t**2))
    assert fit.model == "power"
    assert abs(fit.exponent_or_ratio + 2.0) <= 1e-6


def test_fit_geometric():
    t = np.arange(0, 201)
    fit = fit_rate((t, 3.0 * 0.9**t))
    assert fit.model == "geometric"
    assert abs(fit.exponent_or_ratio - 0.9) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.1, 10.0))
def test_fit_recovers_random_power_laws(a, scale):
    t = np.arange(1, 2001, dtype=float)
    fit = fit_rate((t, scale * t ** (-a)))
    assert abs(fit.power_exponent + a) <= 1e-6


def test_fit_needs_enough_points():
    t = np.arange(1, 10)
    with pytest.raises(TooFewPointsError):
        fit_rate((t, 1.0 / t))
    # everything under the noise floor
    with pytest.raises(TooFewPointsError):
        fit_rate((np.arange(1, 100), np.full(99, 1e-13)))


def test_fit_t_range():
    t = np.arange(1, 10_001)
    h = np.where(t < 100, 1.0 / t**3, 0.01 / t)
    fit = fit_rate((t, h), window=1.0, t_range=(100, 10_000))
    assert fit.t_first == 100 and abs(fit.power_exponent + 1) < 1e-9


# --- estimate_heb / distance -----------------------------------------------


def test_estimate_heb_sc_interior():
    est = estimate_heb(make_problem("sc_interior"), 10_000, 0)
    assert abs(est.theta_hat - 0.5) <= 0.02
    assert abs(est.c_hat / SQ2 - 1) <= 0.05


def test_estimate_heb_quartic():
    est = estimate_heb(make_problem("quartic_interior"), 10_000, 0)
    assert abs(est.theta_hat - 0.25) <= 0.02
    assert abs(est.c_hat - 1) <= 0.05


def test_estimate_heb_single_point_is_degenerate():
    with pytest.raises(InvalidInputError):
        estimate_heb(make_problem("sc_interior"), 1, 0)


def test_estimate_heb_needs_f_star():
    with pytest.raises(NotApplicableError):
        estimate_heb(Problem(ShiftedSqNorm([0.0, 0.0]), Ball(np.zeros(2), 1.0)))


def test_distance_examples():
    q = make_problem("quartic_interior")
    assert distance_to_optset(q, [0.3, 0.4]) == pytest.approx(0.5, rel=1e-15)
    assert distance_to_optset(q, [0.0, 0.0]) == 0.0
    assert distance_to_optset(make_problem("levelset_kkt"), [0.0, 0.0]) == 1.0
    with pytest.raises(NotApplicableError):
        distance_to_optset(Problem(ShiftedSqNorm([0.0, 0.0]), Ball(np.zeros(2), 1.0)), [0.0, 0.0])


def test_callable_optset():
    spec = HEBSpec(0.5, 1.0, lambda x: abs(float(x[0])), 0.0)
    assert spec.distance(np.array([-0.25, 3.0])) == 0.25
