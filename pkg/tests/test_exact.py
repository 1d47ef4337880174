import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import all_states, binomial_law, naive_energies, naive_gibbs, naive_log_weights, naive_log_z
from spinglass.disorder import DisorderSeed, gen_couplings, gen_patterns
from spinglass.errors import CapacityError, ConfigurationError, DomainError
from spinglass.exact import (
    ExactEngine,
    Observable,
    closed_form_beta_zero,
    exact_diffrule_check,
    exact_gibbs_expectation,
    exact_interpolation_derivative,
    exact_log_partition,
    exact_overlap_statistics,
    gray_visit_order,
)
from spinglass.model import SQRT2, Disorder, Hamiltonian, ModelParams, PatternMatrix


def instance(N, M, seed=0, dist="gaussian", beta=0.5, B=0.0):
    s = DisorderSeed(seed)
    return (ModelParams(N, M, beta, B, pattern_dist=dist),
            Disorder(gen_patterns(s, dist, N, M), gen_couplings(s, N)))


def oracle_log_z(p, d, which):
    X = all_states(p.N)
    H = naive_energies(X, which.kind, d.xi.entries, d.J.entries, which.t)
    return naive_log_z(naive_log_weights(X, H, p.beta * which.beta_scale, p.B))


# -- enumeration order --------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 5, 11, 16])
def test_gray_order_visits_each_state_once(N):
    order = gray_visit_order(N)
    seen = np.zeros(1 << N, dtype=bool)
    seen[order.astype(np.int64)] = True
    assert seen.all() and order.size == 1 << N
    steps = np.bitwise_xor(order[1:], order[:-1]).astype(np.int64)
    assert np.all((steps & (steps - 1)) == 0)


def test_checkpoints_match_from_scratch_energies():
    p, d = instance(16, 10, seed=3, beta=1.0, B=0.4)
    cps = np.sort(np.random.default_rng(0).choice(1 << 16, 1000, replace=False))
    res = ExactEngine().run(d, p, Hamiltonian.interpolated(0.35), checkpoints=cps)
    bits, w = res.checkpoints
    X = np.where((bits.astype(np.int64)[:, None] >> np.arange(16)) & 1, 1.0, -1.0)
    H = naive_energies(X, "interpolated", d.xi.entries, d.J.entries, 0.35)
    assert np.max(np.abs(w - naive_log_weights(X, H, 1.0, 0.4))) <= 1e-9


# -- log Z against the naive oracle -------------------------------------------

@pytest.mark.parametrize("which", [Hamiltonian.hopfield(), Hamiltonian.sk(SQRT2), Hamiltonian.sk(),
                                   Hamiltonian.interpolated(0.5), Hamiltonian.leave_one_out()],
                         ids=lambda w: w.label())
@pytest.mark.parametrize("dist", ["bernoulli", "gaussian", "heavytail"])
def test_log_z_matches_naive(which, dist):
    p, d = instance(10, 20, seed=7, dist=dist, beta=0.5, B=0.3)
    assert exact_log_partition(d, p, which).log_Z == pytest.approx(oracle_log_z(p, d, which), abs=1e-10)


def test_documented_seed_instance():
    p, d = instance(12, 24, seed=7, dist="bernoulli", beta=0.5, B=0.3)
    assert exact_log_partition(d, p).log_Z == pytest.approx(oracle_log_z(p, d, Hamiltonian()), abs=1e-10)


def test_two_pass_agrees_with_streaming():
    p, d = instance(12, 30, seed=1, beta=2.0, B=0.1)
    a = ExactEngine().run(d, p, Hamiltonian()).log_Z
    b = ExactEngine(two_pass=True).run(d, p, Hamiltonian()).log_Z
    assert a == pytest.approx(b, abs=1e-11)


def test_result_invariants():
    p, d = instance(9, 9, seed=2, beta=1.5, B=-0.2)
    r = exact_log_partition(d, p)
    assert abs(r.free_energy * r.N - r.log_Z) <= 2 * math.ulp(r.log_Z)
    assert r.log_Z >= r.max_exponent
    assert r.wall_time >= 0


def test_capacity_error_names_cap():
    p, d = instance(12, 2)
    with pytest.raises(CapacityError, match="10"):
        ExactEngine(cap=10).run(d, p, Hamiltonian())


# -- closed forms and symmetries ----------------------------------------------

@given(st.integers(0, 1000), st.floats(-3, 3), st.sampled_from(["hopfield", "sk", "interpolated"]))
def test_beta_zero_closed_form(seed, B, kind):
    p, d = instance(7, 5, seed=seed, beta=0.0, B=B)
    which = Hamiltonian(kind, t=0.5)
    assert exact_log_partition(d, p, which).free_energy == pytest.approx(closed_form_beta_zero(p), abs=1e-12)


@given(st.integers(1, 40), st.floats(0, 3), st.floats(-2, 2))
def test_single_site_bernoulli_closed_form(M, beta, B):
    p = ModelParams(1, M, beta, B)
    d = Disorder(gen_patterns(DisorderSeed(M), "bernoulli", 1, M))
    expect = beta * math.sqrt(M) + math.log(2 * math.cosh(B))
    assert exact_log_partition(d, p).free_energy == pytest.approx(expect, abs=1e-12)


@given(st.integers(0, 1000), st.floats(0.05, 2), st.floats(0.05, 2))
def test_field_reversal_symmetry(seed, beta, B):
    p, d = instance(8, 6, seed=seed, beta=beta, B=B)
    f = exact_log_partition(d, p).free_energy
    assert exact_log_partition(d, p.replace(B=-B)).free_energy == pytest.approx(f, abs=1e-12)


def test_monotone_and_convex_in_beta_and_field():
    p, d = instance(9, 18, seed=4)
    betas = np.linspace(0, 2, 21)
    F = np.array([exact_log_partition(d, p.replace(beta=b)).free_energy for b in betas])
    assert np.all(np.diff(F) >= 0)
    assert np.all(np.diff(F, 2) >= -1e-9)
    fields = np.linspace(-2, 2, 21)
    G = np.array([exact_log_partition(d, p.replace(B=b)).free_energy for b in fields])
    assert np.all(np.diff(G, 2) >= -1e-9)
    sk = [exact_log_partition(d, p.replace(beta=b), Hamiltonian.sk()).free_energy for b in betas]
    assert np.all(np.diff(sk, 2) >= -1e-9)


# -- Gibbs expectations -------------------------------------------------------

def test_gibbs_expectation_basics():
    p, d = instance(10, 8, seed=5, beta=0.8, B=0.0)
    assert exact_gibbs_expectation(d, p, Hamiltonian(), Observable.spin(0)).value == pytest.approx(0, abs=1e-12)
    assert exact_gibbs_expectation(d, p, Hamiltonian(), Observable.one()).value == pytest.approx(1, abs=1e-12)


def test_gibbs_expectation_matches_naive():
    p, d = instance(10, 20, seed=6, dist="bernoulli", beta=0.7, B=0.2)
    X = all_states(10)
    G = naive_gibbs(naive_log_weights(X, naive_energies(X, "hopfield", d.xi.entries), p.beta, p.B))
    S = X @ d.xi.entries[0] / math.sqrt(10)
    H = naive_energies(X, "hopfield", d.xi.entries)
    res = ExactEngine().run(d, p, Hamiltonian(), [
        Observable.spin_pair(0, 1), Observable.overlap_pow(2), Observable.overlap_pow(1, (0, 1, 4)),
        Observable.energy(), Observable.exp_overlap_sq(0.1), Observable.overlap_sq_gt(3)])
    ex = res.expectations
    assert ex["x0x1"] == pytest.approx(G @ (X[:, 0] * X[:, 1]), abs=1e-10)
    assert ex["S^2"] == pytest.approx(G @ S**2, abs=1e-10)
    assert ex["x0x1x4S^1"] == pytest.approx(G @ (X[:, 0] * X[:, 1] * X[:, 4] * S), abs=1e-10)
    assert ex["H"] == pytest.approx(G @ H, abs=1e-9)
    assert ex[Observable.exp_overlap_sq(0.1).tag] == pytest.approx(G @ np.exp(0.1 * S**2), abs=1e-10)
    assert ex["1[S^2>3]"] == pytest.approx(G @ (S**2 > 3 + 1e-12), abs=1e-10)


def test_unknown_form_and_bad_site():
    p, d = instance(6, 3)
    with pytest.raises(ConfigurationError):
        ExactEngine().run(d, p, Hamiltonian(), [Observable.quad("missing")])
    with pytest.raises(ConfigurationError):
        ExactEngine().run(d, p, Hamiltonian(), [Observable.spin(6)])


# -- overlap statistics -------------------------------------------------------

@given(st.integers(0, 500), st.floats(0, 3), st.floats(0, 0.4))
def test_overlap_statistics_invariants(seed, beta, c):
    p, d = instance(9, 12, seed=seed, dist="gaussian", beta=beta)
    o = exact_overlap_statistics(d, p, c=c)
    tail = np.array([o.tail[r] for r in sorted(o.tail)])
    assert tail[0] <= 1 and np.all(tail >= 0) and np.all(np.diff(tail) <= 1e-15)
    assert tail[-1] == pytest.approx(0.0, abs=1e-15)
    m = [o.moments[k] ** (1 / k) for k in (1, 2, 3, 4)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(m, m[1:]))
    assert o.exp_moment >= 1.0 - 1e-12


@pytest.mark.parametrize("N", [8, 12, 16])
def test_infinite_temperature_overlap_is_a_binomial_walk(N):
    p = ModelParams(N, 4, 0.0)
    d = Disorder(gen_patterns(DisorderSeed(N), "bernoulli", N, 4))
    o = exact_overlap_statistics(d, p, c=0.2, r_max=8)
    dots, prob = binomial_law(N)
    for r in range(9):
        assert o.tail[r] == pytest.approx(prob[dots**2 > r * N].sum(), abs=1e-12)
    assert o.exp_moment == pytest.approx(prob @ np.exp(0.2 * dots**2 / N), abs=1e-12)
    assert o.moments[2] == pytest.approx(1.0, abs=1e-12)
    assert exact_overlap_statistics(d, p, c=0.0).exp_moment == pytest.approx(1.0, abs=1e-12)


def test_negative_c_rejected():
    p, d = instance(5, 3)
    with pytest.raises(DomainError):
        exact_overlap_statistics(d, p, c=-0.1)


# -- derivative identities -------------------------------------------------------

def test_interpolation_derivative_matches_difference():
    p, d = instance(8, 16, seed=11, beta=0.5, B=0.2)
    a, fd = exact_interpolation_derivative(d, p, 0.5)
    assert abs(a - fd) <= 1e-6


def test_interpolation_derivative_is_second_order():
    p, d = instance(8, 16, seed=11, beta=0.5, B=0.2)
    a, f1 = exact_interpolation_derivative(d, p, 0.5, h=0.04)
    _, f2 = exact_interpolation_derivative(d, p, 0.5, h=0.02)
    ratio = abs(f1 - a) / abs(f2 - a)
    assert 3.5 < ratio < 4.5


def test_interpolation_derivative_domain_and_beta_zero():
    p, d = instance(8, 16, seed=1, beta=0.0)
    a, fd = exact_interpolation_derivative(d, p, 0.3)
    assert abs(a) <= 1e-10 and abs(fd) <= 1e-10
    with pytest.raises(DomainError):
        exact_interpolation_derivative(d, p, 5e-5)


@pytest.mark.parametrize("g,i", [("x1x2", 0), ("x1x2", 5), ("xiS", 3)])
@pytest.mark.parametrize("t", [1.0, 0.6])
def test_pattern_derivative_rule(g, i, t):
    p, d = instance(8, 16, seed=12, beta=0.5, B=0.1)
    a, fd = exact_diffrule_check(d, p, i, g, t=t)
    assert abs(a - fd) <= 1e-6


def test_pattern_derivative_rule_is_second_order():
    p, d = instance(8, 16, seed=12, beta=0.5)
    a, f1 = exact_diffrule_check(d, p, 2, "x1x2", h=0.2)
    _, f2 = exact_diffrule_check(d, p, 2, "x1x2", h=0.1)
    ratio = abs(f1 - a) / abs(f2 - a)
    assert 3.5 < ratio < 4.5


def test_pattern_derivative_rule_at_beta_zero():
    p, d = instance(8, 16, seed=12, beta=0.0)
    a, fd = exact_diffrule_check(d, p, 0, "x1x2")
    assert abs(a) <= 1e-10 and abs(fd) <= 1e-10
    a, fd = exact_diffrule_check(d, p, 3, "xiS")
    assert a == pytest.approx(1 / math.sqrt(8), abs=1e-12)
    assert fd == pytest.approx(1 / math.sqrt(8), abs=1e-9)


def test_scaled_pattern_path_is_smooth():
    from spinglass.disorder import gen_scaled_first_pattern

    p, d = instance(8, 16, seed=2)
    vals = []
    for s in np.linspace(0, 1, 5):
        ds = Disorder(gen_scaled_first_pattern(d.xi, s), d.J)
        vals.append(exact_gibbs_expectation(ds, p, Hamiltonian(), Observable.spin_pair()).value)
    assert all(abs(v) <= 1 for v in vals)
    assert vals[-1] == exact_gibbs_expectation(d, p, Hamiltonian(), Observable.spin_pair()).value
    assert isinstance(d.xi, PatternMatrix)
