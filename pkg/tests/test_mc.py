import math
import os

import numpy as np
import pytest
from scipy import stats

from conftest import all_states, naive_energies, naive_gibbs, naive_log_weights
from spinglass.disorder import DisorderSeed, gen_couplings, gen_patterns
from spinglass.errors import DomainError, PartialResultError
from spinglass.exact import ExactEngine, Observable, exact_log_partition, exact_overlap_statistics
from spinglass.mc import (
    ChainState,
    TemperingConfig,
    default_ladder,
    disorder_average,
    mc_overlap_statistics,
    metropolis_state_counts,
    metropolis_sweep,
    parallel_tempering_run,
    resolve_workers,
    single_flip_flux,
    thermo_integration,
)
from spinglass.model import SQRT2, Disorder, Hamiltonian, ModelParams
from spinglass.stats import batch_means, log_2cosh


def instance(N, M, seed=0, dist="gaussian", beta=0.5, B=0.0):
    s = DisorderSeed(seed)
    return (ModelParams(N, M, beta, B, pattern_dist=dist),
            Disorder(gen_patterns(s, dist, N, M), gen_couplings(s, N)))


def exact_gibbs(p, d, which="hopfield"):
    X = all_states(p.N)
    H = naive_energies(X, which, d.xi.entries, d.J.entries)
    return X, H, naive_gibbs(naive_log_weights(X, H, p.beta, p.B))


# -- ladders and configs --------------------------------------------------------

def test_default_ladder_shape():
    lad = default_ladder(1.5)
    assert lad.size == 33 and lad[0] == 0 and lad[-1] == 1.5
    assert np.all(np.diff(lad) > 0)
    assert default_ladder(0.0).tolist() == [0.0]
    assert default_ladder(1.0, n=9).size == 9
    with pytest.raises(DomainError):
        default_ladder(1.0, n=2)


def test_tempering_config_validation():
    with pytest.raises(DomainError):
        TemperingConfig((0.5, 0.2))
    with pytest.raises(DomainError):
        TemperingConfig(())


# -- plain Metropolis ------------------------------------------------------------

def test_infinite_temperature_accepts_every_proposal():
    p, d = instance(7, 3, beta=0.0)
    st = ChainState.create(DisorderSeed(1), d, 7)
    _, _, acc = metropolis_sweep(st, d, p, n_sweeps=20)
    assert acc == 140 and st.sweeps == 20


@pytest.mark.parametrize("beta,B", [(0.5, 0.0), (1.0, 0.3)])
def test_state_histogram_matches_gibbs(beta, B):
    p, d = instance(8, 16, seed=3, beta=beta, B=B)
    _, _, G = exact_gibbs(p, d)
    st = ChainState.create(DisorderSeed(3), d, 8)
    counts = metropolis_state_counts(st, d, p, n_sweeps=10**6)
    assert 0.5 * np.abs(counts / counts.sum() - G).sum() <= 0.01


def test_energy_trace_mean_matches_exact():
    p, d = instance(10, 20, seed=4, beta=0.8, B=0.2)
    _, H, G = exact_gibbs(p, d)
    st = ChainState.create(DisorderSeed(4), d, 10)
    metropolis_sweep(st, d, p, n_sweeps=2000)
    E, _, _ = metropolis_sweep(st, d, p, n_sweeps=100_000)
    mean, se = batch_means(E)
    assert abs(mean - G @ H) <= 3 * se


def test_sequential_updates_balance_flux():
    p, d = instance(6, 12, seed=5, beta=1.0, B=0.2)
    C = single_flip_flux(d, p, n_sweeps=200_000, seed=DisorderSeed(5))
    chi2, dof = 0.0, 0
    for a in range(1 << p.N):
        for i in range(p.N):
            b = a ^ (1 << i)
            if a < b:
                n_ab, n_ba = C[a, i], C[b, i]
                if n_ab + n_ba > 0:
                    chi2 += (n_ab - n_ba) ** 2 / (n_ab + n_ba)
                    dof += 1
    assert stats.chi2.sf(chi2, dof) > 1e-3


def test_flux_counts_follow_gibbs_ratio():
    p, d = instance(5, 10, seed=6, beta=0.7)
    X, H, G = exact_gibbs(p, d)
    n = 400_000
    C = single_flip_flux(d, p, n_sweeps=n, seed=DisorderSeed(6))
    # accepted a -> a^bit(i) per visit equals min(1, G(b)/G(a)) in expectation
    for a in (0, 7, 19):
        for i in range(p.N):
            b = a ^ (1 << i)
            expect = n * G[a] * min(1.0, G[b] / G[a])
            assert abs(C[a, i] - expect) <= 5 * math.sqrt(expect) + 1


# -- parallel tempering ------------------------------------------------------------

def test_single_point_ladder_is_plain_metropolis():
    p, d = instance(9, 6, seed=7, beta=0.6, B=0.1)
    seed = DisorderSeed(7)
    cfg = TemperingConfig((0.6,), burn_in=100, measure=300, respace=False)
    pt = parallel_tempering_run(cfg, d, p, seed=seed)
    st = ChainState.create(seed, d, 9)
    metropolis_sweep(st, d, p, n_sweeps=pt.burn_in)
    E, S, _ = metropolis_sweep(st, d, p, n_sweeps=300)
    assert np.allclose(pt.energies[:, 0], E, atol=1e-9)
    assert np.allclose(pt.overlaps[:, 0], S, atol=1e-9)


def test_identical_neighbours_always_swap():
    p, d = instance(8, 4, seed=8, beta=0.5)
    cfg = TemperingConfig((0.0, 0.5, 0.5), burn_in=50, measure=200, respace=False)
    pt = parallel_tempering_run(cfg, d, p)
    assert pt.swap_acceptance[1] == 1.0
    assert pt.warning is not None


def test_pt_second_moment_matches_exact():
    p, d = instance(12, 24, seed=9, beta=0.9)
    ex = exact_overlap_statistics(d, p, c=0.0).moments[2]
    cfg = TemperingConfig.for_beta(p.beta, n=9, measure=20_000)
    pt = parallel_tempering_run(cfg, d, p, observables=[Observable.overlap_pow(2)])
    e = pt.estimates["S^2"][-1]
    assert abs(e.mean - ex) <= 3 * e.std_error
    assert pt.audit <= 1e-7


def test_mc_overlap_statistics():
    p, d = instance(12, 24, seed=10, beta=0.8, dist="bernoulli")
    exact = exact_overlap_statistics(d, p, c=0.1, r_max=6)
    mc = mc_overlap_statistics(d, p, TemperingConfig.for_beta(p.beta, n=9, measure=20_000), c=0.1,
                               r_max=6)
    assert abs(mc.moments[2].mean - exact.moments[2]) <= 3 * mc.moments[2].std_error
    assert abs(mc.exp_moment.mean - exact.exp_moment) <= 3 * mc.exp_moment.std_error
    tail = [mc.tail[r].mean for r in range(7)]
    assert np.all(np.diff(np.minimum.accumulate(tail)) <= 0)
    assert all(a >= b for a, b in zip(tail, tail[1:]))


def test_infinite_temperature_second_moment_is_one():
    p, d = instance(16, 8, seed=11, beta=0.0, dist="bernoulli")
    mc = mc_overlap_statistics(d, p, TemperingConfig((0.0,), measure=20_000))
    assert abs(mc.moments[2].mean - 1.0) <= 3 * mc.moments[2].std_error


def test_infinite_temperature_metropolis_is_periodic():
    # the reason the overlap sampler draws uniform states directly at beta = 0, B = 0
    p, d = instance(6, 3, seed=11, beta=0.0, dist="bernoulli")
    st = ChainState.create(DisorderSeed(2), d, 6)
    x0 = st.x.spins.copy()
    metropolis_sweep(st, d, p, n_sweeps=1)
    assert np.array_equal(st.x.spins, -x0)


# -- thermodynamic integration ------------------------------------------------------

def test_ti_at_beta_zero_is_exact():
    p, d = instance(6, 3, beta=0.0, B=0.4)
    r = thermo_integration(d, p)
    assert r.estimate.mean == log_2cosh(0.4) and r.estimate.std_error == 0.0


def test_ti_grid_validation():
    p, d = instance(6, 3, beta=0.5)
    with pytest.raises(DomainError):
        thermo_integration(d, p, grid=[0.0, 0.3, 0.2, 0.5])
    with pytest.raises(DomainError):
        thermo_integration(d, p, grid=[0.1, 0.3, 0.5])


def test_ti_matches_exact_small_instance():
    p, d = instance(10, 20, seed=12, beta=0.7, B=0.2)
    r = thermo_integration(d, p, seed=DisorderSeed(12))
    exact = exact_log_partition(d, p).free_energy
    assert abs(r.estimate.mean - exact) <= max(3 * r.estimate.std_error, 1e-12)
    assert abs(r.estimate.mean - exact) <= 5e-3
    assert np.all(-r.pt.energies.mean(axis=0) >= 0)


def test_ti_for_sk_uses_scaled_beta():
    p, d = instance(10, 1, seed=13, beta=0.5)
    which = Hamiltonian.sk(SQRT2)
    r = thermo_integration(d, p, which, cfg=TemperingConfig.for_beta(0.5, n=17, measure=8000),
                           seed=DisorderSeed(13))
    exact = exact_log_partition(d, p, which).free_energy
    assert abs(r.estimate.mean - exact) <= 3 * r.estimate.std_error + 1e-3


# -- disorder averaging ----------------------------------------------------------

def _exact_hopfield(seed):
    p = ModelParams(8, 8, 0.5)
    return exact_log_partition(Disorder(gen_patterns(seed, "gaussian", 8, 8)), p).free_energy


def test_disorder_average_worker_invariance():
    a = disorder_average(_exact_hopfield, 24, master_seed=3, workers=1)
    b = disorder_average(_exact_hopfield, 24, master_seed=3, workers=8)
    assert a.estimate == b.estimate
    assert np.array_equal(a.records["value"], b.records["value"])


def test_forced_identical_streams_are_degenerate():
    avg = disorder_average(_exact_hopfield, 2, fixed_stream=0)
    assert avg.estimate.std_error == 0.0 and avg.estimate.degenerate


def test_failures_are_collected():
    def est(seed):
        if seed.stream_id in (1, 4):
            raise RuntimeError("boom")
        return 1.0

    with pytest.raises(PartialResultError) as info:
        disorder_average(est, 6, workers=3)
    assert info.value.failed == [1, 4]
    with pytest.raises(DomainError):
        disorder_average(est, 1)


def test_worker_resolution(monkeypatch):
    monkeypatch.setenv("SPINGLASS_WORKERS", "3")
    assert resolve_workers(5) == 5
    assert resolve_workers(None) == 3
    monkeypatch.delenv("SPINGLASS_WORKERS")
    assert resolve_workers(None) == (os.cpu_count() or 1)


def test_dict_estimators_and_jackknife_error():
    avg = disorder_average(lambda s: {"a": float(s.stream_id), "b": 2.0 * s.stream_id}, 10)
    assert avg.estimates["a"].mean == 4.5
    assert avg.estimates["b"].std_error == pytest.approx(2 * np.std(np.arange(10), ddof=1) / math.sqrt(10))


@pytest.mark.slow
def test_sk_disorder_average_mc_matches_exact():
    p = ModelParams(14, 1, 0.5)
    which = Hamiltonian.sk(SQRT2)
    cfg = TemperingConfig.for_beta(0.5, n=17, measure=2000)
    eng = ExactEngine()

    def both(seed):
        d = Disorder(None, gen_couplings(seed, 14))
        return {"mc": thermo_integration(d, p, which, cfg=cfg, seed=seed).estimate.mean,
                "exact": eng.run(d, p, which).free_energy}

    avg = disorder_average(both, 100, master_seed=21)
    mc, ex = avg.estimates["mc"], avg.estimates["exact"]
    assert abs(mc.mean - ex.mean) <= 3 * mc.std_error
