"""Monte Carlo estimation beyond the enumeration cap.

Two samplers share one acceptance rule, min(1, exp(-beta dH + B d(sum x))),
with sites proposed in a fixed sequential scan:

* :func:`metropolis_sweep` runs on :class:`~spinglass.model.OverlapCache`
  (pattern overlaps, O(M) per proposal).
* :func:`parallel_tempering_run` keeps the local field of the Hamiltonian's
  effective coupling matrix, O(1) per proposal and O(N) per accepted flip.

Randomness for ladder position ``k`` comes from the ``mc_chain(k)`` stream of
the realization's seed and swap decisions from ``mc_swap``, so a run is a pure
function of (seed, configuration).
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from .disorder import DisorderSeed
from .errors import ConfigurationError, DomainError, PartialResultError
from .exact import _ABSPOW, _EXP_SQ, _ONE, _POW, _QUAD, _SQ_GT, Observable, OverlapStatistics
from .model import (
    Disorder,
    Hamiltonian,
    ModelParams,
    OverlapCache,
    SpinConfiguration,
    build_cache,
    metropolis_flips,
    quadratic_form,
)
from .stats import (
    EstimateWithError,
    batch_means,
    integrated_autocorr_time,
    jackknife,
    log_2cosh,
    simpson_weights,
)

SWAP_WINDOW = (0.2, 0.4)
SWAP_WARN = (0.05, 0.95)
AUDIT_TOLERANCE = 1e-7


def default_ladder(beta: float, n: int = 33, n_linear: int = 9, linear_frac: float = 0.1) -> np.ndarray:
    """``n`` nodes from 0 to ``beta``: linear up to ``linear_frac*beta``, geometric after."""
    if beta <= 0:
        return np.zeros(1)
    if n < 3 or n_linear < 2:
        raise DomainError("ladder needs n >= 3 and n_linear >= 2")
    if n_linear >= n:
        n_linear = max(2, n // 3)
    b0 = beta * linear_frac
    lin = np.linspace(0.0, b0, n_linear)
    geo = np.geomspace(b0, beta, n - n_linear + 1)[1:]
    out = np.concatenate([lin, geo])
    out[-1] = beta
    return out


@dataclass(frozen=True)
class TemperingConfig:
    ladder: tuple
    sweeps_per_exchange: int = 1
    burn_in: int = 500
    max_burn_in: int = 20000
    measure: int = 4000
    n_batches: int = 32
    respace: bool = True
    chunk: int = 1024

    def __post_init__(self):
        lad = tuple(float(b) for b in np.atleast_1d(self.ladder))
        object.__setattr__(self, "ladder", lad)
        if len(lad) == 0 or any(b < 0 for b in lad):
            raise DomainError("ladder must be non-empty and non-negative")
        if any(b1 < b0 for b0, b1 in zip(lad, lad[1:])):
            raise DomainError("ladder must be non-decreasing")
        if self.sweeps_per_exchange < 1 or self.measure < 2 or self.burn_in < 0:
            raise ConfigurationError("invalid sweep counts")

    @classmethod
    def for_beta(cls, beta: float, n: int = 33, **kw) -> "TemperingConfig":
        return cls(tuple(default_ladder(beta, n)), **kw)


# -- plain Metropolis on the overlap cache ----------------------------------

@dataclass(eq=False)
class ChainState:
    x: SpinConfiguration
    cache: OverlapCache
    rng: np.random.Generator
    beta_index: int = 0
    sweeps: int = 0

    @classmethod
    def create(cls, seed: DisorderSeed, disorder: Disorder, N: int, chain_index: int = 0) -> "ChainState":
        rng = seed.with_role("mc_chain", chain_index).generator()
        x = SpinConfiguration.random(rng, N)
        return cls(x, build_cache(x, disorder), rng, chain_index)


def metropolis_sweep(state: ChainState, disorder: Disorder, p: ModelParams,
                     which: Hamiltonian = Hamiltonian(), n_sweeps: int = 1):
    """Advance ``state`` by ``n_sweeps`` sequential-scan sweeps (in place).

    Returns ``(energies, overlaps, accepted)`` traces, the overlap being S.
    """
    U = state.rng.random((n_sweeps, p.N))
    E, m0, acc = metropolis_flips(state.x, state.cache, which, disorder, p, U)
    state.sweeps += n_sweeps
    return E, m0 / math.sqrt(p.N), acc


def metropolis_state_counts(state: ChainState, disorder: Disorder, p: ModelParams,
                            which: Hamiltonian = Hamiltonian(), n_sweeps: int = 10**6,
                            chunk: int = 1 << 16) -> np.ndarray:
    """Visit counts per packed state, one sample after every sweep (N <= 20)."""
    if p.N > 20:
        raise DomainError("state histograms are limited to N <= 20")
    counts = np.zeros(1 << p.N, dtype=np.int64)
    done = 0
    while done < n_sweeps:
        n = min(chunk, n_sweeps - done)
        U = state.rng.random((n, p.N))
        codes = np.empty(n, dtype=np.int64)
        metropolis_flips(state.x, state.cache, which, disorder, p, U, codes)
        counts += np.bincount(codes, minlength=counts.size)
        done += n
    state.sweeps += n_sweeps
    return counts


# -- parallel tempering kernel ----------------------------------------------

@nb.njit(cache=True, nogil=True)
def _pt_chunk(X, F, m0, W, xi0, const, betas, B, perm, U, US, spe, offset, ex_count,
              E_out, S_out, X01_out, acc_flip, swap_att, swap_acc):
    R, N = X.shape
    n_sweeps = U.shape[0]
    has_xi = xi0.size > 0
    for s in range(n_sweeps):
        for k in range(R):
            r = perm[k]
            beta = betas[k]
            for i in range(N):
                xv = X[r, i]
                w = 4.0 * beta * xv * F[r, i] - 2.0 * B * xv
                if w >= 0.0 or U[s, k, i] < math.exp(w):
                    for j in range(N):
                        F[r, j] -= 2.0 * xv * W[j, i]
                    if has_xi:
                        m0[r] -= 2.0 * xv * xi0[i]
                    X[r, i] = -xv
                    acc_flip[k] += 1
        if (offset + s + 1) % spe == 0 and R > 1:
            for k in range(R - 1):
                ra = perm[k]
                rb = perm[k + 1]
                ea = const
                eb = const
                for j in range(N):
                    ea += X[ra, j] * F[ra, j]
                    eb += X[rb, j] * F[rb, j]
                swap_att[k] += 1
                lr = (betas[k + 1] - betas[k]) * (eb - ea)
                if lr >= 0.0 or US[ex_count, k] < math.exp(lr):
                    perm[k] = rb
                    perm[k + 1] = ra
                    swap_acc[k] += 1
            ex_count += 1
        for k in range(R):
            r = perm[k]
            e = const
            for j in range(N):
                e += X[r, j] * F[r, j]
            E_out[s, k] = e
            S_out[s, k] = m0[r]
            X01_out[s, k] = X[r, 0] * X[r, 1] if N > 1 else X[r, 0]
    return ex_count


@nb.njit(cache=True, nogil=True)
def _flux_counts(x, F, W, beta, B, U):
    """Accepted single-site transitions counted by (packed state before, site)."""
    N = x.size
    C = np.zeros((1 << N, N), dtype=np.int64)
    state = 0
    for i in range(N):
        if x[i] > 0:
            state |= 1 << i
    for s in range(U.shape[0]):
        for i in range(N):
            xv = x[i]
            w = 4.0 * beta * xv * F[i] - 2.0 * B * xv
            if w >= 0.0 or U[s, i] < math.exp(w):
                C[state, i] += 1
                for j in range(N):
                    F[j] -= 2.0 * xv * W[j, i]
                x[i] = -xv
                state ^= 1 << i
    return C


@dataclass
class PTResult:
    ladder: np.ndarray
    effective_betas: np.ndarray
    energies: np.ndarray          # (n_measure, R)
    overlaps: np.ndarray          # S, (n_measure, R)
    x01: np.ndarray               # x_0 x_1, (n_measure, R)
    estimates: dict               # tag -> list[EstimateWithError] per ladder point
    swap_acceptance: np.ndarray
    flip_acceptance: np.ndarray
    burn_in: int
    tau: float
    respaced: bool
    audit: float
    n_batches: int
    warning: str | None = None
    final_states: np.ndarray | None = None


class _Chains:
    """Replica set for one realization, driven chunk by chunk."""

    def __init__(self, cfg: TemperingConfig, disorder: Disorder, p: ModelParams,
                 which: Hamiltonian, seed: DisorderSeed, ladder):
        self.p = p
        self.cfg = cfg
        self.form = quadratic_form(which, disorder, p)
        self.W = np.ascontiguousarray(self.form.W)
        self.xi0 = (np.ascontiguousarray(disorder.xi.entries[0]) if disorder.xi is not None
                    else np.zeros(0))
        self.seed = seed
        self.scale = which.beta_scale
        self.set_ladder(ladder)
        R = len(ladder)
        self.gens = [seed.with_role("mc_chain", k).generator() for k in range(R)]
        self.swap_gen = seed.with_role("mc_swap").generator()
        X = np.empty((R, p.N))
        for k, g in enumerate(self.gens):
            X[k] = SpinConfiguration.random(g, p.N).spins
        self.X = X
        self.F = X @ self.W.T
        self.m0 = X @ self.xi0 if self.xi0.size else np.zeros(R)
        self.perm = np.arange(R, dtype=np.int64)
        self.sweeps = 0
        self.ex_count = 0
        self.reset_counters()

    def set_ladder(self, ladder):
        self.ladder = np.asarray(ladder, dtype=np.float64)
        self.betas = self.ladder * self.scale

    def reset_counters(self):
        R = self.ladder.size
        self.acc_flip = np.zeros(R, dtype=np.int64)
        self.swap_att = np.zeros(max(R - 1, 1), dtype=np.int64)
        self.swap_acc = np.zeros(max(R - 1, 1), dtype=np.int64)
        self.counted_sweeps = 0

    def run(self, n: int):
        """Run ``n`` sweeps; returns (E, S_unscaled, x01) traces."""
        R, N = self.X.shape
        spe = self.cfg.sweeps_per_exchange
        Es, Ss, Xs = [], [], []
        done = 0
        while done < n:
            c = min(self.cfg.chunk, n - done)
            U = np.empty((c, R, N))
            for k, g in enumerate(self.gens):
                U[:, k, :] = g.random((c, N))
            n_ex = (self.sweeps + c) // spe - self.sweeps // spe
            US = self.swap_gen.random((n_ex, R - 1)) if R > 1 else np.zeros((n_ex, 1))
            E = np.empty((c, R))
            S = np.empty((c, R))
            X01 = np.empty((c, R))
            _pt_chunk(self.X, self.F, self.m0, self.W, self.xi0, self.form.const, self.betas,
                      self.p.B, self.perm, U, np.ascontiguousarray(US), spe, self.sweeps, 0,
                      E, S, X01, self.acc_flip, self.swap_att, self.swap_acc)
            self.sweeps += c
            self.counted_sweeps += c
            done += c
            Es.append(E)
            Ss.append(S)
            Xs.append(X01)
        return np.concatenate(Es), np.concatenate(Ss), np.concatenate(Xs)

    def audit(self) -> float:
        F = self.X @ self.W.T
        worst = float(np.max(np.abs(F - self.F)))
        if self.xi0.size:
            worst = max(worst, float(np.max(np.abs(self.X @ self.xi0 - self.m0))))
        return worst

    def swap_rates(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            r = self.swap_acc / np.maximum(self.swap_att, 1)
        return r if self.ladder.size > 1 else np.zeros(0)


def _respaced(ladder: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Equal thermodynamic-length spacing: nodes equalize sum of beta-step * sigma(E)."""
    sigma = np.maximum(E.std(axis=0), 1e-12)
    seg = np.diff(ladder) * 0.5 * (sigma[1:] + sigma[:-1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] <= 0:
        return ladder
    targets = np.linspace(0.0, cum[-1], ladder.size)
    new = np.interp(targets, cum, ladder)
    new[0], new[-1] = ladder[0], ladder[-1]
    if np.any(np.diff(new) <= 0):
        return ladder
    return new


def _trace_value(o: Observable, E, Sraw, X01, N):
    S = Sraw / math.sqrt(N)
    v = np.ones_like(E)
    if o.spins:
        if tuple(o.spins) != (0, 1):
            raise ConfigurationError(f"observable {o.tag} is not recorded by the sampler")
        v = X01.copy()
    if o.kind == _ONE:
        return v
    if o.kind == _QUAD:
        if o.form != "H":
            raise ConfigurationError("only the energy is recorded by the sampler")
        return v * E
    if o.kind == _POW:
        return v * S ** o.param
    if o.kind == _ABSPOW:
        return v * np.abs(S) ** o.param
    if o.kind == _SQ_GT:
        return v * (Sraw * Sraw > o.param * N)
    if o.kind == _EXP_SQ:
        return v * np.exp(o.param * S * S)
    raise ConfigurationError(f"unsupported observable {o.tag}")


def _estimate(series, n_batches) -> EstimateWithError:
    mean, se = batch_means(series, n_batches)
    return EstimateWithError.of(mean, se, len(series), "batch_means")


def parallel_tempering_run(cfg: TemperingConfig, disorder: Disorder, p: ModelParams,
                           which: Hamiltonian = Hamiltonian(), observables=(),
                           seed: DisorderSeed | None = None) -> PTResult:
    """Replica-exchange Metropolis across ``cfg.ladder``.

    Ladder values are unscaled; each node runs at beta times the
    Hamiltonian's own scale.

    Burn-in starts at ``cfg.burn_in`` sweeps and doubles until it is at least
    10x the largest integrated autocorrelation time of the energy (Sokal
    window, c = 5, estimated on the second half of the burn-in), capped at
    ``cfg.max_burn_in``. If ``cfg.respace`` is set and a swap acceptance rate
    leaves [0.2, 0.4], interior nodes are moved once to equal thermodynamic
    length and burn-in is repeated. Errors are batch means.
    """
    seed = seed or DisorderSeed(0)
    ch = _Chains(cfg, disorder, p, which, seed, cfg.ladder)

    def burn():
        done, target, tau = 0, max(cfg.burn_in, 1), 0.5
        E_all = []
        while done < target:
            E, _, _ = ch.run(target - done)
            E_all.append(E)
            done = target
            Eb = np.concatenate(E_all)
            tail = Eb[Eb.shape[0] // 2:]
            tau = max(integrated_autocorr_time(tail[:, k]) for k in range(tail.shape[1])) if tail.shape[0] > 4 else 0.5
            if 10 * tau > done and done < cfg.max_burn_in:
                target = min(2 * done, cfg.max_burn_in)
        return done, tau, np.concatenate(E_all)

    burned, tau, Eb = burn()
    respaced = False
    rates = ch.swap_rates()
    if cfg.respace and rates.size and (np.any(rates < SWAP_WINDOW[0]) or np.any(rates > SWAP_WINDOW[1])):
        new = _respaced(ch.ladder, Eb[Eb.shape[0] // 2:])
        if not np.array_equal(new, ch.ladder):
            ch.set_ladder(new)
            respaced = True
            b2, tau, _ = burn()
            burned += b2
    ch.reset_counters()
    E, Sraw, X01 = ch.run(cfg.measure)
    S = Sraw / math.sqrt(p.N)
    R = ch.ladder.size
    estimates = {"H": [_estimate(E[:, k], cfg.n_batches) for k in range(R)]}
    for o in observables:
        vals = _trace_value(o, E, Sraw, X01, p.N)
        estimates[o.tag] = [_estimate(vals[:, k], cfg.n_batches) for k in range(R)]
    rates = ch.swap_rates()
    warning = None
    if rates.size and (np.any(rates < SWAP_WARN[0]) or np.any(rates > SWAP_WARN[1])):
        warning = "swap acceptance outside [0.05, 0.95]; ladder respacing advised"
    audit = ch.audit()
    if audit > AUDIT_TOLERANCE:
        warnings.warn(f"cache audit discrepancy {audit:.3g} exceeds {AUDIT_TOLERANCE}")
    return PTResult(ch.ladder.copy(), ch.betas.copy(), E, S, X01, estimates, rates,
                    ch.acc_flip / (ch.counted_sweeps * p.N), burned, tau, respaced, audit,
                    cfg.n_batches, warning, ch.X[ch.perm].copy())


# -- free energy ------------------------------------------------------------

@dataclass
class TIResult:
    estimate: EstimateWithError
    statistical_error: float
    truncation_error: float
    nodes: np.ndarray
    weights: np.ndarray
    pt: PTResult | None


def thermo_integration(disorder: Disorder, p: ModelParams, which: Hamiltonian = Hamiltonian(),
                       grid=None, cfg: TemperingConfig | None = None,
                       seed: DisorderSeed | None = None) -> TIResult:
    """``F(beta) = log(2 cosh B) + int_0^beta -<H>/N dbeta'`` from one PT run.

    The grid (unscaled betas, starting at 0 and ending at
    ``p.beta``) is the PT ladder. Composite Simpson weights turn the
    per-sweep node energies into one integral trace, whose batch-means error
    accounts for correlations between nodes. The truncation error is
    estimated as |I - I_half| / 15 against the every-other-node grid and
    added in quadrature.
    """
    anchor = log_2cosh(p.B)
    if p.beta == 0:
        est = EstimateWithError(anchor, 0.0, 1, "thermo_integration", degenerate=True)
        return TIResult(est, 0.0, 0.0, np.zeros(1), np.zeros(1), None)
    if cfg is None:
        cfg = TemperingConfig.for_beta(p.beta)
    nodes = np.asarray(grid if grid is not None else cfg.ladder, dtype=np.float64)
    if nodes.size < 3 or np.any(np.diff(nodes) <= 0):
        raise DomainError("integration grid must be strictly increasing with at least 3 nodes")
    if nodes[0] != 0.0 or not math.isclose(nodes[-1], p.beta, rel_tol=1e-12):
        raise DomainError("integration grid must cover [0, beta]")
    cfg = replace(cfg, ladder=tuple(nodes))
    pt = parallel_tempering_run(cfg, disorder, p, which, seed=seed)
    eff = pt.effective_betas
    w = simpson_weights(eff)
    integrand = -pt.energies / p.N
    trace = integrand @ w
    mean, se = batch_means(trace, cfg.n_batches)
    half = eff[::2] if eff.size % 2 == 1 else np.concatenate([eff[:-1:2], eff[-1:]])
    idx = [int(np.searchsorted(eff, b)) for b in half]
    wh = simpson_weights(half)
    trunc = abs(mean - float(integrand[:, idx].mean(axis=0) @ wh)) / 15.0
    total = math.hypot(se, trunc)
    est = EstimateWithError.of(anchor + mean, total, len(trace), "thermo_integration")
    return TIResult(est, se, trunc, pt.ladder, w, pt)


def thermo_integration_free_energy(disorder: Disorder, p: ModelParams,
                                   which: Hamiltonian = Hamiltonian(), grid=None,
                                   cfg: TemperingConfig | None = None,
                                   seed: DisorderSeed | None = None) -> EstimateWithError:
    return thermo_integration(disorder, p, which, grid, cfg, seed).estimate


@dataclass
class MCOverlapStatistics:
    stats: OverlapStatistics
    moments: dict
    tail: dict
    exp_moment: EstimateWithError


def mc_overlap_statistics(disorder: Disorder, p: ModelParams, cfg: TemperingConfig | None = None,
                          c: float = 0.0, r_max: int | None = None,
                          which: Hamiltonian = Hamiltonian(),
                          seed: DisorderSeed | None = None) -> MCOverlapStatistics:
    """Overlap moments, tail and exponential moment sampled at the target beta."""
    cfg = cfg or TemperingConfig.for_beta(p.beta, n=9 if p.beta > 0 else 1)
    if r_max is None:
        r_max = int(math.ceil(float(np.sum(disorder.xi.entries[0] ** 2))))
    obs = [Observable.overlap_abs_pow(d) for d in (1, 2, 3, 4)]
    obs += [Observable.overlap_sq_gt(r) for r in range(r_max + 1)]
    obs.append(Observable.exp_overlap_sq(c))
    if p.beta * which.beta_scale == 0.0 and p.B == 0.0:
        # every Metropolis proposal is accepted here, so a sweep maps x to -x
        # and S^2 never moves; the Gibbs measure is uniform, so draw it directly
        rng = (seed or DisorderSeed(0)).with_role("mc_chain").generator()
        X = (2 * rng.integers(0, 2, size=(cfg.measure, p.N), dtype=np.int8) - 1).astype(np.float64)
        Sraw = (X @ disorder.xi.entries[0])[:, None]
        E = np.zeros_like(Sraw)
        X01 = (X[:, 0] * X[:, 1] if p.N > 1 else X[:, 0])[:, None]
        top = {o.tag: _estimate(_trace_value(o, E, Sraw, X01, p.N)[:, 0], cfg.n_batches) for o in obs}
    else:
        pt = parallel_tempering_run(cfg, disorder, p, which, obs, seed)
        top = {o.tag: pt.estimates[o.tag][-1] for o in obs}
    moments = {d: top[obs[d - 1].tag] for d in (1, 2, 3, 4)}
    tail = {r: top[obs[4 + r].tag] for r in range(r_max + 1)}
    expm = top[obs[-1].tag]
    stats = OverlapStatistics({d: e.mean for d, e in moments.items()},
                              {r: e.mean for r, e in tail.items()}, expm.mean, c)
    return MCOverlapStatistics(stats, moments, tail, expm)


def single_flip_flux(disorder: Disorder, p: ModelParams, which: Hamiltonian = Hamiltonian(),
                     n_sweeps: int = 10000, seed: DisorderSeed | None = None) -> np.ndarray:
    """Accepted-flip counts ``C[state, site]`` from one sequential-scan chain (N <= 16)."""
    if p.N > 16:
        raise DomainError("flux counting is limited to N <= 16")
    seed = seed or DisorderSeed(0)
    form = quadratic_form(which, disorder, p)
    rng = seed.with_role("mc_chain").generator()
    x = SpinConfiguration.random(rng, p.N).spins.astype(np.float64)
    F = form.W @ x
    U = rng.random((n_sweeps, p.N))
    return _flux_counts(x, F, np.ascontiguousarray(form.W), p.beta * which.beta_scale, p.B, U)


# -- disorder averaging -----------------------------------------------------

@dataclass
class DisorderAverage:
    estimates: dict
    records: dict
    n_realizations: int
    failed: list = field(default_factory=list)

    @property
    def estimate(self) -> EstimateWithError:
        return next(iter(self.estimates.values()))


def resolve_workers(workers: int | None = None) -> int:
    if workers:
        return int(workers)
    env = os.environ.get("SPINGLASS_WORKERS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def disorder_average(estimator, n_realizations: int, master_seed: int = 0,
                     workers: int | None = None, fixed_stream: int | None = None) -> DisorderAverage:
    """Average ``estimator(seed)`` over realizations ``0 .. n-1``.

    ``estimator`` receives a :class:`DisorderSeed` for stream ``index`` (or
    ``fixed_stream`` for every index) and returns a float or a mapping of
    named floats. Results are reduced in index order, so the output does not
    depend on the worker count. Standard errors are jackknife over
    realizations.
    """
    if n_realizations < 2:
        raise DomainError("disorder averaging needs at least two realizations")
    seeds = [DisorderSeed(master_seed, fixed_stream if fixed_stream is not None else r)
             for r in range(n_realizations)]
    n_workers = max(1, min(resolve_workers(workers), n_realizations))
    results: list = [None] * n_realizations
    errors = {}

    def call(r):
        try:
            return r, estimator(seeds[r]), None
        except Exception as exc:  # collected and reported together
            return r, None, exc

    if n_workers == 1:
        outs = map(call, range(n_realizations))
    else:
        pool = ThreadPoolExecutor(n_workers)
        outs = pool.map(call, range(n_realizations))
    for r, val, exc in outs:
        if exc is not None:
            errors[r] = exc
        results[r] = val
    if n_workers > 1:
        pool.shutdown()
    if errors:
        raise PartialResultError(errors.keys(), errors)
    if isinstance(results[0], dict):
        keys = list(results[0])
        records = {k: np.array([res[k] for res in results], dtype=np.float64) for k in keys}
    else:
        records = {"value": np.array(results, dtype=np.float64)}
    estimates = {}
    for k, v in records.items():
        mean, se = jackknife(v)
        estimates[k] = EstimateWithError.of(mean, se, n_realizations, "jackknife")
    return DisorderAverage(estimates, records, n_realizations)
