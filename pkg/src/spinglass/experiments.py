"""Experiment drivers.

Each driver is a pure function of its arguments (including ``master_seed``)
and returns a result object whose ``rows()`` match a CSV schema in
:mod:`spinglass.io`. Realization ``r`` uses stream ``r`` of the master seed
for both patterns and couplings (different roles, hence independent), so the
SK baseline and the pattern draws are shared across alpha grid points.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .disorder import DisorderSeed, PatternDistribution, gen_couplings, gen_patterns
from .errors import ConfigurationError, DomainError, PreconditionError
from .exact import ExactEngine, Observable, exact_overlap_statistics
from .mc import TemperingConfig, disorder_average, mc_overlap_statistics, thermo_integration
from .model import SQRT2, Disorder, Hamiltonian, ModelParams, interpolation_t_derivative_form
from .stats import EstimateWithError, jackknife, log_2cosh

ENGINES = ("exact", "mc")


@dataclass(frozen=True)
class EngineSpec:
    """Which free-energy engine to use and how to configure it."""

    name: str = "exact"
    cap: int = 26
    n_nodes: int = 17
    measure: int = 4000
    burn_in: int = 500

    def __post_init__(self):
        if self.name not in ENGINES:
            raise ConfigurationError(f"unknown engine {self.name!r}")

    def tempering(self, beta: float) -> TemperingConfig:
        return TemperingConfig.for_beta(beta, n=self.n_nodes, measure=self.measure,
                                        burn_in=self.burn_in)

    def exact(self) -> ExactEngine:
        return ExactEngine(cap=self.cap)


def _engine(engine) -> EngineSpec:
    return engine if isinstance(engine, EngineSpec) else EngineSpec(str(engine))


def make_disorder(seed: DisorderSeed, p: ModelParams, patterns=True, couplings=False) -> Disorder:
    return Disorder(
        gen_patterns(seed, PatternDistribution.parse(p.pattern_dist), p.N, p.M) if patterns else None,
        gen_couplings(seed, p.N) if couplings else None,
    )


def free_energy(seed: DisorderSeed, p: ModelParams, which: Hamiltonian, engine) -> float:
    """Free energy of one realization with the chosen engine."""
    eng = _engine(engine)
    d = make_disorder(seed, p, patterns=which.uses_patterns,
                      couplings=which.uses_couplings)
    if eng.name == "exact":
        return eng.exact().run(d, p, which).free_energy
    if p.beta == 0:
        return log_2cosh(p.B)
    return thermo_integration(d, p, which, cfg=eng.tempering(p.beta), seed=seed).estimate.mean


def _check_regime(alpha: float, beta: float, eps: float = 0.0):
    if alpha < (4.0 + eps) * beta**2:
        warnings.warn(f"alpha = {alpha:g} is below (4 + eps) beta^2 = {(4 + eps) * beta**2:g}")


# -- residuals against the SK baseline ----------------------------------------

@dataclass
class ResidualRow:
    alpha: float
    f_hop: EstimateWithError
    f_sk: EstimateWithError
    residual: EstimateWithError


@dataclass
class ResidualTable:
    beta: float
    B: float
    N: int
    n_disorder: int
    rows: list
    C_hat: float

    def as_rows(self):
        out = []
        for r in self.rows:
            out.append(dict(
                alpha=r.alpha, beta=self.beta, field=self.B,
                f_hop_mean=r.f_hop.mean, f_hop_se=r.f_hop.std_error,
                f_sk_mean=r.f_sk.mean, f_sk_se=r.f_sk.std_error,
                residual_mean=r.residual.mean, residual_se=r.residual.std_error,
                n_disorder=self.n_disorder,
            ))
        return out

    rows_for_csv = as_rows


def fit_constant(alphas, residuals, beta) -> float:
    """Least-squares slope through the origin of |residual| against beta^3/sqrt(alpha)."""
    x = beta**3 / np.sqrt(np.asarray(alphas, dtype=float))
    y = np.abs(np.asarray(residuals, dtype=float))
    den = float(x @ x)
    return float(x @ y) / den if den > 0 else 0.0


def sk_baseline(N: int, beta: float, B: float, n_disorder: int, engine, master_seed: int,
                workers=None) -> EstimateWithError:
    """Disorder average of F_SK(sqrt(2) beta, B) at size N."""
    p = ModelParams(N, 1, beta, B)
    if beta == 0:
        return EstimateWithError.exact(log_2cosh(B))
    avg = disorder_average(lambda s: free_energy(s, p, Hamiltonian.sk(SQRT2), engine),
                           n_disorder, master_seed, workers)
    return avg.estimate


def hopfield_average(N: int, alpha, beta: float, B: float, dist: str, n_disorder: int, engine,
                     master_seed: int, workers=None) -> tuple[EstimateWithError, np.ndarray]:
    p = ModelParams.from_alpha(N, alpha, beta, B, pattern_dist=dist)
    if beta == 0:
        return EstimateWithError.exact(log_2cosh(B)), np.full(n_disorder, log_2cosh(B))
    if n_disorder == 1:
        seed = DisorderSeed(master_seed, 0)
        eng = _engine(engine)
        if eng.name == "exact":
            return EstimateWithError.exact(free_energy(seed, p, Hamiltonian.hopfield(), eng)), None
        d = make_disorder(seed, p)
        est = thermo_integration(d, p, cfg=eng.tempering(beta), seed=seed).estimate
        return est, np.array([est.mean])
    avg = disorder_average(lambda s: free_energy(s, p, Hamiltonian.hopfield(), engine),
                           n_disorder, master_seed, workers)
    return avg.estimate, avg.records["value"]


def run_theorem1(alpha_grid, beta: float, B: float = 0.0, N: int = 16, n_disorder: int = 200,
                 pattern_dist: str = "gaussian", engine="exact", master_seed: int = 0,
                 workers=None, eps: float = 0.0) -> ResidualTable:
    """Residuals ``E[F_Hop] - beta sqrt(alpha) - E[F_SK(sqrt 2 beta, B)]`` on an alpha grid."""
    sk = sk_baseline(N, beta, B, n_disorder, engine, master_seed, workers)
    rows = []
    for a in alpha_grid:
        _check_regime(float(a), beta, eps)
        hop, _ = hopfield_average(N, a, beta, B, pattern_dist, n_disorder, engine, master_seed, workers)
        a = float(a)
        res_mean = hop.mean - beta * math.sqrt(a) - sk.mean
        res_se = math.hypot(hop.std_error, sk.std_error)
        if beta == 0:
            res = EstimateWithError.exact(res_mean)
        else:
            res = EstimateWithError.of(res_mean, res_se, n_disorder, "disorder_average")
        rows.append(ResidualRow(a, hop, sk, res))
    C = fit_constant([r.alpha for r in rows], [r.residual.mean for r in rows], beta)
    return ResidualTable(beta, B, N, n_disorder, rows, C)


# -- free-energy points against the shifted SK curve -------------------------

@dataclass
class Figure1Data:
    N: int
    rows: list = field(default_factory=list)

    def as_rows(self):
        return self.rows


def run_figure1(N: int = 20, alpha_range=range(1, 51), panels=((1.0, 0.0), (2.0, 5.0)),
                n_sk_realizations: int = 100, n_hopfield_per_alpha: int = 1,
                pattern_dist: str = "bernoulli", engine="mc", master_seed: int = 0,
                workers=None) -> Figure1Data:
    """Hopfield free-energy points against the curve ``beta sqrt(alpha) + P_hat``.

    ``P_hat`` is the disorder average of F_SK(sqrt(2) beta, B) at the same N.
    With one realization per alpha the point error is the sampler's own
    error bar; otherwise it is the jackknife error over realizations.
    """
    out = Figure1Data(N)
    for beta, B in panels:
        P = sk_baseline(N, beta, B, n_sk_realizations, engine, master_seed, workers)
        for a in alpha_range:
            hop, _ = hopfield_average(N, a, beta, B, pattern_dist, n_hopfield_per_alpha, engine,
                                      master_seed, workers)
            curve = beta * math.sqrt(a) + P.mean
            out.rows.append(dict(
                beta=float(beta), field=float(B), alpha=float(a),
                f_hop=hop.mean, f_hop_se=hop.std_error,
                curve=curve, curve_se=P.std_error,
                residual=hop.mean - curve,
                n_hop=n_hopfield_per_alpha, n_sk=n_sk_realizations if beta != 0 else 0,
            ))
    return out


# -- overlap tail and exponential moment -------------------------------------

@dataclass
class TailFit:
    beta: float
    alpha: float
    r: np.ndarray
    tail: list                 # EstimateWithError per r
    fitted_rate: float
    fit_range: tuple
    n_disorder: int

    @property
    def theory_rate(self) -> float:
        return 0.5 - self.beta / math.sqrt(self.alpha)

    @property
    def theory_prefactor(self) -> float:
        a = self.theory_rate
        return 2.0 * math.exp(self.beta / math.sqrt(self.alpha)) / (1.0 - math.exp(-a))

    @property
    def rate_ratio(self) -> float:
        return self.fitted_rate / self.theory_rate

    def as_rows(self):
        return [dict(beta=self.beta, alpha=self.alpha, r=float(r), tail_mean=e.mean,
                     tail_se=e.std_error, fitted_rate=self.fitted_rate,
                     theory_rate=self.theory_rate, theory_prefactor=self.theory_prefactor,
                     n_disorder=self.n_disorder)
                for r, e in zip(self.r, self.tail)]


def fit_exponential_rate(r, mean, se) -> float:
    """Weighted least-squares slope of -log(tail) against r; weights tail^2/se^2."""
    r = np.asarray(r, dtype=float)
    mean = np.asarray(mean, dtype=float)
    se = np.asarray(se, dtype=float)
    ok = mean > 0
    if ok.sum() < 2:
        raise DomainError("need at least two positive tail values to fit a rate")
    r, y = r[ok], np.log(mean[ok])
    # relative errors floored so exact (zero-error) points do not overflow the weights
    rel = np.maximum(se[ok] / mean[ok], 1e-12)
    w = np.ones_like(y) if np.all(se[ok] == 0) else rel**-2
    W = w / w.sum()
    rb, yb = W @ r, W @ y
    slope = (W @ ((r - rb) * (y - yb))) / (W @ ((r - rb) ** 2))
    return float(-slope)


def _overlap_tail_records(p: ModelParams, r_max: int, n_disorder: int, master_seed: int,
                          workers, engine, c: float = 0.0):
    eng = _engine(engine)
    cfg = TemperingConfig.for_beta(p.beta, n=9 if p.beta > 0 else 1, measure=eng.measure,
                                   burn_in=eng.burn_in)

    def one(seed):
        d = make_disorder(seed, p)
        if eng.name == "exact":
            st = exact_overlap_statistics(d, p, c=c, r_max=r_max, engine=eng.exact())
        else:
            st = mc_overlap_statistics(d, p, cfg, c=c, r_max=r_max, seed=seed).stats
        out = {f"tail{r}": st.tail[r] for r in range(r_max + 1)}
        out["exp"] = st.exp_moment
        for k, v in st.moments.items():
            out[f"m{k}"] = v
        return out

    return disorder_average(one, n_disorder, master_seed, workers)


def run_overlap_tail(p: ModelParams, r_max: int = 8, n_disorder: int = 100, engine="exact",
                     master_seed: int = 0, workers=None, fit_from: int = 1) -> TailFit:
    """Disorder-averaged ``G(S^2 > r)`` for r = 0..r_max and its fitted decay rate."""
    a = 0.5 - p.beta / math.sqrt(p.alpha)
    if a <= 0:
        raise PreconditionError(f"a = 1/2 - beta/sqrt(alpha) = {a:g} must be positive")
    avg = _overlap_tail_records(p, r_max, n_disorder, master_seed, workers, engine)
    r = np.arange(r_max + 1)
    tail = [avg.estimates[f"tail{k}"] for k in r]
    sel = r >= fit_from
    rate = fit_exponential_rate(r[sel], [t.mean for t, s in zip(tail, sel) if s],
                                [t.std_error for t, s in zip(tail, sel) if s])
    return TailFit(p.beta, p.alpha, r, tail, rate, (fit_from, r_max), n_disorder)


@dataclass
class ExpMomentResult:
    c: float
    alpha: float
    beta: float
    by_N: dict               # N -> EstimateWithError
    n_disorder: int

    @property
    def max(self) -> float:
        return max(e.mean for e in self.by_N.values())

    @property
    def ratio(self) -> float:
        vals = [e.mean for e in self.by_N.values()]
        return max(vals) / min(vals)

    def as_rows(self):
        return [dict(N=N, alpha=self.alpha, beta=self.beta, c=self.c, mean=e.mean,
                     se=e.std_error, n_disorder=self.n_disorder) for N, e in self.by_N.items()]


def run_exp_moment(N_grid, alpha: float, beta: float, c: float, B: float = 0.0,
                   pattern_dist: str = "bernoulli", n_disorder: int = 100, engine="exact",
                   master_seed: int = 0, workers=None) -> ExpMomentResult:
    """``E[<exp(c S^2)>]`` across sizes at fixed alpha; uniform boundedness check."""
    a = 0.5 - beta / math.sqrt(alpha)
    if c < 0:
        raise DomainError("c must be non-negative")
    if c >= a:
        warnings.warn(f"c = {c:g} >= a = {a:g}: the exponential moment may diverge")
    by_N = {}
    for N in N_grid:
        p = ModelParams.from_alpha(N, alpha, beta, B, pattern_dist=pattern_dist)
        if c == 0:
            by_N[N] = EstimateWithError.exact(1.0)
            continue
        avg = _overlap_tail_records(p, 0, n_disorder, master_seed, workers, engine, c=c)
        by_N[N] = avg.estimates["exp"]
    return ExpMomentResult(c, alpha, beta, by_N, n_disorder)


# -- interpolation -----------------------------------------------------------

@dataclass
class InterpolationScan:
    t: np.ndarray
    f_t: list                 # EstimateWithError per t
    dfdt: list                # EstimateWithError per interior t (None at endpoints)
    endpoint_error: float
    max_slope: float
    difference: EstimateWithError   # E[F_1] - E[F_0]
    n_disorder: int

    def as_rows(self):
        return [dict(t=float(t), f_t_mean=f.mean, f_t_se=f.std_error,
                     dfdt_mean=(d.mean if d is not None else float("nan")),
                     dfdt_se=(d.std_error if d is not None else float("nan")),
                     n_disorder=self.n_disorder)
                for t, f, d in zip(self.t, self.f_t, self.dfdt)]


def run_interpolation_scan(p: ModelParams, t_grid=(0.0, 0.25, 0.5, 0.75, 1.0), n_disorder: int = 200,
                           master_seed: int = 0, workers=None, cap: int = 26) -> InterpolationScan:
    """``E[F_t]`` along the interpolation path, with per-realization endpoint checks."""
    eng = ExactEngine(cap=cap)
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if np.any((t_grid < 0) | (t_grid > 1)):
        raise DomainError("t values must lie in [0, 1]")

    def one(seed):
        d = make_disorder(seed, p, couplings=True)
        out = {}
        for k, t in enumerate(t_grid):
            out[f"f{k}"] = eng.run(d, p, Hamiltonian.interpolated(t)).free_energy
            if 0 < t < 1:
                form = interpolation_t_derivative_form(d, p, t)
                r = eng.run(d, p, Hamiltonian.interpolated(t), [Observable.quad("dHdt")],
                            forms={"dHdt": form})
                out[f"d{k}"] = -p.beta / p.N * r.expectations["dHdt"]
        f0 = eng.run(d, p, Hamiltonian.interpolated(0.0)).free_energy
        f1 = eng.run(d, p, Hamiltonian.interpolated(1.0)).free_energy
        fsk = eng.run(d, p, Hamiltonian.sk(SQRT2)).free_energy
        fhop = eng.run(d, p, Hamiltonian.hopfield()).free_energy
        out["end0"] = abs(f0 - fsk)
        out["end1"] = abs(f1 - (fhop - p.beta * math.sqrt(p.alpha)))
        out["diff"] = f1 - f0
        return out

    avg = disorder_average(one, n_disorder, master_seed, workers)
    f_t = [avg.estimates[f"f{k}"] for k in range(t_grid.size)]
    dfdt = [avg.estimates.get(f"d{k}") for k in range(t_grid.size)]
    slopes = [abs(d.mean) for d in dfdt if d is not None]
    endpoint = float(max(avg.records["end0"].max(), avg.records["end1"].max()))
    return InterpolationScan(t_grid, f_t, dfdt, endpoint, max(slopes) if slopes else 0.0,
                             avg.estimates["diff"], n_disorder)


# -- Stein-type identities ---------------------------------------------------

@dataclass
class SteinCheck:
    kind: str
    t: float
    alpha: float
    lhs: EstimateWithError
    rhs: EstimateWithError
    diff: EstimateWithError    # paired per-realization difference
    n_disorder: int

    @property
    def combined_se(self) -> float:
        return self.diff.std_error

    @property
    def agrees(self) -> bool:
        return abs(self.lhs.mean - self.rhs.mean) <= 3.0 * self.combined_se

    def as_row(self):
        return dict(kind=self.kind, t=self.t, alpha=self.alpha, lhs_mean=self.lhs.mean,
                    lhs_se=self.lhs.std_error, rhs_mean=self.rhs.mean, rhs_se=self.rhs.std_error,
                    diff_se=self.diff.std_error, n_disorder=self.n_disorder)


def run_stein_check(p: ModelParams, t: float = 0.5, n_disorder: int = 2000, master_seed: int = 0,
                    workers=None, coupling_dist: str = "gaussian") -> SteinCheck:
    """``E[J_01 <x_0 x_1>]`` against ``beta sqrt(2(1-t))/sqrt(N) E[Var(x_0 x_1)]``."""
    if coupling_dist != "gaussian":
        raise PreconditionError("the SK Stein identity requires Gaussian couplings")
    if not 0.0 <= t < 1.0:
        raise DomainError("t must lie in [0, 1)")
    eng = ExactEngine()
    coef = p.beta * math.sqrt(2.0 * (1.0 - t)) / math.sqrt(p.N)
    X = Observable.spin_pair(0, 1)

    def one(seed):
        d = make_disorder(seed, p, couplings=True)
        ex = eng.run(d, p, Hamiltonian.interpolated(t), [X]).expectations[X.tag]
        lhs = d.J.entries[0, 1] * ex
        rhs = coef * (1.0 - ex * ex)
        return {"lhs": lhs, "rhs": rhs, "diff": lhs - rhs}

    avg = disorder_average(one, n_disorder, master_seed, workers)
    e = avg.estimates
    return SteinCheck("sk", t, p.alpha, e["lhs"], e["rhs"], e["diff"], n_disorder)


@dataclass
class HopfieldSteinCheck:
    rows: list               # dicts per alpha

    def as_rows(self):
        return self.rows


def run_hopfield_stein_check(N: int, alphas, beta: float, B: float = 0.0, n_disorder: int = 2000,
                             master_seed: int = 0, workers=None) -> HopfieldSteinCheck:
    """``E[xi_0 xi_1 <x_0 x_1>]`` at t = 1 against ``(2 beta/sqrt(NM)) E[Var X]``.

    The scaled remainder ``(lhs - first) M / beta^2`` should stay bounded.
    """
    eng = ExactEngine()
    X = Observable.spin_pair(0, 1)
    rows = []
    for a in alphas:
        p = ModelParams.from_alpha(N, a, beta, B, pattern_dist="gaussian")
        coef = 2.0 * beta / math.sqrt(p.N * p.M)

        def one(seed, p=p, coef=coef):
            d = make_disorder(seed, p)
            ex = eng.run(d, p, Hamiltonian.hopfield(), [X]).expectations[X.tag]
            lhs = d.xi.entries[0, 0] * d.xi.entries[0, 1] * ex
            first = coef * (1.0 - ex * ex)
            return {"lhs": lhs, "first": first, "diff": lhs - first}

        avg = disorder_average(one, n_disorder, master_seed, workers)
        e = avg.estimates
        scale = p.M / beta**2 if beta > 0 else 0.0
        rows.append(dict(alpha=float(a), M=p.M, lhs_mean=e["lhs"].mean, lhs_se=e["lhs"].std_error,
                         first_mean=e["first"].mean, first_se=e["first"].std_error,
                         remainder_scaled=e["diff"].mean * scale,
                         remainder_scaled_se=e["diff"].std_error * scale, n_disorder=n_disorder))
    return HopfieldSteinCheck(rows)


# -- concentration ------------------------------------------------------------

@dataclass
class ConcentrationFit:
    d: float
    rows: list                # dicts: N, mean_f, moment, moment_se
    slope: float
    predicted: float

    def as_rows(self):
        return [dict(r, d=self.d, slope=self.slope, predicted=self.predicted) for r in self.rows]


def centered_abs_moment(values, d: float) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.mean(np.abs(v - v.mean()) ** d))


def run_concentration(N_grid, alpha: float, beta: float, B: float = 0.0, d: float = 2.0,
                      n_disorder: int = 500, pattern_dist: str = "bernoulli", engine="exact",
                      master_seed: int = 0, workers=None) -> ConcentrationFit:
    """Centered d-th absolute moments of F over disorder and their log-log slope in N."""
    if not 2.0 <= d < 5.5:
        raise DomainError("d must satisfy 2 <= d < 11/2")
    _check_regime(alpha, beta)
    rows = []
    for N in N_grid:
        _, rec = hopfield_average(N, alpha, beta, B, pattern_dist, n_disorder, engine,
                                  master_seed, workers)
        mom, se = jackknife(rec, lambda v: centered_abs_moment(v, d))
        rows.append(dict(N=int(N), mean_f=float(np.mean(rec)), moment=float(mom),
                         moment_se=float(se), n_disorder=n_disorder))
    moments = np.array([r["moment"] for r in rows])
    if np.all(moments > 0) and len(rows) >= 2:
        slope = float(np.polyfit(np.log([r["N"] for r in rows]), np.log(moments), 1)[0])
    else:
        slope = float("nan")
    return ConcentrationFit(d, rows, slope, -d / 2.0)
