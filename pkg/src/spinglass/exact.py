"""Exact Gibbs quantities by enumerating all 2^N configurations.

Configurations are visited in reflected Gray-code order starting from the
all-minus state (packed word 0): step ``s`` flips site ``ctz(s)``. Each step
updates the local fields in O(N), so the Hopfield model is handled through
its effective coupling matrix ``xi^T xi`` rather than the M overlaps.
Weights are aggregated by a streaming log-sum-exp with a running maximum;
no table of energies is ever held.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import CapacityError, ConfigurationError, DisorderError, DomainError
from .model import (
    Disorder,
    Hamiltonian,
    ModelParams,
    QuadraticForm,
    interpolation_t_derivative_form,
    quadratic_form,
)
from .stats import log_2cosh

DEFAULT_CAP = 26
RESYNC_BITS = 10

# observable kinds understood by the kernel
_ONE, _POW, _ABSPOW, _SQ_GT, _EXP_SQ, _QUAD = range(6)


@dataclass(frozen=True)
class Observable:
    """One entry of the fixed observable catalogue.

    The value is ``x_a * x_b * x_c * g`` where the spin factors are optional
    and ``g`` is a function of the overlap ``S`` (or a quadratic form).
    Build instances with the classmethods; tags identify them in results.
    """

    tag: str
    kind: int = _ONE
    spins: tuple = ()
    param: float = 0.0
    form: str | None = None

    @classmethod
    def one(cls):
        return cls("1")

    @classmethod
    def spin(cls, i):
        return cls(f"x{i}", spins=(i,))

    @classmethod
    def spin_pair(cls, i=0, j=1):
        return cls(f"x{i}x{j}", spins=(i, j))

    @classmethod
    def overlap_pow(cls, d, spins=()):
        pre = "".join(f"x{i}" for i in spins)
        return cls(f"{pre}S^{d:g}", _POW, tuple(spins), float(d))

    @classmethod
    def overlap_abs_pow(cls, d):
        return cls(f"|S|^{d:g}", _ABSPOW, (), float(d))

    @classmethod
    def overlap_sq_gt(cls, r):
        return cls(f"1[S^2>{r:g}]", _SQ_GT, (), float(r))

    @classmethod
    def exp_overlap_sq(cls, c):
        return cls(f"exp({c:.17g}S^2)", _EXP_SQ, (), float(c))

    @classmethod
    def energy(cls):
        """The Hamiltonian being enumerated, H(x)."""
        return cls("H", _QUAD, (), 0.0, "H")

    @classmethod
    def quad(cls, name):
        """A named extra quadratic form passed to the engine."""
        return cls(name, _QUAD, (), 0.0, name)


@dataclass
class ExactResult:
    log_Z: float
    free_energy: float
    N: int
    params: ModelParams
    which: Hamiltonian
    wall_time: float
    expectations: dict = field(default_factory=dict)
    max_exponent: float = float("nan")
    checkpoints: tuple | None = None


@dataclass(frozen=True)
class GibbsExpectation:
    value: float
    observable: str


@dataclass
class OverlapStatistics:
    moments: dict
    tail: dict
    exp_moment: float
    c: float


# -- kernels ---------------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _ctz(s):
    n = 0
    while (s & 1) == 0:
        s >>= 1
        n += 1
    return n


@nb.njit(cache=True, nogil=True)
def gray_visit_order(N):
    """Packed configurations in the order the enumeration visits them."""
    total = 1 << N
    out = np.empty(total, dtype=np.uint64)
    bits = np.uint64(0)
    out[0] = bits
    for step in range(1, total):
        bits ^= np.uint64(1) << np.uint64(_ctz(step))
        out[step] = bits
    return out


@nb.njit(cache=True, nogil=True)
def _fresh(x, A, B, c0, L, Qs, qc, h, l, g):
    N = x.size
    for j in range(N):
        acc = 0.0
        for k in range(N):
            acc += A[j, k] * x[k]
        h[j] = acc
    w = c0
    for j in range(N):
        w += x[j] * h[j] + B * x[j]
    for a in range(L.shape[0]):
        acc = 0.0
        for k in range(N):
            acc += L[a, k] * x[k]
        l[a] = acc
    q = np.empty(Qs.shape[0])
    for a in range(Qs.shape[0]):
        tot = qc[a]
        for j in range(N):
            acc = 0.0
            for k in range(N):
                acc += Qs[a, j, k] * x[k]
            g[a, j] = acc
            tot += x[j] * acc
        q[a] = tot
    return w, q


@nb.njit(cache=True, nogil=True)
def _obs_value(o, kinds, spins, params, lscale, x, l, q):
    v = 1.0
    for s in range(3):
        idx = spins[o, s]
        if idx >= 0:
            v *= x[idx]
    k = kinds[o]
    if k == 0:
        return v
    if k == 5:
        return v * q[int(params[o, 1])]
    S = l[0] * lscale
    if k == 1:
        return v * S ** params[o, 0]
    if k == 2:
        return v * abs(S) ** params[o, 0]
    if k == 3:
        # compare on the unscaled dot product: S^2 > r  <=>  l^2 > r N
        return v if l[0] * l[0] > params[o, 2] else 0.0
    return v * math.exp(params[o, 0] * S * S)


@nb.njit(cache=True, nogil=True)
def _enumerate(A, B, c0, L, lscale, Qs, qc, kinds, spins, params, shift, checkpoints):
    """Stream over all 2^N states; returns (max exponent, sum, observable sums).

    ``shift`` is NaN for the single-pass running-max mode; otherwise it is a
    fixed shift (second pass of the two-pass mode). ``checkpoints`` (sorted
    step indices) record the running exponent and state for auditing.
    """
    N = A.shape[0]
    n_obs = kinds.size
    x = -np.ones(N)
    h = np.empty(N)
    l = np.empty(L.shape[0])
    g = np.empty((Qs.shape[0], N))
    w, q = _fresh(x, A, B, c0, L, Qs, qc, h, l, g)
    fixed = not math.isnan(shift)
    mx = shift if fixed else w
    Z = 0.0
    acc = np.zeros(n_obs)
    cp_w = np.empty(checkpoints.size)
    cp_bits = np.empty(checkpoints.size, dtype=np.uint64)
    cp_i = 0
    bits = np.uint64(0)
    total = 1 << N
    resync_mask = (1 << RESYNC_BITS) - 1
    for step in range(total):
        if step > 0:
            i = _ctz(step)
            xi_ = x[i]
            w += -4.0 * xi_ * h[i] - 2.0 * B * xi_
            for j in range(N):
                h[j] -= 2.0 * xi_ * A[j, i]
            for a in range(L.shape[0]):
                l[a] -= 2.0 * xi_ * L[a, i]
            for a in range(Qs.shape[0]):
                q[a] += -4.0 * xi_ * g[a, i]
                for j in range(N):
                    g[a, j] -= 2.0 * xi_ * Qs[a, j, i]
            x[i] = -xi_
            bits ^= np.uint64(1) << np.uint64(i)
            if (step & resync_mask) == 0:
                w, q = _fresh(x, A, B, c0, L, Qs, qc, h, l, g)
        if not math.isfinite(w):
            return np.nan, np.nan, acc, cp_w, cp_bits
        while cp_i < checkpoints.size and checkpoints[cp_i] == step:
            cp_w[cp_i] = w
            cp_bits[cp_i] = bits
            cp_i += 1
        if not fixed and w > mx:
            r = math.exp(mx - w)
            Z *= r
            for o in range(n_obs):
                acc[o] *= r
            mx = w
        e = math.exp(w - mx)
        Z += e
        for o in range(n_obs):
            acc[o] += e * _obs_value(o, kinds, spins, params, lscale, x, l, q)
    return mx, Z, acc, cp_w, cp_bits


@nb.njit(cache=True, nogil=True)
def _max_exponent(A, B, c0):
    N = A.shape[0]
    x = -np.ones(N)
    h = A @ x
    w = c0
    for j in range(N):
        w += x[j] * h[j] + B * x[j]
    mx = w
    for step in range(1, 1 << N):
        i = _ctz(step)
        xi_ = x[i]
        w += -4.0 * xi_ * h[i] - 2.0 * B * xi_
        for j in range(N):
            h[j] -= 2.0 * xi_ * A[j, i]
        x[i] = -xi_
        if (step & 1023) == 0:
            h = A @ x
            w = c0
            for j in range(N):
                w += x[j] * h[j] + B * x[j]
        if w > mx:
            mx = w
    return mx


# -- driver ----------------------------------------------------------------

class ExactEngine:
    """Enumeration front end; ``cap`` bounds N."""

    def __init__(self, cap: int = DEFAULT_CAP, two_pass: bool = False):
        self.cap = cap
        self.two_pass = two_pass

    def _check(self, p: ModelParams):
        if p.N > self.cap:
            raise CapacityError(f"N = {p.N} exceeds the enumeration cap of {self.cap} sites")
        if p.N > 62:
            raise CapacityError("enumeration is limited to 62 sites by the packed state word")

    def run(self, disorder: Disorder, p: ModelParams, which: Hamiltonian,
            observables=(), forms=None, checkpoints=None) -> ExactResult:
        """Enumerate once; returns log Z and the requested Gibbs expectations.

        ``forms`` maps names to extra :class:`QuadraticForm` observables;
        the energy of ``which`` is always available as ``"H"``.
        """
        self._check(p)
        t0 = time.perf_counter()
        beta = p.beta * which.beta_scale
        H = quadratic_form(which, disorder, p)
        A = np.ascontiguousarray(-beta * H.W)
        c0 = -beta * H.const
        forms = dict(forms or {})
        forms.setdefault("H", H)
        names = [o.form for o in observables if o.kind == _QUAD]
        names = list(dict.fromkeys(names))
        for n in names:
            if n not in forms:
                raise ConfigurationError(f"no quadratic form named {n!r}")
        Qs = np.zeros((len(names), p.N, p.N))
        qc = np.zeros(len(names))
        for a, n in enumerate(names):
            Qs[a] = forms[n].W
            qc[a] = forms[n].const
        needs_overlap = any(o.kind in (_POW, _ABSPOW, _SQ_GT, _EXP_SQ) for o in observables)
        if needs_overlap and disorder.xi is None:
            raise ConfigurationError("overlap observables need patterns")
        L = (disorder.xi.entries[:1].copy() if disorder.xi is not None
             else np.zeros((0, p.N)))
        lscale = 1.0 / math.sqrt(p.N)
        n_obs = len(observables)
        kinds = np.array([o.kind for o in observables], dtype=np.int64)
        spins = -np.ones((n_obs, 3), dtype=np.int64)
        params = np.zeros((n_obs, 3))
        for k, o in enumerate(observables):
            if len(o.spins) > 3:
                raise ConfigurationError("at most three spin factors per observable")
            for s, idx in enumerate(o.spins):
                if not 0 <= idx < p.N:
                    raise ConfigurationError(f"site {idx} out of range")
                spins[k, s] = idx
            params[k, 0] = o.param
            if o.kind == _QUAD:
                params[k, 1] = names.index(o.form)
            if o.kind == _SQ_GT:
                params[k, 2] = o.param * p.N
        cps = np.asarray(checkpoints if checkpoints is not None else [], dtype=np.int64)
        shift = math.nan
        if self.two_pass:
            shift = _max_exponent(A, p.B, c0)
        mx, Z, acc, cp_w, cp_bits = _enumerate(
            A, p.B, c0, L, lscale, Qs, qc, kinds, spins, params, shift, np.sort(cps))
        if not (math.isfinite(mx) and math.isfinite(Z) and Z > 0):
            raise DisorderError("non-finite energy encountered during enumeration")
        log_Z = mx + math.log(Z)
        res = ExactResult(log_Z, log_Z / p.N, p.N, p, which, time.perf_counter() - t0,
                          {o.tag: float(a / Z) for o, a in zip(observables, acc)}, mx)
        if checkpoints is not None:
            res.checkpoints = (cp_bits, cp_w)
        return res


_default = ExactEngine()


def exact_log_partition(disorder: Disorder, p: ModelParams, which: Hamiltonian = Hamiltonian(),
                        engine: ExactEngine | None = None) -> ExactResult:
    return (engine or _default).run(disorder, p, which)


def exact_gibbs_expectation(disorder: Disorder, p: ModelParams, which: Hamiltonian,
                            observable: Observable, engine: ExactEngine | None = None,
                            forms=None) -> GibbsExpectation:
    res = (engine or _default).run(disorder, p, which, [observable], forms=forms)
    return GibbsExpectation(res.expectations[observable.tag], observable.tag)


def exact_overlap_statistics(disorder: Disorder, p: ModelParams, c: float = 0.0,
                             r_max: int | None = None, which: Hamiltonian = Hamiltonian(),
                             engine: ExactEngine | None = None) -> OverlapStatistics:
    """Overlap moments, tail ``G(S^2 > r)`` for r = 0..r_max and ``<e^{c S^2}>``."""
    if c < 0:
        raise DomainError("exponential-moment parameter c must be non-negative")
    if r_max is None:
        # S^2 <= |xi^0|^2 by Cauchy-Schwarz
        r_max = int(math.ceil(float(np.sum(disorder.xi.entries[0] ** 2))))
    obs = [Observable.overlap_abs_pow(d) for d in (1, 2, 3, 4)]
    obs += [Observable.overlap_sq_gt(r) for r in range(r_max + 1)]
    obs.append(Observable.exp_overlap_sq(c))
    res = (engine or _default).run(disorder, p, which, obs)
    ex = res.expectations
    moments = {d: ex[obs[d - 1].tag] for d in (1, 2, 3, 4)}
    tail = {r: min(1.0, ex[obs[4 + r].tag]) for r in range(r_max + 1)}
    return OverlapStatistics(moments, tail, ex[obs[-1].tag], c)


def exact_interpolation_derivative(disorder: Disorder, p: ModelParams, t: float,
                                   h: float = 1e-5, engine: ExactEngine | None = None):
    """``dF_t/dt`` two ways: ``-(beta/N) <dH_t/dt>`` and a central difference."""
    if not (10 * h <= t <= 1.0 - 10 * h):
        raise DomainError(f"t = {t} is within 10*h of an endpoint")
    eng = engine or _default
    form = interpolation_t_derivative_form(disorder, p, t)
    res = eng.run(disorder, p, Hamiltonian.interpolated(t), [Observable.quad("dHdt")],
                  forms={"dHdt": form})
    analytic = -p.beta / p.N * res.expectations["dHdt"]
    fp = eng.run(disorder, p, Hamiltonian.interpolated(t + h)).free_energy
    fm = eng.run(disorder, p, Hamiltonian.interpolated(t - h)).free_energy
    return analytic, (fp - fm) / (2.0 * h)


def exact_diffrule_check(disorder: Disorder, p: ModelParams, i: int, g: str = "x1x2",
                         t: float = 1.0, h: float = 1e-4, engine: ExactEngine | None = None):
    """Derivative of ``<g>`` with respect to the pattern entry ``xi^0_i``.

    ``g`` is ``"x1x2"`` (spins 0 and 1) or ``"xiS"`` (``x_i S``). Returns the
    covariance formula and a central difference of ``<g>``.
    """
    from .model import PatternMatrix

    eng = engine or _default
    which = Hamiltonian.interpolated(t) if t < 1.0 else Hamiltonian.hopfield()
    if g == "x1x2":
        g_obs, dg, gxs = Observable.spin_pair(0, 1), 0.0, Observable.overlap_pow(1, (0, 1, i))
    elif g == "xiS":
        g_obs, dg, gxs = Observable.overlap_pow(1, (i,)), 1.0 / math.sqrt(p.N), Observable.overlap_pow(2)
    else:
        raise ConfigurationError(f"unknown observable {g!r}")
    xs = Observable.overlap_pow(1, (i,))
    ex = eng.run(disorder, p, which, [g_obs, gxs, xs]).expectations
    cov = ex[gxs.tag] - ex[g_obs.tag] * ex[xs.tag]
    analytic = dg + 2.0 * p.beta * math.sqrt(t) / math.sqrt(p.M) * cov

    def g_at(delta):
        e = disorder.xi.entries.copy()
        e[0, i] += delta
        d = Disorder(PatternMatrix(e, "perturbed"), disorder.J)
        return eng.run(d, p, which, [g_obs]).expectations[g_obs.tag]

    return analytic, (g_at(h) - g_at(-h)) / (2.0 * h)


def closed_form_beta_zero(p: ModelParams) -> float:
    return log_2cosh(p.B)
