"""Configurations, disorder containers and the Hamiltonians.

Conventions
-----------
* Spins are ``int8`` arrays over {-1, +1}. Site ``i`` lives in word ``i // 64``
  of the packed form, at bit ``i % 64`` (little-endian); a set bit means +1.
* Hopfield: ``H = -(1/sqrt(N M)) sum_k (x . xi^k)^2``.
* SK: ``H = -(1/sqrt(N)) sum_{i,j} J_ij x_i x_j`` over all ordered pairs,
  diagonal included, ``J`` not symmetrized.
* Interpolated: ``H_t = sqrt(1-t) sqrt(2) H_SK + sqrt(t) H_Hop + N sqrt(alpha t)``.
* Leave-one-out: Hopfield with pattern 0 removed, ``H* = H + S^2 / sqrt(alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numba as nb
import numpy as np

from .errors import ConfigurationError, DomainError

SQRT2 = math.sqrt(2.0)


def _readonly(a, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    N: int
    M: int
    beta: float
    B: float = 0.0
    pattern_dist: str = "bernoulli"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1 or int(self.M) != self.M or self.M < 1:
            raise ConfigurationError("N and M must be positive integers")
        if not self.beta >= 0:
            raise DomainError("beta must be non-negative")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "B", float(self.B))

    @classmethod
    def from_alpha(cls, N: int, alpha, beta: float, B: float = 0.0, **kw) -> "ModelParams":
        M = Fraction(str(alpha)) * N
        if M.denominator != 1:
            raise ConfigurationError(f"alpha * N = {float(M)} is not an integer")
        return cls(N, int(M), beta, B, **kw)

    @property
    def alpha(self) -> float:
        return self.M / self.N

    @property
    def overlap_regime_ok(self) -> bool:
        return self.alpha > 4.0 * self.beta**2

    def replace(self, **kw) -> "ModelParams":
        d = dict(N=self.N, M=self.M, beta=self.beta, B=self.B, pattern_dist=self.pattern_dist)
        d.update(kw)
        return ModelParams(**d)


class SpinConfiguration:
    """Mutable (single-writer) ±1 configuration with a bit-packed view."""

    __slots__ = ("spins",)

    def __init__(self, spins):
        s = np.asarray(spins)
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("spins must be a non-empty 1-d sequence")
        if not np.all((s == 1) | (s == -1)):
            raise ConfigurationError("spins must be exactly +1 or -1")
        self.spins = s.astype(np.int8)

    @property
    def N(self) -> int:
        return self.spins.size

    @classmethod
    def all_up(cls, N: int) -> "SpinConfiguration":
        return cls(np.ones(N, dtype=np.int8))

    @classmethod
    def random(cls, rng: np.random.Generator, N: int) -> "SpinConfiguration":
        return cls(2 * rng.integers(0, 2, size=N, dtype=np.int8) - 1)

    def packed(self) -> np.ndarray:
        words = np.zeros((self.N + 63) // 64, dtype=np.uint64)
        for i in np.flatnonzero(self.spins > 0):
            words[i // 64] |= np.uint64(1) << np.uint64(i % 64)
        return words

    @classmethod
    def from_packed(cls, words, N: int) -> "SpinConfiguration":
        words = np.atleast_1d(np.asarray(words, dtype=np.uint64))
        if words.size != (N + 63) // 64:
            raise ConfigurationError("packed word count does not match N")
        idx = np.arange(N)
        bits = (words[idx // 64] >> (idx % 64).astype(np.uint64)) & np.uint64(1)
        return cls(np.where(bits == 1, 1, -1).astype(np.int8))

    def flipped(self, i: int) -> "SpinConfiguration":
        s = self.spins.copy()
        s[i] = -s[i]
        return SpinConfiguration(s)

    def copy(self) -> "SpinConfiguration":
        return SpinConfiguration(self.spins.copy())

    def __eq__(self, other):
        return isinstance(other, SpinConfiguration) and np.array_equal(self.spins, other.spins)

    def __repr__(self):
        return f"SpinConfiguration({''.join('+' if s > 0 else '-' for s in self.spins)})"


@dataclass(frozen=True, eq=False)
class PatternMatrix:
    entries: np.ndarray
    dist_tag: str = "bernoulli"

    def __post_init__(self):
        e = _readonly(self.entries)
        if e.ndim != 2 or e.size == 0:
            raise ConfigurationError("patterns must be a non-empty M x N matrix")
        if not np.all(np.isfinite(e)):
            raise ConfigurationError("pattern entries must be finite")
        if self.dist_tag == "bernoulli" and not np.all(np.abs(e) == 1.0):
            raise ConfigurationError("Bernoulli patterns must be ±1")
        object.__setattr__(self, "entries", e)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = _readonly(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.size == 0:
            raise ConfigurationError("couplings must be a non-empty square matrix")
        if not np.all(np.isfinite(e)):
            raise ConfigurationError("coupling entries must be finite")
        object.__setattr__(self, "entries", e)

    @property
    def N(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Disorder:
    """One quenched realization; either part may be absent."""

    xi: PatternMatrix | None = None
    J: CouplingMatrix | None = None


@dataclass(frozen=True)
class Hamiltonian:
    """Which energy function to use.

    ``beta_scale`` multiplies the inverse temperature (the SK baseline is
    evaluated at ``sqrt(2) * beta``).
    """

    kind: str = "hopfield"
    t: float = 1.0
    beta_scale: float = 1.0

    KINDS = ("hopfield", "sk", "interpolated", "leave_one_out")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown Hamiltonian {self.kind!r}")
        if self.kind == "interpolated" and not 0.0 <= self.t <= 1.0:
            raise DomainError("interpolation parameter t must lie in [0, 1]")

    @classmethod
    def hopfield(cls):
        return cls("hopfield")

    @classmethod
    def sk(cls, beta_scale: float = 1.0):
        return cls("sk", beta_scale=beta_scale)

    @classmethod
    def interpolated(cls, t: float):
        return cls("interpolated", t=t)

    @classmethod
    def leave_one_out(cls):
        return cls("leave_one_out")

    @property
    def uses_patterns(self) -> bool:
        return self.kind != "sk" and not (self.kind == "interpolated" and self.t == 0.0)

    @property
    def uses_couplings(self) -> bool:
        return self.kind == "sk" or (self.kind == "interpolated" and self.t < 1.0)

    def label(self) -> str:
        if self.kind == "sk":
            return "sk" if self.beta_scale == 1.0 else f"sk*{self.beta_scale:.17g}"
        if self.kind == "interpolated":
            return f"interpolated(t={self.t:.17g})"
        return self.kind


# -- from-scratch energies -------------------------------------------------

def _spins(x) -> np.ndarray:
    return x.spins if isinstance(x, SpinConfiguration) else np.asarray(x)


def _check_patterns(s, xi: PatternMatrix | None, p: ModelParams):
    if xi is None:
        raise ConfigurationError("patterns required")
    if xi.N != s.size or xi.N != p.N or xi.M != p.M:
        raise ConfigurationError(
            f"dimension mismatch: x has {s.size} sites, patterns {xi.M}x{xi.N}, params N={p.N} M={p.M}"
        )


def _check_couplings(s, J: CouplingMatrix | None, p: ModelParams):
    if J is None:
        raise ConfigurationError("couplings required")
    if J.N != s.size or J.N != p.N:
        raise ConfigurationError(f"dimension mismatch: x has {s.size} sites, couplings {J.N}x{J.N}")


def energy_hopfield(x, xi: PatternMatrix, p: ModelParams) -> float:
    s = _spins(x)
    _check_patterns(s, xi, p)
    m = xi.entries @ s.astype(np.float64)
    return -float(np.sum(m * m)) / math.sqrt(p.N * p.M)


def energy_hopfield_leave_one_out(x, xi: PatternMatrix, p: ModelParams) -> float:
    s = _spins(x)
    _check_patterns(s, xi, p)
    m = xi.entries[1:] @ s.astype(np.float64)
    return -float(np.sum(m * m)) / math.sqrt(p.N * p.M)


def energy_sk(x, J: CouplingMatrix, p: ModelParams) -> float:
    s = _spins(x)
    _check_couplings(s, J, p)
    sf = s.astype(np.float64)
    return -float(np.sum(np.outer(sf, sf) * J.entries)) / math.sqrt(p.N)


def energy_interpolated(x, xi: PatternMatrix, J: CouplingMatrix, t: float, p: ModelParams) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError("interpolation parameter t must lie in [0, 1]")
    return (
        math.sqrt(1.0 - t) * SQRT2 * energy_sk(x, J, p)
        + math.sqrt(t) * energy_hopfield(x, xi, p)
        + p.N * math.sqrt(p.alpha * t)
    )


def overlap(x, xi: PatternMatrix, p: ModelParams) -> float:
    """``S = (x . xi^0) / sqrt(N)``."""
    s = _spins(x)
    _check_patterns(s, xi, p)
    return float(xi.entries[0] @ s.astype(np.float64)) / math.sqrt(p.N)


def energy(x, which: Hamiltonian, disorder: Disorder, p: ModelParams) -> float:
    if which.kind == "hopfield":
        return energy_hopfield(x, disorder.xi, p)
    if which.kind == "sk":
        return energy_sk(x, disorder.J, p)
    if which.kind == "leave_one_out":
        return energy_hopfield_leave_one_out(x, disorder.xi, p)
    return energy_interpolated(x, disorder.xi, disorder.J, which.t, p)


# -- quadratic-form representation -----------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``E(x) = x^T W x + const`` with ``W`` symmetric and zero on the diagonal.

    Every Hamiltonian above is of this form; the diagonal contributions are
    configuration independent and live in ``const``.
    """

    W: np.ndarray
    const: float

    def __call__(self, x) -> float:
        s = _spins(x).astype(np.float64)
        return float(s @ self.W @ s) + self.const

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.W + other.W, self.const + other.const)

    def scaled(self, c: float) -> "QuadraticForm":
        return QuadraticForm(c * self.W, c * self.const)

    def shifted(self, c: float) -> "QuadraticForm":
        return QuadraticForm(self.W, self.const + c)


def _symmetric_part(K: np.ndarray, scale: float) -> QuadraticForm:
    W = 0.5 * (K + K.T) * scale
    const = float(np.trace(K)) * scale
    np.fill_diagonal(W, 0.0)
    return QuadraticForm(W, const)


def hopfield_form(xi: PatternMatrix, p: ModelParams, first: int = 0) -> QuadraticForm:
    e = xi.entries[first:]
    K = e.T @ e if e.shape[0] else np.zeros((p.N, p.N))
    return _symmetric_part(K, -1.0 / math.sqrt(p.N * p.M))


def sk_form(J: CouplingMatrix, p: ModelParams) -> QuadraticForm:
    return _symmetric_part(J.entries, -1.0 / math.sqrt(p.N))


def quadratic_form(which: Hamiltonian, disorder: Disorder, p: ModelParams) -> QuadraticForm:
    if which.kind == "hopfield":
        return hopfield_form(disorder.xi, p)
    if which.kind == "leave_one_out":
        return hopfield_form(disorder.xi, p, first=1)
    if which.kind == "sk":
        return sk_form(disorder.J, p)
    t = which.t
    parts = QuadraticForm(np.zeros((p.N, p.N)), p.N * math.sqrt(p.alpha * t))
    if t < 1.0:
        parts = parts + sk_form(disorder.J, p).scaled(math.sqrt(1.0 - t) * SQRT2)
    if t > 0.0:
        parts = parts + hopfield_form(disorder.xi, p).scaled(math.sqrt(t))
    return parts


def interpolation_t_derivative_form(disorder: Disorder, p: ModelParams, t: float) -> QuadraticForm:
    """``dH_t/dt`` as a quadratic form; singular at t in {0, 1}."""
    if not 0.0 < t < 1.0:
        raise DomainError("dH_t/dt requires 0 < t < 1")
    sk = sk_form(disorder.J, p).scaled(-SQRT2 / (2.0 * math.sqrt(1.0 - t)))
    hop = hopfield_form(disorder.xi, p).scaled(1.0 / (2.0 * math.sqrt(t)))
    return (sk + hop).shifted(p.N * math.sqrt(p.alpha) / (2.0 * math.sqrt(t)))


@dataclass(frozen=True)
class EnergyCoefficients:
    """``H = c_sk H_SK + c_hop H_Hop[patterns first..] + const``; feeds the samplers."""

    c_sk: float
    c_hop: float
    first_pattern: int
    const: float
    beta_scale: float = 1.0


def energy_coefficients(which: Hamiltonian, p: ModelParams) -> EnergyCoefficients:
    if which.kind == "hopfield":
        return EnergyCoefficients(0.0, 1.0, 0, 0.0)
    if which.kind == "leave_one_out":
        return EnergyCoefficients(0.0, 1.0, 1, 0.0)
    if which.kind == "sk":
        return EnergyCoefficients(1.0, 0.0, 0, 0.0, which.beta_scale)
    t = which.t
    return EnergyCoefficients(math.sqrt(1.0 - t) * SQRT2, math.sqrt(t), 0, p.N * math.sqrt(p.alpha * t))


# -- incremental cache -----------------------------------------------------

@dataclass(eq=False)
class OverlapCache:
    """Running sums for O(M) / O(N) flip deltas.

    ``m[k] = x . xi^k``; ``sk_field[i] = sum_j (J_ij + J_ji) x_j`` (empty
    when no SK term is active).
    """

    m: np.ndarray
    sk_field: np.ndarray = field(default_factory=lambda: np.zeros(0))


def build_cache(x, disorder: Disorder) -> OverlapCache:
    s = _spins(x).astype(np.float64)
    m = disorder.xi.entries @ s if disorder.xi is not None else np.zeros(0)
    if disorder.J is not None:
        J = disorder.J.entries
        h = (J + J.T) @ s
    else:
        h = np.zeros(0)
    return OverlapCache(np.array(m, dtype=np.float64), np.array(h, dtype=np.float64))


def flip_delta(x, cache: OverlapCache, i: int, which: Hamiltonian, disorder: Disorder,
               p: ModelParams, apply: bool = False) -> tuple[float, float]:
    """Energy change and field-term change for flipping spin ``i``.

    Returns ``(H(x') - H(x), -2 B x_i)``. With ``apply=True`` the flip is
    performed on ``x`` and the cache updated in place.
    """
    s = _spins(x)
    xi_val = float(s[i])
    co = energy_coefficients(which, p)
    dH = 0.0
    if co.c_hop != 0.0:
        col = disorder.xi.entries[co.first_pattern:, i]
        mk = cache.m[co.first_pattern:]
        dsq = float(np.sum(-4.0 * xi_val * col * mk + 4.0 * col * col))
        dH += co.c_hop * (-dsq / math.sqrt(p.N * p.M))
    if co.c_sk != 0.0:
        Jii = disorder.J.entries[i, i]
        dH += co.c_sk * (2.0 * xi_val / math.sqrt(p.N)) * (cache.sk_field[i] - 2.0 * Jii * xi_val)
    dfield = -2.0 * p.B * xi_val
    if apply:
        if cache.m.size:
            cache.m -= 2.0 * xi_val * disorder.xi.entries[:, i]
        if cache.sk_field.size:
            J = disorder.J.entries
            cache.sk_field -= 2.0 * xi_val * (J[:, i] + J[i, :])
        s[i] = -s[i]
    return dH, dfield


def audit_cache(x, cache: OverlapCache, disorder: Disorder, p: ModelParams | None = None) -> float:
    """Worst absolute discrepancy between the cache and a fresh recomputation."""
    fresh = build_cache(x, disorder)
    worst = 0.0
    if cache.m.size or fresh.m.size:
        worst = max(worst, float(np.max(np.abs(cache.m - fresh.m))))
    if cache.sk_field.size:
        worst = max(worst, float(np.max(np.abs(cache.sk_field - fresh.sk_field))))
    return worst


@nb.njit(cache=True, nogil=True)
def _overlap_sweeps(x, m, h, xi, J2, Jdiag, c_hop, c_sk, k0, const, beta, B, U, E_out, m0_out,
                    codes_out):
    """Sequential-scan Metropolis on the overlap cache.

    One row of ``U`` per sweep. Per proposal the Hopfield delta costs O(M)
    and the SK delta O(1); accepted flips update ``m`` in O(M) and ``h`` in
    O(N). A non-empty ``codes_out`` receives the packed state after each
    sweep. Returns the number of accepted flips.
    """
    N = x.size
    M = m.size
    n_sweeps = U.shape[0]
    inv_nm = 1.0 / math.sqrt(N * xi.shape[0]) if M > 0 else 0.0
    inv_n = 1.0 / math.sqrt(N)
    accepted = 0
    for s in range(n_sweeps):
        for i in range(N):
            xv = x[i]
            dH = 0.0
            if c_hop != 0.0:
                acc = 0.0
                for k in range(k0, M):
                    e = xi[k, i]
                    acc += -4.0 * xv * e * m[k] + 4.0 * e * e
                dH -= c_hop * acc * inv_nm
            if c_sk != 0.0:
                dH += c_sk * 2.0 * xv * inv_n * (h[i] - 2.0 * Jdiag[i] * xv)
            w = -beta * dH - 2.0 * B * xv
            if w >= 0.0 or U[s, i] < math.exp(w):
                for k in range(M):
                    m[k] -= 2.0 * xv * xi[k, i]
                if h.size > 0:
                    for j in range(N):
                        h[j] -= 2.0 * xv * J2[j, i]
                x[i] = -xv
                accepted += 1
        E = const
        if c_hop != 0.0:
            sq = 0.0
            for k in range(k0, M):
                sq += m[k] * m[k]
            E -= c_hop * sq * inv_nm
        if c_sk != 0.0:
            sk = 0.0
            for j in range(N):
                sk += x[j] * h[j]
            E -= c_sk * sk * 0.5 * inv_n
        E_out[s] = E
        m0_out[s] = m[0] if M > 0 else 0.0
        if codes_out.size > 0:
            code = 0
            for j in range(N):
                if x[j] > 0:
                    code |= np.int64(1) << j
            codes_out[s] = code
    return accepted


def metropolis_flips(x: SpinConfiguration, cache: OverlapCache, which: Hamiltonian,
                     disorder: Disorder, p: ModelParams, uniforms: np.ndarray, codes=None):
    """Run ``len(uniforms)`` sequential-scan sweeps on ``x`` and ``cache`` in place.

    Returns ``(energies, overlaps_unscaled, accepted)`` per sweep, where the
    overlap is ``x . xi^0``. If ``codes`` (int64, one per sweep) is given it
    receives the packed state after each sweep (N <= 62).
    """
    co = energy_coefficients(which, p)
    U = np.ascontiguousarray(np.atleast_2d(uniforms), dtype=np.float64)
    if U.shape[1] != p.N:
        raise ConfigurationError("need N uniforms per sweep")
    xi = disorder.xi.entries if disorder.xi is not None else np.zeros((0, p.N))
    if co.c_sk != 0.0:
        J = disorder.J.entries
        if cache.sk_field.size != p.N:
            raise ConfigurationError("cache has no SK local field")
        J2 = np.ascontiguousarray(J + J.T)
        Jd = np.ascontiguousarray(np.diag(J))
    else:
        J2 = np.zeros((0, 0))
        Jd = np.zeros(0)
    if co.c_hop != 0.0 and cache.m.size != xi.shape[0]:
        raise ConfigurationError("cache does not match the patterns")
    xs = x.spins.astype(np.float64)
    E = np.empty(U.shape[0])
    m0 = np.empty(U.shape[0])
    acc = _overlap_sweeps(xs, cache.m, cache.sk_field, np.ascontiguousarray(xi), J2, Jd,
                          co.c_hop, co.c_sk, co.first_pattern, co.const,
                          p.beta * co.beta_scale, p.B, U, E, m0,
                          codes if codes is not None else np.zeros(0, dtype=np.int64))
    x.spins[:] = xs.astype(np.int8)
    return E, m0, acc
