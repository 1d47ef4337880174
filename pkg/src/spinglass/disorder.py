"""Seeded generation of quenched disorder.

Every random stream is addressed by ``(master_seed, stream_id, role)`` and
drawn from a Philox counter-based generator keyed through
:class:`numpy.random.SeedSequence`. Realization ``k`` can therefore be
rebuilt on its own, in any order, on any worker.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import CouplingMatrix, PatternMatrix

_ROLE_CODES = {"patterns": 0, "couplings": 1, "mc_chain": 2, "mc_swap": 3}

DIST_TAGS = ("bernoulli", "gaussian", "heavytail")


@dataclass(frozen=True)
class DisorderSeed:
    master_seed: int
    stream_id: int = 0
    role: str = "patterns"
    chain_index: int = 0

    def __post_init__(self):
        if self.role not in _ROLE_CODES:
            raise ConfigurationError(f"unknown stream role {self.role!r}")
        for v in (self.master_seed, self.stream_id, self.chain_index):
            if not 0 <= int(v) < 2**64:
                raise ConfigurationError("seed components must be 64-bit unsigned")

    def with_role(self, role: str, chain_index: int = 0) -> "DisorderSeed":
        return replace(self, role=role, chain_index=chain_index)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_id), _ROLE_CODES[self.role], int(self.chain_index)),
        )
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PatternDistribution:
    """Symmetric unit-variance entry law for the patterns.

    ``heavytail`` is a Student-t with ``tail_dof`` degrees of freedom,
    rescaled by sqrt((dof - 2) / dof); with the default dof = 12 the entries
    have finite moments up to order 11 and an infinite 12th moment.
    """

    tag: str = "bernoulli"
    tail_dof: float = 12.0

    def __post_init__(self):
        tag = "heavytail" if self.tag in ("heavy_tail", "heavy-tail") else self.tag
        object.__setattr__(self, "tag", tag)
        if tag not in DIST_TAGS:
            raise ConfigurationError(f"unknown pattern distribution {self.tag!r}")
        if tag == "heavytail" and not self.tail_dof > 2:
            raise DomainError("heavy-tail degrees of freedom must exceed 2 for unit variance")
        if tag == "heavytail" and self.tail_dof <= 11:
            warnings.warn(f"tail_dof = {self.tail_dof:g}: the eleventh moment is infinite")

    @classmethod
    def parse(cls, value) -> "PatternDistribution":
        if isinstance(value, cls):
            return value
        return cls(str(value))

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.tag == "bernoulli":
            return (2 * rng.integers(0, 2, size=shape, dtype=np.int8) - 1).astype(np.float64)
        if self.tag == "gaussian":
            return rng.standard_normal(size=shape)
        nu = self.tail_dof
        return rng.standard_t(nu, size=shape) * np.sqrt((nu - 2.0) / nu)


def gen_patterns(seed: DisorderSeed, dist, N: int, M: int) -> PatternMatrix:
    """Draw an ``M x N`` pattern matrix; row k is pattern k.

    Rows are drawn in order from one stream, so two calls differing only in
    ``M`` share their leading rows.
    """
    dist = PatternDistribution.parse(dist)
    if N < 1 or M < 1:
        raise ConfigurationError("N and M must be positive")
    rng = seed.with_role("patterns").generator()
    return PatternMatrix(dist.sample(rng, (M, N)), dist.tag)


def gen_couplings(seed: DisorderSeed, N: int) -> CouplingMatrix:
    """``N x N`` independent standard Gaussians, not symmetrized."""
    if N < 1:
        raise ConfigurationError("N must be positive")
    rng = seed.with_role("couplings").generator()
    return CouplingMatrix(rng.standard_normal(size=(N, N)))


def gen_scaled_first_pattern(xi: PatternMatrix, s: float, sites=(0, 1)) -> PatternMatrix:
    """Copy of ``xi`` with the first pattern's entries at ``sites`` multiplied by ``s``."""
    if not 0.0 <= s <= 1.0:
        raise DomainError("scale must lie in [0, 1]")
    M, N = xi.entries.shape
    if M < 1 or N < 2:
        raise DomainError("need at least one pattern and two sites")
    out = xi.entries.copy()
    for i in sites:
        out[0, i] *= s
    return PatternMatrix(out, "scaled")
