"""Shared oracles. These recompute everything by brute force with plain numpy
and never call the package's energy code."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def all_states(N):
    """Rows are configurations; row c has spin i = +1 iff bit i of c is set."""
    c = np.arange(1 << N)
    return np.where((c[:, None] >> np.arange(N)) & 1, 1.0, -1.0)


def naive_hopfield(X, xi, first=0):
    N, M = X.shape[1], xi.shape[0]
    return -((X @ xi[first:].T) ** 2).sum(axis=1) / math.sqrt(N * M)


def naive_sk(X, J):
    N = X.shape[1]
    out = np.empty(X.shape[0])
    for s, x in enumerate(X):
        tot = 0.0
        for i in range(N):
            for j in range(N):
                tot += J[i, j] * x[i] * x[j]
        out[s] = -tot / math.sqrt(N)
    return out


def naive_energies(X, which, xi=None, J=None, t=1.0):
    N = X.shape[1]
    if which == "hopfield":
        return naive_hopfield(X, xi)
    if which == "leave_one_out":
        return naive_hopfield(X, xi, first=1)
    if which == "sk":
        return naive_sk(X, J)
    alpha = xi.shape[0] / N
    return (math.sqrt(1 - t) * math.sqrt(2) * naive_sk(X, J) + math.sqrt(t) * naive_hopfield(X, xi)
            + N * math.sqrt(alpha * t))


def naive_log_weights(X, H, beta, B):
    return -beta * H + B * X.sum(axis=1)


def naive_log_z(lw):
    """Plain-order sum of exponentials after a max shift, then the log."""
    top = lw.max()
    return top + math.log(sum(math.exp(v - top) for v in lw))


def naive_gibbs(lw):
    w = np.exp(lw - lw.max())
    return w / w.sum()


def binomial_law(N):
    """Law of x.xi at infinite temperature with sign patterns: N - 2K, K ~ Bin(N, 1/2)."""
    k = np.arange(N + 1)
    prob = np.array([math.comb(N, int(j)) for j in k], dtype=float) / 2.0**N
    return (N - 2 * k).astype(float), prob


@pytest.fixture
def oracle():
    return dict(states=all_states, energies=naive_energies, log_weights=naive_log_weights,
                log_z=naive_log_z, gibbs=naive_gibbs)


# -- acceptance reporting ----------------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """``criterion(k, title, ok, detail)`` records one PASS/FAIL line, then asserts ``ok``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(k, title, ok, detail=""):
        lines.append((k, title, bool(ok), detail))
        assert ok, f"criterion {k} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k, title, ok, detail in sorted(lines, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {k:>2} {title}: {detail}")
