"""Command-line front end.

Every subcommand writes its CSV, an SVG where one applies, and a
``manifest.json`` into ``--out``. Values come from ``--config FILE``
(key = value lines named like the flags) with flags taking precedence.
Exit codes: 0 ok, 2 usage, 3 I/O, 4 engine capacity, 5 precondition.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import experiments as ex
from .disorder import DIST_TAGS, DisorderSeed
from .errors import ConfigurationError, OutputError, SpinGlassError
from .exact import ExactEngine
from .io import (
    format_config_text,
    load_config,
    parse_config_text,
    utc_now,
    write_csv,
    write_manifest,
)
from .mc import TemperingConfig, thermo_integration
from .model import SQRT2, Hamiltonian, ModelParams
from .plotting import PLOT_SPECS, emit_svg_plot

COMMANDS = ("exact", "mc", "theorem1", "figure1", "overlap-tail", "exp-moment", "interpolate",
            "stein-check", "concentration", "plot")

# per-command defaults; anything absent and listed in REQUIRED must be given
DEFAULTS = {
    "exact": dict(field=0.0, dist="bernoulli", seed=0, stream=0, hamiltonian="hopfield", t=1.0,
                  cap=26),
    "mc": dict(field=0.0, dist="bernoulli", seed=0, stream=0, hamiltonian="hopfield", t=1.0,
               nodes=17, sweeps=4000, burn_in=500),
    "theorem1": dict(n=16, alphas="4,16,64", beta=0.5, field=0.0, dist="gaussian", seed=0,
                     realizations=200, engine="exact"),
    "figure1": dict(n=20, alphas="1:50", panels="1:0,2:5", dist="bernoulli", seed=0,
                    realizations=1, n_sk=100, engine="mc", nodes=17, sweeps=4000),
    "overlap-tail": dict(n=16, alpha=16.0, beta=0.5, field=0.0, dist="bernoulli", seed=0,
                         realizations=100, r_max=8, engine="exact"),
    "exp-moment": dict(ns="8,12,16", alpha=16.0, beta=0.5, field=0.0, dist="bernoulli", seed=0,
                       realizations=100, engine="exact"),
    "interpolate": dict(n=14, alpha=64.0, beta=0.5, field=0.0, dist="gaussian", seed=0,
                        realizations=200, t_grid="0,0.25,0.5,0.75,1"),
    "stein-check": dict(kind="sk", n=10, alpha=2.0, alphas="4,16", beta=0.5, field=0.0,
                        dist="gaussian", seed=0, t=0.5, realizations=2000),
    "concentration": dict(ns="8,12,16", alpha=16.0, beta=0.5, field=0.0, dist="bernoulli",
                          seed=0, d=2.0, realizations=500, engine="exact"),
    "plot": dict(),
}
REQUIRED = {"exact": ("n", "beta"), "mc": ("n", "beta"), "plot": ("csv",)}


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    m: int | None = None
    alpha: float | None = None
    beta: float | None = None
    field: float | None = None
    dist: str | None = None
    seed: int | None = None
    stream: int | None = None
    realizations: int | None = None
    workers: int | None = None
    out: str | None = None
    engine: str | None = None
    hamiltonian: str | None = None
    t: float | None = None
    cap: int | None = None
    nodes: int | None = None
    sweeps: int | None = None
    burn_in: int | None = None
    alphas: str | None = None
    ns: str | None = None
    panels: str | None = None
    n_sk: int | None = None
    r_max: int | None = None
    c: float | None = None
    d: float | None = None
    t_grid: str | None = None
    kind: str | None = None
    csv: str | None = None
    plot: int | None = None

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def to_text(self) -> str:
        return format_config_text({k: _render(v) for k, v in self.to_dict().items()})

    @classmethod
    def from_values(cls, values: dict) -> "RunConfig":
        types = _field_types()
        known = set(types)
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        typed = {}
        for k, v in values.items():
            if v is None:
                continue
            try:
                typed[k] = types[k](v) if isinstance(v, str) else v
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {k}: {v!r}") from exc
        if "command" not in typed:
            raise ConfigurationError("config lacks a command")
        return cls(**typed)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_values(parse_config_text(text))

    # -- derived ------------------------------------------------------------
    def params(self) -> ModelParams:
        return ModelParams(self.n, self.m, self.beta, self.field or 0.0, pattern_dist=self.dist)

    def alpha_grid(self) -> list[float]:
        return parse_grid(self.alphas)

    def n_grid(self) -> list[int]:
        return [int(v) for v in parse_grid(self.ns)]


def _render(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _field_types() -> dict:
    out = {}
    for f in fields(RunConfig):
        t = str(f.type)
        out[f.name] = int if t.startswith("int") else float if t.startswith("float") else str
    return out


def parse_grid(text: str) -> list[float]:
    """``"4,16,64"`` or an inclusive integer range ``"1:50"`` (mixable)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b = (int(s) for s in part.split(":"))
            out.extend(float(v) for v in range(a, b + 1))
        else:
            out.append(float(part))
    if not out:
        raise ConfigurationError(f"empty grid {text!r}")
    return out


def parse_panels(text: str) -> list[tuple[float, float]]:
    out = []
    for part in text.split(","):
        b, f = part.split(":")
        out.append((float(b), float(f)))
    return out


def resolve_m(values: dict) -> dict:
    """Fill ``m`` from ``alpha * n`` (exact rational check) or ``alpha`` from ``m``."""
    n, m, alpha = values.get("n"), values.get("m"), values.get("alpha")
    if n is None:
        return values
    if alpha is not None:
        M = Fraction(str(alpha)) * int(n)
        if M.denominator != 1:
            raise ConfigurationError(f"alpha * N = {float(M):g} is not an integer")
        if m is not None and int(m) != M:
            raise ConfigurationError(f"--m {m} disagrees with alpha * N = {int(M)}")
        values["m"] = int(M)
    elif m is not None:
        values["alpha"] = int(m) / int(n)
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--n", type=int, help="number of sites N")
    common.add_argument("--m", type=int, help="number of patterns M")
    common.add_argument("--alpha", type=float, help="pattern ratio M/N (with --n)")
    common.add_argument("--beta", type=float, help="inverse temperature")
    common.add_argument("--field", type=float, help="external field B")
    common.add_argument("--dist", choices=DIST_TAGS, help="pattern distribution")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--stream", type=int, help="disorder stream (single-realization runs)")
    common.add_argument("--realizations", type=int, help="disorder realizations")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="key = value config file; flags override it")
    common.add_argument("--engine", choices=ex.ENGINES)
    common.add_argument("--hamiltonian", choices=Hamiltonian.KINDS)
    common.add_argument("--t", type=float, help="interpolation parameter")
    common.add_argument("--cap", type=int, help="exact enumeration site cap")
    common.add_argument("--nodes", type=int, help="tempering ladder size")
    common.add_argument("--sweeps", type=int, help="measurement sweeps")
    common.add_argument("--burn-in", dest="burn_in", type=int, help="initial burn-in sweeps")
    common.add_argument("--alphas", help="alpha grid, e.g. 4,16,64 or 9:25")
    common.add_argument("--ns", help="size grid, e.g. 8,12,16")
    common.add_argument("--panels", help="beta:B pairs, e.g. 1:0,2:5")
    common.add_argument("--n-sk", dest="n_sk", type=int, help="SK realizations for the baseline")
    common.add_argument("--r-max", dest="r_max", type=int, help="largest tail threshold")
    common.add_argument("--c", type=float, help="exponential-moment parameter")
    common.add_argument("--d", type=float, help="moment order")
    common.add_argument("--t-grid", dest="t_grid", help="interpolation grid")
    common.add_argument("--kind", choices=("sk", "hopfield"), help="which Stein term")
    common.add_argument("--plot", type=int, choices=(0, 1), help="render SVG next to the CSV")

    parser = _Parser(prog="spinglass", description="Hopfield and SK free energies: exact "
                     "enumeration, tempering and the experiments built on them.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "plot":
            sp.add_argument("csv", nargs="?", default=argparse.SUPPRESS, help="CSV to render")
    return parser


def parse_cli(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    cmd = ns.pop("command")
    cfg_path = ns.pop("config", None)
    values = {}
    if cfg_path is not None:
        values.update(load_config(cfg_path))
        values.pop("command", None)
    types = _field_types()
    values = {k: types[k](v) for k, v in values.items() if k in types}
    values.update(ns)
    for k, v in DEFAULTS[cmd].items():
        if k == "alpha" and values.get("m") is not None:
            continue
        values.setdefault(k, v)
    missing = [k for k in REQUIRED.get(cmd, ()) if values.get(k) is None]
    if cmd in ("exact", "mc") and values.get("m") is None and values.get("alpha") is None:
        missing.append("m or alpha")
    if missing:
        raise ConfigurationError(f"{cmd}: missing required {', '.join(missing)}")
    values.setdefault("out", str(Path("runs") / cmd))
    values.setdefault("plot", 1)
    return RunConfig.from_values({"command": cmd, **resolve_m(values)})


# -- command runners ----------------------------------------------------------

def _engine(cfg: RunConfig) -> ex.EngineSpec:
    kw = {}
    if cfg.nodes is not None:
        kw["n_nodes"] = cfg.nodes
    if cfg.sweeps is not None:
        kw["measure"] = cfg.sweeps
    return ex.EngineSpec(cfg.engine or "exact", **kw)


def _hamiltonian(cfg: RunConfig) -> Hamiltonian:
    kind = cfg.hamiltonian or "hopfield"
    if kind == "sk":
        return Hamiltonian.sk(SQRT2)
    if kind == "interpolated":
        return Hamiltonian.interpolated(cfg.t)
    return Hamiltonian(kind)


def run_exact(cfg: RunConfig):
    p = cfg.params()
    which = _hamiltonian(cfg)
    seed = DisorderSeed(cfg.seed, cfg.stream)
    d = ex.make_disorder(seed, p, patterns=which.uses_patterns, couplings=which.uses_couplings)
    r = ExactEngine(cap=cfg.cap).run(d, p, which)
    row = dict(N=p.N, M=p.M, beta=p.beta, field=p.B, dist=p.pattern_dist, hamiltonian=which.label(),
               seed=cfg.seed, stream=cfg.stream, log_Z=r.log_Z, free_energy=r.free_energy)
    return {"exact": [row]}


def run_mc(cfg: RunConfig):
    p = cfg.params()
    which = _hamiltonian(cfg)
    seed = DisorderSeed(cfg.seed, cfg.stream)
    d = ex.make_disorder(seed, p, patterns=which.uses_patterns, couplings=which.uses_couplings)
    tc = TemperingConfig.for_beta(p.beta, n=cfg.nodes, measure=cfg.sweeps, burn_in=cfg.burn_in)
    ti = thermo_integration(d, p, which, cfg=tc, seed=seed)
    row = dict(N=p.N, M=p.M, beta=p.beta, field=p.B, dist=p.pattern_dist, hamiltonian=which.label(),
               seed=cfg.seed, stream=cfg.stream, free_energy_mean=ti.estimate.mean,
               free_energy_se=ti.estimate.std_error, statistical_se=ti.statistical_error,
               truncation_se=ti.truncation_error,
               burn_in=ti.pt.burn_in if ti.pt is not None else 0, n_nodes=len(ti.nodes))
    nodes = []
    if ti.pt is not None:
        pt = ti.pt
        rates = list(pt.swap_acceptance) + [math.nan]
        for k, (b, be, e) in enumerate(zip(pt.ladder, pt.effective_betas, pt.estimates["H"])):
            nodes.append(dict(node=k, beta=b, effective_beta=be, energy_mean=e.mean,
                              energy_se=e.std_error, swap_rate=rates[k]))
    return {"mc": [row], "mc_nodes": nodes}


def run_theorem1(cfg: RunConfig):
    tab = ex.run_theorem1(cfg.alpha_grid(), cfg.beta, cfg.field, cfg.n, cfg.realizations, cfg.dist,
                          _engine(cfg), cfg.seed, cfg.workers)
    return {"theorem1": tab.as_rows()}


def run_figure1(cfg: RunConfig):
    data = ex.run_figure1(cfg.n, [int(a) if a == int(a) else a for a in cfg.alpha_grid()],
                          parse_panels(cfg.panels), cfg.n_sk, cfg.realizations, cfg.dist,
                          _engine(cfg), cfg.seed, cfg.workers)
    return {"figure1": data.as_rows()}


def run_overlap_tail(cfg: RunConfig):
    fit = ex.run_overlap_tail(cfg.params(), cfg.r_max, cfg.realizations, _engine(cfg), cfg.seed,
                              cfg.workers)
    return {"overlap_tail": fit.as_rows()}


def run_exp_moment(cfg: RunConfig):
    a = 0.5 - cfg.beta / math.sqrt(cfg.alpha)
    c = cfg.c if cfg.c is not None else max(a, 0.0) / 2.0
    res = ex.run_exp_moment(cfg.n_grid(), cfg.alpha, cfg.beta, c, cfg.field, cfg.dist,
                            cfg.realizations, _engine(cfg), cfg.seed, cfg.workers)
    return {"exp_moment": res.as_rows()}


def run_interpolate(cfg: RunConfig):
    scan = ex.run_interpolation_scan(cfg.params(), parse_grid(cfg.t_grid), cfg.realizations,
                                     cfg.seed, cfg.workers)
    return {"interpolation": scan.as_rows()}


def run_stein(cfg: RunConfig):
    if cfg.kind == "hopfield":
        res = ex.run_hopfield_stein_check(cfg.n, cfg.alpha_grid(), cfg.beta, cfg.field,
                                          cfg.realizations, cfg.seed, cfg.workers)
        return {"hopfield_stein": res.as_rows()}
    res = ex.run_stein_check(cfg.params(), cfg.t, cfg.realizations, cfg.seed, cfg.workers)
    return {"stein": [res.as_row()]}


def run_concentration(cfg: RunConfig):
    fit = ex.run_concentration(cfg.n_grid(), cfg.alpha, cfg.beta, cfg.field, cfg.d, cfg.realizations,
                               cfg.dist, _engine(cfg), cfg.seed, cfg.workers)
    return {"concentration": fit.as_rows()}


RUNNERS = {
    "exact": run_exact, "mc": run_mc, "theorem1": run_theorem1, "figure1": run_figure1,
    "overlap-tail": run_overlap_tail, "exp-moment": run_exp_moment,
    "interpolate": run_interpolate, "stein-check": run_stein, "concentration": run_concentration,
}


def execute(cfg: RunConfig) -> list[Path]:
    """Run ``cfg`` and write its outputs; returns the written paths."""
    if cfg.command == "plot":
        return [emit_svg_plot(cfg.csv, Path(cfg.out) / (Path(cfg.csv).stem + ".svg")
                              if cfg.out else None)]
    started = utc_now()
    tables = RUNNERS[cfg.command](cfg)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    written = []
    for tag, rows in tables.items():
        path = write_csv(rows, tag, out / f"{tag}.csv")
        written.append(path)
        if cfg.plot and rows and (tag == "figure1" or tag in PLOT_SPECS):
            written.append(emit_svg_plot(path, tag=tag))
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    written.append(out / "config.txt")
    write_manifest(out, cfg.to_dict(), written, cfg.seed or 0, started)
    return written


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    warnings.simplefilter("default")
    try:
        cfg = parse_cli(argv)
        for path in execute(cfg):
            print(path)
    except SpinGlassError as exc:
        print(f"spinglass: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"spinglass: error: {exc}", file=sys.stderr)
        return OutputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
