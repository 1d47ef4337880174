"""CSV schemas, key=value config files, run manifests and disorder fixtures."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import OutputError, SchemaError
from .model import CouplingMatrix, Disorder, PatternMatrix

# column -> type code: f float, i int, s string
SCHEMAS: dict[str, list[tuple[str, str]]] = {
    "theorem1": [("alpha", "f"), ("beta", "f"), ("field", "f"), ("f_hop_mean", "f"), ("f_hop_se", "f"),
                 ("f_sk_mean", "f"), ("f_sk_se", "f"), ("residual_mean", "f"), ("residual_se", "f"),
                 ("n_disorder", "i")],
    "figure1": [("beta", "f"), ("field", "f"), ("alpha", "f"), ("f_hop", "f"), ("f_hop_se", "f"),
                ("curve", "f"), ("curve_se", "f"), ("residual", "f"), ("n_hop", "i"), ("n_sk", "i")],
    "overlap_tail": [("beta", "f"), ("alpha", "f"), ("r", "f"), ("tail_mean", "f"), ("tail_se", "f"),
                     ("fitted_rate", "f"), ("theory_rate", "f"), ("theory_prefactor", "f"),
                     ("n_disorder", "i")],
    "exp_moment": [("N", "i"), ("alpha", "f"), ("beta", "f"), ("c", "f"), ("mean", "f"), ("se", "f"),
                   ("n_disorder", "i")],
    "interpolation": [("t", "f"), ("f_t_mean", "f"), ("f_t_se", "f"), ("dfdt_mean", "f"),
                      ("dfdt_se", "f"), ("n_disorder", "i")],
    "stein": [("kind", "s"), ("t", "f"), ("alpha", "f"), ("lhs_mean", "f"), ("lhs_se", "f"),
              ("rhs_mean", "f"), ("rhs_se", "f"), ("diff_se", "f"), ("n_disorder", "i")],
    "hopfield_stein": [("alpha", "f"), ("M", "i"), ("lhs_mean", "f"), ("lhs_se", "f"),
                       ("first_mean", "f"), ("first_se", "f"), ("remainder_scaled", "f"),
                       ("remainder_scaled_se", "f"), ("n_disorder", "i")],
    "concentration": [("N", "i"), ("mean_f", "f"), ("moment", "f"), ("moment_se", "f"),
                      ("n_disorder", "i"), ("d", "f"), ("slope", "f"), ("predicted", "f")],
    "exact": [("N", "i"), ("M", "i"), ("beta", "f"), ("field", "f"), ("dist", "s"),
              ("hamiltonian", "s"), ("seed", "i"), ("stream", "i"), ("log_Z", "f"),
              ("free_energy", "f")],
    "mc": [("N", "i"), ("M", "i"), ("beta", "f"), ("field", "f"), ("dist", "s"), ("hamiltonian", "s"),
           ("seed", "i"), ("stream", "i"), ("free_energy_mean", "f"), ("free_energy_se", "f"),
           ("statistical_se", "f"), ("truncation_se", "f"), ("burn_in", "i"), ("n_nodes", "i")],
    "mc_nodes": [("node", "i"), ("beta", "f"), ("effective_beta", "f"), ("energy_mean", "f"),
                 ("energy_se", "f"), ("swap_rate", "f")],
    "disorder": [("kind", "s"), ("row", "i"), ("col", "i"), ("value", "f")],
}


def _fmt(value, code: str) -> str:
    if code == "f":
        return format(float(value), ".17g")
    if code == "i":
        return str(int(value))
    return str(value)


def _parse(text: str, code: str):
    if code == "f":
        return float(text)
    if code == "i":
        return int(text)
    return text


def schema_columns(tag: str) -> list[str]:
    if tag not in SCHEMAS:
        raise SchemaError(f"unknown schema {tag!r}")
    return [c for c, _ in SCHEMAS[tag]]


def write_csv(rows, tag: str, path) -> Path:
    """Write ``rows`` (mappings) under schema ``tag``; floats keep 17 significant digits."""
    cols = SCHEMAS.get(tag)
    if cols is None:
        raise SchemaError(f"unknown schema {tag!r}")
    names = [c for c, _ in cols]
    lines = []
    for k, row in enumerate(rows):
        missing = [c for c in names if c not in row]
        if missing:
            raise SchemaError(f"row {k} lacks columns {missing} for schema {tag!r}")
        lines.append([_fmt(row[c], code) for c, code in cols])
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            w.writerows(lines)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path, tag: str | None = None, required=()) -> list[dict]:
    """Read a CSV written by :func:`write_csv`.

    With ``tag`` the header must match the schema and values are typed;
    otherwise numeric-looking values are returned as floats.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            body = list(r)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if header is None:
        raise SchemaError(f"{path} has no header row")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path} lacks columns {missing}")
    if tag is not None:
        if header != schema_columns(tag):
            raise SchemaError(f"{path} header does not match schema {tag!r}")
        codes = [code for _, code in SCHEMAS[tag]]
    else:
        codes = None
    out = []
    for line in body:
        if codes is not None:
            out.append({h: _parse(v, c) for h, v, c in zip(header, line, codes)})
        else:
            row = {}
            for h, v in zip(header, line):
                try:
                    row[h] = float(v)
                except ValueError:
                    row[h] = v
            out.append(row)
    return out


def detect_schema(path) -> str | None:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    for tag in SCHEMAS:
        if header == schema_columns(tag):
            return tag
    return None


# -- config files ------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"config line {n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise SchemaError(f"config line {n}: empty key")
        out[k.replace("-", "_")] = v
    return out


def format_config_text(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items() if v is not None)


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


# -- manifests ---------------------------------------------------------------

MANIFEST = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write_text(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OutputError(f"cannot write {path}: {exc}") from exc


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, config: dict, outputs, master_seed: int, started: str,
                   finished: str | None = None, version: str | None = None) -> Path:
    """Write ``manifest.json`` after all outputs exist; checksums are sha256."""
    from . import __version__

    out_dir = Path(out_dir)
    files = {}
    for p in outputs:
        p = Path(p)
        try:
            files[p.name] = sha256_file(p)
        except OSError as exc:
            raise OutputError(f"cannot checksum {p}: {exc}") from exc
    doc = {
        "config": {k: v for k, v in config.items()},
        "version": version or __version__,
        "master_seed": int(master_seed),
        "started": started,
        "finished": finished or utc_now(),
        "files": files,
    }
    path = out_dir / MANIFEST
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


def read_manifest(out_dir) -> dict:
    try:
        return json.loads((Path(out_dir) / MANIFEST).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OutputError(f"cannot read manifest in {out_dir}: {exc}") from exc


def verify_manifest(out_dir) -> list[str]:
    """Names of listed files whose checksum no longer matches (or that vanished)."""
    out_dir = Path(out_dir)
    bad = []
    for name, digest in read_manifest(out_dir)["files"].items():
        p = out_dir / name
        if not p.exists() or sha256_file(p) != digest:
            bad.append(name)
    return bad


# -- disorder fixtures -------------------------------------------------------

def disorder_rows(d: Disorder):
    for kind, mat in (("xi", d.xi), ("J", d.J)):
        if mat is None:
            continue
        a = mat.entries
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                yield dict(kind=kind, row=i, col=j, value=a[i, j])


def dump_disorder(d: Disorder, path) -> Path:
    return write_csv(list(disorder_rows(d)), "disorder", path)


def load_disorder(path, dist_tag: str = "gaussian") -> Disorder:
    rows = read_csv(path, "disorder")
    mats = {}
    for kind in ("xi", "J"):
        sel = [r for r in rows if r["kind"] == kind]
        if not sel:
            mats[kind] = None
            continue
        shape = (max(r["row"] for r in sel) + 1, max(r["col"] for r in sel) + 1)
        a = np.zeros(shape)
        for r in sel:
            a[r["row"], r["col"]] = r["value"]
        mats[kind] = a
    xi = PatternMatrix(mats["xi"], dist_tag) if mats["xi"] is not None else None
    J = CouplingMatrix(mats["J"]) if mats["J"] is not None else None
    return Disorder(xi, J)
