"""File formats: trace CSV, sweep CSV, key=value config files, problem files."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from ..core import GradientOracle
from ..problems import arctan_quadratic_oracle, fractional_oracle, quadratic_oracle
from ..solvers import IterationRecord, RunTrace, Status

TRACE_COLUMNS = ["k", "f", "grad_norm", "h_k", "alpha_k", "r_k", "ls_evals", "dist_sq"]
PROBLEM_FORMAT = "ipcopt-problem"
PROBLEM_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _opt_float(s: str):
    return None if s == "" else float(s)


def trace_to_csv(trace: RunTrace, meta: dict | None = None) -> str:
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={value}\n")
    buf.write(f"# status={trace.status.value}\n")
    buf.write(f"# total_grad_evals={trace.total_grad_evals}\n")
    with_fallback = any(r.fallback for r in trace.records) or (meta or {}).get("trapezoid_mode") == "true"
    columns = TRACE_COLUMNS + (["trapezoid_fallback"] if with_fallback else [])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in trace.records:
        row = [r.k, fmt(r.f), fmt(r.grad_norm), fmt(r.h_k), fmt(r.alpha_k), fmt(r.r_k), r.ls_evals, fmt(r.dist_sq)]
        if with_fallback:
            row.append(int(r.fallback))
        writer.writerow(row)
    return buf.getvalue()


def write_trace(path, trace: RunTrace, meta: dict | None = None) -> None:
    atomic_write_text(path, trace_to_csv(trace, meta))


def parse_trace(text: str):
    """Inverse of :func:`trace_to_csv`; returns ``(trace, meta)``."""
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line:
            body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames[: len(TRACE_COLUMNS)] != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace columns {reader.fieldnames}")
    records = [
        IterationRecord(
            k=int(row["k"]),
            f=float(row["f"]),
            grad_norm=float(row["grad_norm"]),
            h_k=_opt_float(row["h_k"]),
            alpha_k=_opt_float(row["alpha_k"]),
            r_k=_opt_float(row["r_k"]),
            ls_evals=int(row["ls_evals"]),
            dist_sq=_opt_float(row["dist_sq"]),
            fallback=row.get("trapezoid_fallback", "0") == "1",
        )
        for row in reader
    ]
    trace = RunTrace(
        records=records,
        status=Status(meta.pop("status")),
        total_grad_evals=int(meta.pop("total_grad_evals")),
    )
    return trace, meta


def read_trace(path):
    return parse_trace(Path(path).read_text())


def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment, dashes equal underscores."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


# problem files


def save_problem(path, oracle: GradientOracle, generator: str, seed: int, **params) -> None:
    arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in oracle.data.items() if isinstance(v, np.ndarray)}
    scalars = {k: np.float64(v) for k, v in oracle.data.items() if isinstance(v, float)}
    header = {
        "format": np.str_(PROBLEM_FORMAT),
        "version": np.int64(PROBLEM_VERSION),
        "generator": np.str_(generator),
        "seed": np.int64(seed),
        "n": np.int64(oracle.dim),
    }
    if oracle.lipschitz is not None:
        header["lipschitz"] = np.float64(oracle.lipschitz)
    if oracle.x0 is not None:
        arrays["x0"] = np.ascontiguousarray(oracle.x0, dtype=np.float64)
    for k, v in params.items():
        header[f"param_{k}"] = np.float64(v)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **header, **scalars, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_problem(path):
    """Rebuild an oracle from a problem file; returns ``(oracle, header)``."""
    with np.load(path, allow_pickle=False) as z:
        d = {k: z[k] for k in z.files}
    if str(d.get("format")) != PROBLEM_FORMAT:
        raise ValueError(f"{path} is not an {PROBLEM_FORMAT} file")
    version = int(d["version"])
    if version != PROBLEM_VERSION:
        raise ValueError(f"unsupported problem file version {version}")
    generator = str(d["generator"])
    seed = int(d["seed"])
    x0 = d.get("x0")
    if generator == "fractional":
        oracle = fractional_oracle(d["Q"], d["c"], float(d["q_const"]), d["r"], float(d["t_const"]), x0=x0, seed=seed)
    elif generator == "arctan_quadratic":
        oracle = arctan_quadratic_oracle(d["A"], d["B"], d["q"], x0=x0, seed=seed, lipschitz=float(d["lipschitz"]))
    elif generator == "quadratic":
        oracle = quadratic_oracle(d["hessian_diag"], d["x_star"], x0=x0, seed=seed)
    else:
        raise ValueError(f"unknown generator {generator!r}")
    header = {"generator": generator, "seed": seed, "n": int(d["n"]), "version": version}
    header.update({k[len("param_"):]: float(v) for k, v in d.items() if k.startswith("param_")})
    return oracle, header
