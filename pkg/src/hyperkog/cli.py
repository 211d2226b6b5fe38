"""Command-line front end: ``hyperkog gen | run | check``.

Matrix files are plain text::

    JKOG 1 <R|C> <n>
    +1 -1 ...                 (n signs)
    a11 a12 ...               (n rows; complex entries as "re im" pairs)

Every number is written with ``repr`` (shortest round-trip form), so a write
followed by a read reproduces the matrix bit for bit.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .driver import Config, run
from .harness import TestSpec, check_decomposition, check_eigenvalues, generate

__all__ = ["MatrixFileError", "write_matrix", "read_matrix", "main"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

MAGIC = "JKOG"
VERSION = "1"


class MatrixFileError(ValueError):
    """A matrix file is malformed."""


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# matrix files
# ---------------------------------------------------------------------------


def _tok(x: float) -> str:
    return repr(float(x))


def format_matrix(G, J) -> str:
    G = np.asarray(G)
    J = np.asarray(J).ravel()
    n = G.shape[0]
    if G.shape != (n, n) or J.shape != (n,):
        raise MatrixFileError("matrix must be square with one sign per row")
    cplx = np.iscomplexobj(G)
    lines = [f"{MAGIC} {VERSION} {'C' if cplx else 'R'} {n}",
             " ".join("+1" if s > 0 else "-1" for s in J)]
    for row in G:
        if cplx:
            lines.append(" ".join(f"{_tok(z.real)} {_tok(z.imag)}" for z in row))
        else:
            lines.append(" ".join(_tok(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> Tuple[np.ndarray, np.ndarray]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise MatrixFileError("missing header or sign line")
    head = lines[0].split()
    if len(head) != 4 or head[0] != MAGIC or head[1] != VERSION or head[2] not in ("R", "C"):
        raise MatrixFileError(f"bad header: {lines[0]!r}")
    try:
        n = int(head[3])
    except ValueError:
        raise MatrixFileError(f"bad order: {head[3]!r}") from None
    if n < 1:
        raise MatrixFileError("order must be positive")
    cplx = head[2] == "C"
    signs = lines[1].split()
    if len(signs) != n or any(s not in ("+1", "-1", "1") for s in signs):
        raise MatrixFileError("sign line must hold n values +1/-1")
    J = np.array([1 if s in ("+1", "1") else -1 for s in signs], dtype=np.int64)
    rows = lines[2:]
    if len(rows) != n:
        raise MatrixFileError(f"expected {n} data rows, found {len(rows)}")
    width = 2 * n if cplx else n
    data = np.empty((n, width))
    for i, ln in enumerate(rows):
        toks = ln.split()
        if len(toks) != width:
            raise MatrixFileError(f"row {i}: expected {width} entries, found {len(toks)}")
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise MatrixFileError(f"row {i}: unparsable entry") from None
        if not all(math.isfinite(v) for v in vals):
            raise MatrixFileError(f"row {i}: non-finite entry")
        data[i] = vals
    if cplx:
        G = data[:, 0::2] + 1j * data[:, 1::2]
    else:
        G = data
    return np.ascontiguousarray(G), J


def write_matrix(path, G, J) -> None:
    Path(path).write_text(format_matrix(G, J))


def read_matrix(path) -> Tuple[np.ndarray, np.ndarray]:
    return parse_matrix(Path(path).read_text())


def _read_vector(path) -> np.ndarray:
    vals = [float(t) for t in Path(path).read_text().split()]
    return np.array(vals)


def _write_vector(path, v) -> None:
    Path(path).write_text("".join(_tok(x) + "\n" for x in v))


def _read_stats(path) -> dict:
    out = {}
    for ln in Path(path).read_text().splitlines():
        if "=" in ln:
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def planted_path(out: Path) -> Path:
    """Sibling file holding the planted eigenvalues of a generated problem."""
    return out.with_name(out.name + ".lambda")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _field(s: str) -> str:
    s = s.lower()
    if s in ("r", "real"):
        return "real"
    if s in ("c", "complex"):
        return "complex"
    raise argparse.ArgumentTypeError("field must be r|real|c|complex")


def cmd_gen(args) -> int:
    spec = TestSpec(order=args.order, field=args.field, range=args.range,
                    eps_floor=args.eps, seed=args.seed)
    g = generate(spec)
    out = Path(args.out)
    try:
        write_matrix(out, g.G0, g.J0)
        _write_vector(planted_path(out), g.planted_eigenvalues)
    except OSError as e:
        raise _IOFailure(str(e)) from e
    print(f"wrote {out} and {planted_path(out)}")
    return EXIT_OK


def _default_tasks() -> int:
    env = os.environ.get("HYPERKOG_TASKS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"HYPERKOG_TASKS must be an integer, got {env!r}") from None


def cmd_run(args) -> int:
    try:
        G0, J0 = read_matrix(args.input)
    except OSError as e:
        raise _IOFailure(str(e)) from e
    tasks = args.tasks if args.tasks is not None else _default_tasks()
    cfg = Config(upsilon=args.upsilon, tasks=tasks, max_virtual_sweeps=args.max_sweeps,
                 accumulate_vectors=args.vectors)
    res = run(G0, J0, cfg)
    st = res.stats
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_vector(out / "sigma.txt", res.Sigma)
        (out / "J.txt").write_text("".join(f"{int(s):+d}\n" for s in res.J))
        if args.vectors:
            write_matrix(out / "U.jkog", res.U, res.J)
            write_matrix(out / "Vinv.jkog", res.V_inv, res.J)
        stats = {
            "steps": st.steps_N,
            "multisteps": st.multisteps,
            "cycles": _tok(st.cycles),
            "off_initial": _tok(st.off_initial),
            "off_final": _tok(st.off_final),
            "outcome": st.outcome,
            "upsilon": _tok(cfg.upsilon),
            "tasks": cfg.tasks,
        }
        (out / "stats.txt").write_text("".join(f"{k}={v}\n" for k, v in stats.items()))
    except OSError as e:
        raise _IOFailure(str(e)) from e
    print(f"outcome={st.outcome} steps={st.steps_N} cycles={st.cycles:.4g}")
    if st.outcome not in ("converged", "no_candidates"):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_check(args) -> int:
    rd = Path(args.result_dir)
    try:
        G0, _ = read_matrix(args.input)
        Sigma = _read_vector(rd / "sigma.txt")
        J = np.array([int(t) for t in (rd / "J.txt").read_text().split()])
        stats = _read_stats(rd / "stats.txt") if (rd / "stats.txt").exists() else {}
        U, _ = read_matrix(rd / "U.jkog")
        V_inv, _ = read_matrix(rd / "Vinv.jkog")
        lam = _read_vector(args.planted) if args.planted else None
    except OSError as e:
        raise _IOFailure(str(e)) from e
    n = G0.shape[0]
    shapes = [Sigma.shape == (n,), J.shape == (n,), U.shape == (n, n), V_inv.shape == (n, n)]
    if lam is not None:
        shapes.append(lam.shape == (n,))
    if not all(shapes):
        raise ValueError("dimension mismatch between input and result files")
    ok = True
    err_d = check_decomposition(G0, U, Sigma, V_inv)
    ok &= err_d <= args.tol_decomp
    print(f"err_decomp={_tok(err_d)}")
    if lam is not None:
        err_e = check_eigenvalues(lam, Sigma, J)
        ok &= err_e <= args.tol_eigen
        print(f"err_eigen={_tok(err_e)}")
    if "cycles" in stats:
        print(f"cycles={stats['cycles']}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperkog",
                                 description="Hyperbolic SVD by the J-Kogbetliantz method.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test problem with known eigenvalues")
    g.add_argument("--order", type=int, required=True)
    g.add_argument("--field", type=_field, default="real")
    g.add_argument("--range", type=int, default=2, choices=(1, 2, 3))
    g.add_argument("--eps", type=float, default=1e-13)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="decompose a matrix file")
    r.add_argument("--input", required=True)
    r.add_argument("--upsilon", type=float, default=1.0)
    r.add_argument("--tasks", type=int, default=None,
                   help="worker threads (default: $HYPERKOG_TASKS or 1)")
    r.add_argument("--max-sweeps", type=int, default=50)
    r.add_argument("--vectors", action=argparse.BooleanOptionalAction, default=True)
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="measure the errors of a computed decomposition")
    c.add_argument("--input", required=True)
    c.add_argument("--result-dir", required=True)
    c.add_argument("--planted", default=None)
    c.add_argument("--tol-decomp", type=float, default=1e-12)
    c.add_argument("--tol-eigen", type=float, default=1e-11)
    c.set_defaults(func=cmd_check)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except _IOFailure as e:
        print(f"hyperkog: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:  # includes MatrixFileError
        print(f"hyperkog: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
