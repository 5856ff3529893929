"""
Command-line front end.

Usage:
    autodirichlet eval --automaton constant --poly "x" --s 2 --box 1000000
    autodirichlet continue --automaton thue-morse --poly "x" --s "0.5,14.1"
    autodirichlet poles --automaton thue-morse --q 2 --d 1
    autodirichlet certify --automaton constant
    autodirichlet products --q 2 --r 2 --poly "5*x^2-1*x-1" --N 100000 --R 60
    autodirichlet xj --q 2 --r 2 --poly "5*x^2-1*x-1" --N 100000 --R 60

``--automaton`` takes a built-in name (thue-morse, constant, constant(q),
digit-sum-zeta(q,r[,j])) or the path of a JSON automaton file. Reports go
to stdout unless ``--out`` is given; a relative ``--out`` is resolved
against $AUTODIRICHLET_OUTPUT_DIR when that is set.

CSV columns:
    eval, continue: s_re, s_im, value_re, value_im, err, abscissa, method
    poles:          lambda_re, lambda_im, k, l, s_re, s_im
    products:       N, R, A_re, A_im, B_re, B_im, C_re, C_im, D_re, D_im, abs_D_minus_1
    xj:             j, lambda_re, lambda_im, beta_re, beta_im, shift_residual

Each library error exits with its own status code and prints its class
name on stderr.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from .automaton import kernel_closure, load_automaton, named_automaton
from .continuation import (
    Controls,
    SeriesQuery,
    continue_eval,
    direct_sum,
    pole_lattice,
    simple_pole_certificate,
)
from .errors import AutoDirichletError, ParseError
from .polynomial import parse_poly
from .products import ProductConfig, product_ABCD, xj_machinery

__all__ = ["main", "format_float", "parse_complex"]

OUTPUT_DIR_ENV = "AUTODIRICHLET_OUTPUT_DIR"
USAGE_EXIT = 2


def format_float(x: float) -> str:
    return "%.15g" % x


def _round15(x: float):
    x = float(x)
    return float(format_float(x)) if math.isfinite(x) else format_float(x)


def _jsonable(obj):
    """Plain JSON types, with every float rounded to 15 significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round15(obj.real), _round15(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _round15(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    return obj


def parse_complex(text: str) -> complex:
    """Parse "re" or "re,im"."""
    parts = [t.strip() for t in str(text).split(",")]
    if len(parts) not in (1, 2):
        raise ParseError(f"expected 're' or 're,im', got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0)
    except ValueError as exc:
        raise ParseError(f"bad complex number {text!r}") from exc


def _parse_mu(text: str | None, n: int):
    if text is None:
        return None
    try:
        mu = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ParseError(f"bad multi-index {text!r}") from exc
    if len(mu) != n:
        raise ParseError(f"multi-index {text!r} has {len(mu)} entries, expected {n}")
    return mu


def _load_sequence(name: str, q: int | None, n: int):
    path = Path(name)
    if path.suffix == ".json" or path.is_file():
        return load_automaton(path)
    return named_automaton(name, q, n)


def _emit(text: str, out: str | None, default_name: str) -> None:
    target = None
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if out is not None:
        target = Path(out)
        if not target.is_absolute() and env_dir:
            target = Path(env_dir) / target
    elif env_dir:
        target = Path(env_dir) / default_name
    if target is None:
        click.echo(text, nl=False)
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _run(fn):
    """Run a command body, mapping library errors to exit codes."""
    try:
        fn()
    except AutoDirichletError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(exc.exit_code)
    except ValueError as exc:
        click.echo(f"InvalidInput: {exc}", err=True)
        sys.exit(USAGE_EXIT)


def _series_options(f):
    opts = [
        click.option("--automaton", "automaton", required=True, help="Built-in name or JSON file."),
        click.option("--q", type=int, default=None, help="Radix for built-in automata."),
        click.option("--n", type=int, default=1, show_default=True, help="Number of indices."),
        click.option("--poly", required=True, help='Polynomial literal, e.g. "x^2+y^2".'),
        click.option("--mu", default=None, help='Monomial exponent, e.g. "1,0".'),
        click.option("--s", "s_values", multiple=True, required=True, help='"re,im"; repeatable.'),
        click.option("--K", "K", type=int, default=30, show_default=True),
        click.option("--depth", type=int, default=8, show_default=True),
        click.option("--N0", "N0", type=int, default=None),
        click.option("--tol", type=float, default=1e-6, show_default=True),
        click.option("--box", type=int, default=100_000, show_default=True),
        click.option("--workers", type=int, default=1, show_default=True),
        click.option("--out", default=None, type=click.Path()),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json",
                     show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _series_command(name: str, evaluator, automaton, q, n, poly, mu, s_values, K, depth, N0,
                    tol, box, workers, out, fmt):
    def body():
        spec = _load_sequence(automaton, q, n)
        kernel = kernel_closure(spec)
        p = parse_poly(poly, spec.n)
        mu_t = _parse_mu(mu, spec.n)
        controls = Controls(K=K, depth=depth, N0=N0, tol=tol, box=box, workers=workers)
        results = []
        for text in s_values:
            s = parse_complex(text)
            res = evaluator(SeriesQuery(kernel, p, s, mu_t, controls))
            results.append((s, res))
        if fmt == "csv":
            rows = [[s.real, s.imag, r.value.real, r.value.imag, r.err_estimate, r.abscissa_used,
                     r.method] for s, r in results]
            text = _csv(["s_re", "s_im", "value_re", "value_im", "err", "abscissa", "method"], rows)
        else:
            payload = [dict(s=s, **r.to_dict()) for s, r in results]
            text = _json(payload[0] if len(payload) == 1 else payload)
        _emit(text, out, f"{name}.{fmt}")

    _run(body)


@click.group()
def main():
    """Dirichlet series with automatic coefficients."""


@main.command("eval")
@_series_options
def eval_cmd(**kw):
    """Sum the series directly (Re s beyond the abscissa)."""
    _series_command("eval", direct_sum, **kw)


@main.command("continue")
@_series_options
def continue_cmd(**kw):
    """Evaluate the meromorphic continuation at any s."""
    _series_command("continue", continue_eval, **kw)


@main.command("poles")
@click.option("--automaton", "automaton", required=True)
@click.option("--q", type=int, default=None)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--d", type=int, default=1, show_default=True, help="Degree of the polynomial.")
@click.option("--kmin", type=int, default=-2, show_default=True)
@click.option("--kmax", type=int, default=2, show_default=True)
@click.option("--lmax", type=int, default=5, show_default=True)
@click.option("--out", default=None, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def poles_cmd(automaton, q, n, d, kmin, kmax, lmax, out, fmt):
    """List candidate poles from the eigenvalues of the summed transition matrix."""

    def body():
        kernel = kernel_closure(_load_sequence(automaton, q, n))
        lat = pole_lattice(kernel, q, d, range(kmin, kmax + 1), range(0, lmax + 1))
        header = ["lambda_re", "lambda_im", "k", "l", "s_re", "s_im"]
        rows = [list(r) for r in lat.rows()]
        if fmt == "csv":
            text = _csv(header, rows)
        else:
            text = _json([dict(zip(header, r)) for r in rows])
        _emit(text, out, f"poles.{fmt}")

    _run(body)


@main.command("certify")
@click.option("--automaton", "automaton", required=True)
@click.option("--q", type=int, default=None)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--d", type=int, default=1, show_default=True)
@click.option("--mu", default=None)
@click.option("--out", default=None, type=click.Path())
def certify_cmd(automaton, q, n, d, mu, out):
    """Exact simple-root certificate for the eigenvalue 1."""

    def body():
        spec = _load_sequence(automaton, q, n)
        cert = simple_pole_certificate(kernel_closure(spec), q, d, _parse_mu(mu, spec.n))
        _emit(_json(cert.to_dict()), out, "certify.json")

    _run(body)


def _product_options(f):
    opts = [
        click.option("--q", type=int, required=True),
        click.option("--r", type=int, required=True),
        click.option("--j", type=int, default=1, show_default=True, help="zeta = exp(2 pi i j / r)."),
        click.option("--poly", required=True),
        click.option("--N", "N", type=int, default=100_000, show_default=True),
        click.option("--R", "R", type=int, default=60, show_default=True),
        click.option("--out", default=None, type=click.Path()),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@main.command("products")
@_product_options
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def products_cmd(q, r, j, poly, N, R, out, fmt):
    """Partial products A, B, C, D with a convergence trace at powers of ten."""

    def body():
        config = ProductConfig(q, r, parse_poly(poly, 1), j)
        checkpoints = [10**e for e in range(1, 12) if 10**e < N]
        rep = product_ABCD(config, N, R, checkpoints)
        header = ["N", "R", "A_re", "A_im", "B_re", "B_im", "C_re", "C_im", "D_re", "D_im",
                  "abs_D_minus_1"]
        rows = []
        for n_i, R_i, A, B, C, D, gap in rep.rows():
            rows.append([n_i, R_i, A.real, A.imag, B.real, B.imag, C.real, C.imag, D.real, D.imag,
                         gap])
        if fmt == "csv":
            text = _csv(header, rows)
        else:
            text = _json([dict(zip(header, r)) for r in rows])
        _emit(text, out, f"products.{fmt}")

    _run(body)


@main.command("xj")
@_product_options
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json", show_default=True)
def xj_cmd(q, r, j, poly, N, R, out, fmt):
    """lambda(j), beta(j) and the cyclic-shift residuals."""

    def body():
        config = ProductConfig(q, r, parse_poly(poly, 1), j)
        rep = xj_machinery(config, N, R)
        shift = rep.shift_residuals
        if fmt == "csv":
            rows = [[i, complex(rep.lam[i]).real, complex(rep.lam[i]).imag,
                     complex(rep.beta[i]).real, complex(rep.beta[i]).imag, float(shift[i])]
                    for i in range(config.r)]
            text = _csv(["j", "lambda_re", "lambda_im", "beta_re", "beta_im", "shift_residual"], rows)
        else:
            text = _json({
                "lambda": [complex(v) for v in rep.lam],
                "beta": [complex(v) for v in rep.beta],
                "shift_residuals": [float(v) for v in shift],
                "linear_residual": rep.linear_residual,
                "row_identity_residual": rep.row_identity_residual,
                "mat_identity_residual": rep.mat_identity_residual,
                "N": N,
                "R": R,
            })
        _emit(text, out, f"xj.{fmt}")

    _run(body)


if __name__ == "__main__":
    main()
