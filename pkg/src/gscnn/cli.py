"""Command-line entry point ``gscnn``.

Reports go to files (CSV by default, JSON on request); progress and summaries
go to standard error. Exit codes: 0 success, 1 input/output failure, 2 a
tolerance violated under ``--check``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_IO, EXIT_CHECK = 0, 1, 2

#: environment variable naming the default report directory
OUTPUT_DIR_ENV = "GSCNN_OUTPUT_DIR"


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _out_path(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return _default_dir() / f"{default_name}.{args.format}"


def _default_dir() -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    base.mkdir(parents=True, exist_ok=True)
    return base


def _write(rows, args, name, columns=None) -> Path:
    from .harness import write_rows

    path = _out_path(args, name)
    write_rows(rows, path, args.format, columns)
    _log(f"wrote {path}")
    return path


def _common(p, out=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", action="store_true", help="exit 2 when a tolerance is violated")
    if out:
        p.add_argument("--out", help=f"report path (default: ${OUTPUT_DIR_ENV} or cwd)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_equivariance(args) -> int:
    from .harness import TABLE_D_ROWS, run_table_d

    rows = TABLE_D_ROWS
    if args.rows:
        rows = [r for r in TABLE_D_ROWS if r[1] in args.rows]
    t0 = time.perf_counter()
    table = run_table_d(
        args.seed, args.L, args.n_signals, args.n_rotations, args.precision, args.N, rows, args.threads
    )
    for r in table:
        _log(f"{r.row_label:<48s} {r.mean_error:.3e}")
    _log(f"{len(table)} rows in {time.perf_counter() - t0:.1f}s")
    _write(table, args, "equivariance")
    if args.plot:
        _plot_table(table, args.plot)
    if not args.check:
        return EXIT_OK
    exact_tol = 1e-10 if args.precision == "double" else 1e-5
    bad = [r.row_label for r in table if r.oversample == 1 and "relu" not in r.operator and r.mean_error >= exact_tol]
    for op in ("s2_relu", "so3_relu"):
        errs = [r.mean_error for r in table if r.operator == op]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            bad.append(f"{op} not decreasing with oversampling")
    for b in bad:
        _log(f"FAIL {b}")
    return EXIT_CHECK if bad else EXIT_OK


def cmd_cost(args) -> int:
    from .costmodel import efficiency_curve

    rows = efficiency_curve(args.L, args.K, args.cg_storage)
    for r in rows:
        _log(f"L={r['L']:<4d} K={r['K']} flop factor {r['flop_factor']:.2f}  memory factor {r['mem_factor']:.2f}")
    _write(rows, args, "cost")
    if args.plot:
        _plot_cost(rows, args.plot)
    if args.check:
        f = [r["flop_factor"] for r in rows if r["L"] >= 16]
        if any(b <= a for a, b in zip(f, f[1:])):
            _log("FAIL flop factor not increasing in L")
            return EXIT_CHECK
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    from .sampling import S2Grid, SO3Grid, sht_forward, sht_inverse, so3_forward, so3_inverse
    from .signals import random_signal, relative_error

    rows = []
    for L in args.L:
        f = random_signal(L, "sphere", args.seed)
        e = relative_error(sht_forward(sht_inverse(f, S2Grid(L))), f)
        rows.append({"domain": "s2", "L": L, "N": 0, "max_rel_error": e})
        for N in sorted({min(L, n) for n in (args.N or [L, 4])}):
            g = random_signal(L, "so3", args.seed, N=N)
            e = relative_error(so3_forward(so3_inverse(g, SO3Grid(L, N)), L, N), g)
            rows.append({"domain": "so3", "L": L, "N": N, "max_rel_error": e})
    worst = max(r["max_rel_error"] for r in rows)
    for r in rows:
        _log(f"{r['domain']:<4s} L={r['L']:<4d} N={r['N']:<4d} error {r['max_rel_error']:.2e}")
    _log(f"max error {worst:.2e}")
    _write(rows, args, "roundtrip")
    return EXIT_CHECK if args.check and worst >= 1e-12 else EXIT_OK


def cmd_mixing(args) -> int:
    from .mixing import mixing_set

    ells = [args.ell] if args.ell is not None else range(args.L)
    if args.ell is not None and not 0 <= args.ell < args.L:
        _log(f"--ell must lie in [0, {args.L})")
        return EXIT_IO
    P = mixing_set(args.L, args.kind)
    rows = []
    for l in ells:
        for a, b in P[l]:
            rows.append({"L": args.L, "ell": l, "l1": a, "l2": b})
            if not args.undirected and a != b:
                rows.append({"L": args.L, "ell": l, "l1": b, "l2": a})
    rows.sort(key=lambda r: (r["ell"], r["l1"], r["l2"]))
    what = "undirected" if args.undirected else "ordered"
    for l in ells:
        _log(f"ell={l}: {sum(r['ell'] == l for r in rows)} {what} pairs ({args.kind})")
    _write(rows, args, "mixing", ["L", "ell", "l1", "l2"])
    return EXIT_OK


def cmd_square(args) -> int:
    from .harness import gaunt_squaring, pointwise_square
    from ._rng import derive_seed
    from .signals import random_signal, relative_error

    rows = []
    for i in range(args.n_signals):
        f = random_signal(args.L, "sphere", derive_seed(args.seed, i))
        e = relative_error(gaunt_squaring(f), pointwise_square(f, 2))
        rows.append({"signal": i, "L": args.L, "seed": args.seed, "rel_error": e})
    worst = max(r["rel_error"] for r in rows)
    _log(f"Gaunt vs pointwise squaring, {len(rows)} signals at L={args.L}: max error {worst:.2e}")
    _write(rows, args, "square")
    return EXIT_CHECK if args.check and worst >= 1e-10 else EXIT_OK


def cmd_filter(args) -> int:
    from .filters import DiracFilterS2, s2_dirac_to_harmonic, so3_dirac_to_harmonic
    from .io import read_filter_config, write_signal_csv

    d = read_filter_config(args.config)
    if isinstance(d, DiracFilterS2):
        psi = s2_dirac_to_harmonic(d, args.L)
    else:
        psi = so3_dirac_to_harmonic(d, args.L, args.N)
    path = Path(args.out) if args.out else _default_dir() / "filter.csv"
    write_signal_csv(psi, path)
    _log(f"wrote {path} ({psi!r}, norm {psi.norm():.6g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise OSError("plotting needs matplotlib (pip install 'artifact[plot]')") from exc
    return plt


def _plot_table(table, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 5))
    y = np.arange(len(table))
    ax.barh(y, [max(r.mean_error, 1e-17) for r in table])
    ax.set_yticks(y, [r.row_label for r in table], fontsize=7)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("mean relative equivariance error")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    _log(f"wrote {path}")


def _plot_cost(rows, path):
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    Ls = [r["L"] for r in rows]
    for ax, key, title in zip(axes, ("flop_factor", "mem_factor"), ("flops", "memory")):
        ax.plot(Ls, [r[key] for r in rows], marker="o")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("L")
        ax.set_ylabel("reduction factor")
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    _log(f"wrote {path}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gscnn", description="Generalized spherical CNN building blocks and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equivariance", help="layer equivariance table")
    _common(p)
    p.add_argument("--L", type=_positive, default=32)
    p.add_argument("--N", type=_positive, default=None, help="azimuthal bandlimit of SO(3) signals (default 8)")
    p.add_argument("--n-signals", type=_positive, default=10)
    p.add_argument("--n-rotations", type=_positive, default=10)
    p.add_argument("--precision", choices=("single", "double"), default="single")
    p.add_argument("--threads", type=_positive, default=os.cpu_count() or 1)
    p.add_argument("--rows", nargs="+", metavar="OPERATOR", help="restrict to these operator ids")
    p.add_argument("--plot", metavar="SVG")
    p.set_defaults(func=cmd_equivariance)

    p = sub.add_parser("cost", help="efficient vs baseline layer cost")
    _common(p)
    p.add_argument("--L", type=_int_list, default=[8, 16, 32, 64, 128], help="comma-separated bandlimits")
    p.add_argument("--K", type=_positive, default=4)
    p.add_argument("--cg-storage", choices=("dense", "sparse", "none"), default="dense")
    p.add_argument("--plot", metavar="SVG")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("roundtrip", help="transform round-trip errors")
    _common(p)
    p.add_argument("--L", type=_int_list, default=[2, 4, 8, 16, 32, 64])
    p.add_argument("--N", type=_int_list, default=None, help="SO(3) azimuthal bandlimits (default L and 4)")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("mixing", help="dump mixing sets")
    _common(p)
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--kind", choices=("full", "mst", "rmst"), default="full")
    p.add_argument("--undirected", action="store_true", help="list each pair once with l1 <= l2")
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("square", help="Gaunt squaring against pointwise squaring")
    _common(p)
    p.add_argument("--L", type=_positive, default=8)
    p.add_argument("--n-signals", type=_positive, default=20)
    p.set_defaults(func=cmd_square)

    p = sub.add_parser("filter", help="harmonic coefficients of a Dirac filter config")
    p.add_argument("config", help="JSON filter geometry")
    p.add_argument("--L", type=_positive, required=True)
    p.add_argument("--N", type=_positive, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_filter)
    return parser


def main(argv=None) -> int:
    from .io import FormatError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, FormatError) as exc:
        _log(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
