"""Command-line interface: ``bindeblur <verb> ...``.

Exit codes of ``recover``: 0 recovered, 2 inconsistent, 3 budget
exhausted, 4 unsupported dims, 5 unreadable input.  Every other verb
returns 0 on success and 5 on unreadable input; ``audit`` also returns
4 when the grid is too large for the oracle.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import ParseError, TooLarge, UnsupportedDims
from .feasibility import SearchBudget
from .lattice import SolverConfig
from .oracle import Exhaustive, Sampled, audit_uniqueness
from .reconstruction import BandPolicy, BandShape, NoiseModel, RecoveryStatus, classify_dims, recover
from .spectral import add_noise, blur, dft_on
from .stability import count_bounded_compositions, count_matrices_given_sums, stability
from .trials import TrialSpec, format_table, run_trials

EXIT_OK = 0
EXIT_INCONSISTENT = 2
EXIT_BUDGET = 3
EXIT_UNSUPPORTED = 4
EXIT_PARSE = 5

_STATUS_EXIT = {RecoveryStatus.RECOVERED: EXIT_OK,
                RecoveryStatus.INCONSISTENT: EXIT_INCONSISTENT,
                RecoveryStatus.BUDGET_EXHAUSTED: EXIT_BUDGET}


def band_policy(text: str) -> BandPolicy:
    """``rect4`` for the four-coefficient band, otherwise an integer ``L``."""
    if text == "rect4":
        return BandPolicy(BandShape.FOUR_COEFFICIENT)
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be an integer L or 'rect4', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("band L must be nonnegative")
    return BandPolicy(BandShape.SQUARE, value)


def _solver_flags(p: argparse.ArgumentParser):
    d = SolverConfig()
    g = p.add_argument_group("solver")
    g.add_argument("--beta", type=float, default=d.beta, help="embedding weight")
    g.add_argument("--epsilon", type=float, default=d.epsilon, help="accepted residual")
    g.add_argument("--delta", type=float, default=d.delta, help="Lovasz parameter")
    g.add_argument("--lll-timeout", type=float, default=d.time_limit, help="seconds per reduction")
    g.add_argument("--node-limit", type=int, default=SearchBudget().node_limit,
                   help="search nodes for the final feasibility solve")
    g.add_argument("--time-limit", type=float, default=None,
                   help="seconds for the final feasibility solve")
    g.add_argument("--retry-directions", action="store_true",
                   help="on inconsistency, retry with one recovered direction dropped")


def _config(a) -> tuple[SolverConfig, SearchBudget]:
    cfg = SolverConfig(beta=a.beta, epsilon=a.epsilon, delta=a.delta, time_limit=a.lll_timeout)
    return cfg, SearchBudget(node_limit=a.node_limit, time_limit=a.time_limit)


def cmd_blur(a) -> int:
    x = io.read_pbm(a.image)
    spec = dft_on(x, a.band.band())
    if a.noise:
        spec = add_noise(spec, a.noise, a.seed)
    io.write_coefficients(spec, a.coeff_out)
    if a.image_out:
        io.write_pgm(blur(spec), a.image_out)
    print(f"wrote {len(spec.values)} coefficients of a {x.n1}x{x.n2} image to {a.coeff_out}")
    return EXIT_OK


def cmd_recover(a) -> int:
    spec = io.read_coefficients(a.coeffs)
    try:
        classify_dims(*spec.dims)
    except UnsupportedDims as exc:
        print(f"unsupported dims: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    cfg, budget = _config(a)
    noise = NoiseModel.from_variance(a.noise) if a.noise else None
    report = recover(spec, cfg, budget, retry=a.retry_directions, noise=noise)
    if report.recovered and a.image_out:
        io.write_pbm(report.matrix, a.image_out)
    extra = {"dims": f"{spec.n1} {spec.n2}", "coefficients": len(spec.values)}
    if a.report_out:
        io.write_report(report, a.report_out, extra)
    else:
        sys.stdout.write(io.format_report(report, extra))
    return _STATUS_EXIT[report.status]


def cmd_trials(a) -> int:
    cfg, budget = _config(a)
    spec = TrialSpec((a.dims[0], a.dims[1]), a.band, a.popcount, a.trials, a.seed, a.noise or 0.0,
                     cfg, budget, a.retry_directions, a.oracle)
    table = format_table([run_trials(spec)])
    if a.out:
        Path(a.out).write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_stability(a) -> int:
    est = stability(a.p, a.k, a.m)
    print(f"nu = {est.nu}")
    print(f"digits = {est.digits:.6f}")
    print(f"digits_rounded = {est.rounded}")
    return EXIT_OK


def cmd_counts(a) -> int:
    if a.column_sums:
        print(count_matrices_given_sums(a.column_sums, a.rows))
    else:
        if a.s is None or a.boxes is None or a.cap is None:
            raise SystemExit("counts needs S BOXES CAP, or --column-sums with --rows")
        print(f"{count_bounded_compositions(a.s, a.boxes, a.cap):,}")
    return EXIT_OK


def cmd_gen(a) -> int:
    from .corpus import generate
    dims = tuple(a.dims) if a.dims else None
    x = generate(a.kind, dims=dims, popcount=a.popcount, seed=a.seed, p=a.p, alpha=a.alpha,
                 which=a.which)
    io.write_pbm(x, a.out)
    print(f"wrote {a.kind} {x.n1}x{x.n2} fixture with {x.popcount} ones to {a.out}")
    return EXIT_OK


def cmd_audit(a) -> int:
    mode = Sampled(a.sampled, a.seed) if a.sampled else Exhaustive()
    try:
        res = audit_uniqueness((a.dims[0], a.dims[1]), a.band.band(), mode)
    except TooLarge as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNSUPPORTED
    print(f"examined = {res.examined}")
    print(f"collision_pairs = {res.collision_count}")
    print(f"elapsed = {res.elapsed:.3f}")
    for x, y in list(res.pairs())[:a.show]:
        print("pair:")
        print(io.format_pbm(x) + io.format_pbm(y), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bindeblur",
                                description="Recover binary matrices from low-pass DFT data.")
    sub = p.add_subparsers(dest="verb", required=True)

    b = sub.add_parser("blur", help="image -> banded coefficients (+ blurred rendering)")
    b.add_argument("image", help="plain PBM input")
    b.add_argument("--band", type=band_policy, required=True, help="L or rect4")
    b.add_argument("--coeff-out", required=True)
    b.add_argument("--image-out", help="blurred rendering as plain PGM")
    b.add_argument("--noise", type=float, default=0.0, metavar="VAR", help="Gaussian noise variance")
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_blur)

    r = sub.add_parser("recover", help="banded coefficients -> image + report")
    r.add_argument("coeffs", help="coefficient file")
    r.add_argument("--image-out")
    r.add_argument("--report-out")
    r.add_argument("--noise", type=float, default=0.0, metavar="VAR",
                   help="noise variance of the data, tunes the solver")
    _solver_flags(r)
    r.set_defaults(func=cmd_recover)

    t = sub.add_parser("trials", help="seeded blur/recover experiments")
    t.add_argument("--dims", type=int, nargs=2, required=True, metavar=("N1", "N2"))
    t.add_argument("--band", type=band_policy, required=True)
    t.add_argument("--popcount", type=int, required=True)
    t.add_argument("--trials", type=int, default=30)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--noise", type=float, default=0.0, metavar="VAR")
    t.add_argument("--oracle", action="store_true", help="cross-check with exhaustive search")
    t.add_argument("--out", help="write the table here as well")
    _solver_flags(t)
    t.set_defaults(func=cmd_trials)

    s = sub.add_parser("stability", help="digits-of-precision estimate")
    s.add_argument("p", type=int, help="number of lines")
    s.add_argument("k", type=int, help="per-line capacity K")
    s.add_argument("m", type=int, help="number of coefficients M")
    s.set_defaults(func=cmd_stability)

    c = sub.add_parser("counts", help="search-space sizes")
    c.add_argument("s", type=int, nargs="?", help="number of ones")
    c.add_argument("boxes", type=int, nargs="?")
    c.add_argument("cap", type=int, nargs="?")
    c.add_argument("--column-sums", type=int, nargs="+", help="count matrices with these sums")
    c.add_argument("--rows", type=int, help="row count for --column-sums")
    c.set_defaults(func=cmd_counts)

    g = sub.add_parser("gen", help="write a fixture image")
    g.add_argument("kind", choices=["random", "qr-like", "checkerboard", "stripe"])
    g.add_argument("--dims", type=int, nargs=2, metavar=("N1", "N2"))
    g.add_argument("--popcount", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--p", type=int)
    g.add_argument("--alpha", type=int)
    g.add_argument("--which", type=int, default=0, choices=[0, 1])
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    u = sub.add_parser("audit", help="search for indistinguishable matrices")
    u.add_argument("--dims", type=int, nargs=2, required=True, metavar=("N1", "N2"))
    u.add_argument("--band", type=band_policy, required=True)
    u.add_argument("--sampled", type=int, metavar="COUNT", help="sample COUNT matrices instead")
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--show", type=int, default=1, help="print this many colliding pairs")
    u.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
