"""Command-line harness.

Exit codes: 0 success, 1 empty decoding result or failed verification,
2 invalid input, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, io
from .algebra import Field, LinearCode, hamming_code_7_4, parity_code, repetition_code, rs_build
from .covering import johnson
from .expander import NonConvergence, build_graph
from .graph_codes import (
    AELCode,
    ConcatCode,
    TannerCode,
    ael_unique_decode,
    outer_unique_decoder,
    tanner_member,
    zemor_unique_decode,
)
from .instances import PRESETS
from .pipelines import DecodeConfig, list_decode, near_mds_params
from .solver import SolverParams

log = logging.getLogger("expdec")

EXIT_OK, EXIT_EMPTY, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_manifest(args, config: dict, inputs=(), seeds=()):
    if getattr(args, "manifest", None):
        io.save_json(io.manifest(args.command, config, [p for p in inputs if p], seeds), args.manifest)


# -- small codes from the command line -------------------------------------------------


def inner_from_spec(spec: str) -> LinearCode:
    """``parity:n[:q]``, ``repetition:n[:q]``, ``hamming74``, ``rs:q:n:k`` or a JSON path."""
    parts = spec.split(":")
    try:
        if parts[0] == "parity":
            return parity_code(Field(int(parts[2]) if len(parts) > 2 else 2), int(parts[1]))
        if parts[0] == "repetition":
            return repetition_code(Field(int(parts[2]) if len(parts) > 2 else 2), int(parts[1]))
        if parts[0] == "hamming74":
            return hamming_code_7_4()
        if parts[0] == "rs":
            return rs_build(Field(int(parts[1])), int(parts[2]), int(parts[3]))
    except (IndexError, ValueError) as exc:
        raise InputError(f"bad code spec {spec!r}: {exc}") from exc
    return io.load_code(spec)


# -- subcommands -----------------------------------------------------------------------


def cmd_gen_graph(args) -> int:
    g = build_graph(args.kind, args.n, args.d, args.seed)
    _emit(io.dumps(g.to_dict()), args.out)
    _write_manifest(args, {"kind": args.kind, "n": args.n, "d": args.d}, seeds=[args.seed])
    return EXIT_OK


def cmd_build_code(args) -> int:
    if args.preset:
        code = PRESETS[args.preset]()
    elif args.family == "rs":
        if None in (args.q, args.n, args.k):
            raise InputError("rs needs --q, --n and --k")
        code = rs_build(Field(args.q), args.n, args.k)
    elif args.family == "tanner":
        if not (args.graph and args.inner):
            raise InputError("tanner needs --graph and --inner")
        code = TannerCode(io.graph_from_dict(io.load_json(args.graph)), inner_from_spec(args.inner))
    elif args.family == "ael":
        if not (args.graph and args.inner and args.outer):
            raise InputError("ael needs --graph, --inner and --outer")
        code = AELCode(io.graph_from_dict(io.load_json(args.graph)), inner_from_spec(args.inner), inner_from_spec(args.outer))
    else:
        if not (args.inner and args.outer):
            raise InputError("concat needs --inner and --outer")
        code = ConcatCode(inner_from_spec(args.outer), inner_from_spec(args.inner))
    _emit(io.dumps(io.code_to_dict(code)), args.out)
    _write_manifest(args, {"family": args.family, "preset": args.preset}, [args.graph])
    return EXIT_OK


def _outer_and_encoder(code):
    if isinstance(code, TannerCode):
        lin = code.as_linear_code
        return lin, lin.encode
    if isinstance(code, AELCode):
        return code.outer, lambda msg: code.fold(code.encode_edges(code.outer.encode(msg)))
    if isinstance(code, ConcatCode):
        return code.outer, lambda msg: code.unchecked_encode(code.outer.encode(msg))
    return code, code.encode


def cmd_encode(args) -> int:
    code = io.load_code(args.code)
    _, enc = _outer_and_encoder(code)
    words = [enc(m) for m in io.read_words(args.message)]
    _emit(io.write_words(words), args.out)
    _write_manifest(args, {}, [args.code, args.message])
    return EXIT_OK


def _corrupt(word, errors: int, q: int, rng: np.random.Generator):
    w = list(word)
    if errors > len(w):
        raise InputError(f"cannot corrupt {errors} of {len(w)} symbols")
    folded = len(w) and isinstance(w[0], tuple)
    for pos in sorted(rng.choice(len(w), size=errors, replace=False).tolist()):
        if folded:
            d = len(w[pos])
            while True:
                new = tuple(int(x) for x in rng.integers(0, q, size=d))
                if new != w[pos]:
                    break
            w[pos] = new
        else:
            w[pos] = (w[pos] + int(rng.integers(1, q))) % q
    return tuple(w)


def cmd_corrupt(args) -> int:
    q = args.q
    if args.code:
        code = io.load_code(args.code)
        q = code.q0 if isinstance(code, (AELCode, ConcatCode)) else code.q
    rng = np.random.default_rng(args.seed)
    words = [_corrupt(w, args.errors, q or 2, rng) for w in io.read_words(args.word)]
    _emit(io.write_words(words), args.out)
    _write_manifest(args, {"errors": args.errors, "q": q}, [args.word, args.code], [args.seed])
    return EXIT_OK


def _unique(code, w, method: str = "zemor"):
    """Decoded message or None."""
    if isinstance(code, TannerCode):
        if method == "nearest":
            c = code.as_linear_code.nearest_codeword(w)[0]
        else:
            c = zemor_unique_decode(code, w)
        return None if c is None or not tanner_member(code, c) else code.as_linear_code.unencode(c)
    if isinstance(code, AELCode):
        f = ael_unique_decode(code, w)
        return None if f is None else code.outer.unencode(f)
    if isinstance(code, ConcatCode):
        y = [code.inverse_bijection[code.inner.nearest_codeword(b)[0]] for b in code.blocks(w)]
        f = outer_unique_decoder(code.outer)(y)
        return None if f is None else code.outer.unencode(f)
    f = outer_unique_decoder(code)(w)
    return None if f is None else code.unencode(f)


def cmd_unique_decode(args) -> int:
    code = io.load_code(args.code)
    out, empty = [], False
    for w in io.read_words(args.received):
        m = _unique(code, w, args.method)
        if m is None:
            empty = True
            out.append("# decoding failure")
        else:
            out.append(io.format_word(m))
    _emit("".join(s + "\n" for s in out), args.out)
    _write_manifest(args, {"method": args.method}, [args.code, args.received])
    return EXIT_EMPTY if empty else EXIT_OK


def _config(args) -> DecodeConfig:
    params = SolverParams(max_iters=args.max_iters, tol=args.tol, seed=args.seed, trace_path=args.trace)
    return DecodeConfig(
        eps=args.eps,
        eta=args.eta,
        t=args.t,
        k_max=args.k_max,
        solver=params,
        mode=args.mode,
        seed=args.seed,
        delta_dec=args.delta_dec,
        kappa=args.kappa,
        outer_decoder=args.outer_decoder,
        audit=args.audit,
    )


def _decode_one(job):
    code_path, word, cfg = job
    code = io.load_code(code_path)
    return list_decode(code, word, cfg).to_dict()


def cmd_list_decode(args) -> int:
    code = io.load_code(args.code)
    expected = {"tanner": TannerCode, "ael": AELCode, "concat": ConcatCode}
    if args.kind and not isinstance(code, expected[args.kind]):
        raise InputError(f"code file does not hold a {args.kind} code")
    cfg = _config(args)
    words = io.read_words(args.received)
    if not words:
        raise InputError("no received words")
    jobs = [(args.code, w, cfg) for w in words]
    if args.jobs > 1 and len(words) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_decode_one, jobs))
    else:
        results = [list_decode(code, w, cfg).to_dict() for w in words]
    for r in results:
        r["stats"].pop("seconds", None)
    payload = results[0] if len(results) == 1 else {"results": results}
    payload_cfg = cfg.to_dict()
    payload["config"] = payload_cfg
    _emit(io.dumps(payload), args.out)
    _write_manifest(args, payload_cfg, [args.code, args.received], [args.seed])
    return EXIT_EMPTY if all(not r["list"] for r in results) else EXIT_OK


def _num(x):
    return str(x) if isinstance(x, Fraction) else x


def cmd_johnson(args) -> int:
    jp = johnson(args.q, args.delta)
    sys.stdout.write(io.dumps({"beta": _num(jp.beta), "johnson": _num(jp.johnson)}, compact=True) + "\n")
    return EXIT_OK


def cmd_near_mds(args) -> int:
    rep = near_mds_params(args.eps1, args.c, args.rho0)
    sys.stdout.write(io.dumps({k: _num(v) for k, v in rep.items()}))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suites

    report = run_suites(args.suite)
    _emit(io.dumps(report), args.out)
    return EXIT_OK if all(r["passed"] for r in report.values()) else EXIT_EMPTY


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expdec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"expdec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        if out:
            sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--manifest", help="write a reproducibility manifest here")
        return sp

    sp = common(sub.add_parser("gen-graph", help="construct a bipartite graph"))
    sp.add_argument("--kind", choices=["complete", "cycle", "random_regular"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gen_graph)

    sp = common(sub.add_parser("build-code", help="write a code descriptor"))
    sp.add_argument("family", choices=["tanner", "ael", "concat", "rs"])
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--graph", help="graph JSON")
    sp.add_argument("--inner", help="inner code: parity:n[:q], repetition:n[:q], hamming74, rs:q:n:k or JSON")
    sp.add_argument("--outer", help="outer code, same forms as --inner")
    sp.add_argument("--q", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.set_defaults(func=cmd_build_code)

    sp = common(sub.add_parser("encode", help="encode messages (outer messages for AEL and concatenated codes)"))
    sp.add_argument("--code", required=True)
    sp.add_argument("--message", required=True, help="word file of messages")
    sp.set_defaults(func=cmd_encode)

    sp = common(sub.add_parser("corrupt", help="replace symbols at seeded random positions"))
    sp.add_argument("--word", required=True)
    sp.add_argument("--errors", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--code", help="code JSON (sets the alphabet)")
    sp.add_argument("--q", type=int, help="alphabet size when no code is given (default 2)")
    sp.set_defaults(func=cmd_corrupt)

    sp = common(sub.add_parser("unique-decode", help="unique decoding back to messages"))
    sp.add_argument("--code", required=True)
    sp.add_argument("--received", required=True)
    sp.add_argument("--method", choices=["zemor", "nearest"], default="zemor", help="Tanner decoder")
    sp.set_defaults(func=cmd_unique_decode)

    sp = common(sub.add_parser("list-decode", help="run a list-decoding pipeline"))
    sp.add_argument("--kind", choices=["tanner", "ael", "concat"])
    sp.add_argument("--code", required=True)
    sp.add_argument("--received", required=True, help="word file, one received word per line")
    sp.add_argument("--eps", type=_fraction, required=True)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--t", type=int, help="SoS degree (default 2d(k_max+2), capped by budget)")
    sp.add_argument("--k-max", type=int, default=0)
    sp.add_argument("--mode", choices=["exhaustive", "sample"], default="exhaustive")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--delta-dec", type=_fraction)
    sp.add_argument("--kappa", type=_fraction)
    sp.add_argument("--outer-decoder", choices=["list", "unique"], default="list")
    sp.add_argument("--max-iters", type=int, default=50_000)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--trace", help="CSV file for solver iterations")
    sp.add_argument("--audit", action="store_true", help="raise on any failed runtime check")
    sp.add_argument("--jobs", type=int, default=1, help="decode received words in parallel")
    sp.set_defaults(func=cmd_list_decode)

    sp = sub.add_parser("johnson", help="q-ary Johnson radius")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--delta", type=_fraction, required=True)
    sp.set_defaults(func=cmd_johnson)

    sp = sub.add_parser("near-mds-params", help="parameters of the near-MDS family")
    sp.add_argument("--eps1", type=_fraction, required=True)
    sp.add_argument("--c", type=_fraction, default=Fraction(1))
    sp.add_argument("--rho0", type=_fraction, default=Fraction(1, 2))
    sp.set_defaults(func=cmd_near_mds)

    sp = sub.add_parser("verify", help="run invariant suites on the built-in instances")
    sp.add_argument("--suite", choices=["all", "distance", "eml", "axioms", "rounding", "roundtrip"], default="all")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def _setup_logging():
    level = os.environ.get("EXPDEC_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NonConvergence as exc:
        log.error("solver did not converge: %s", exc)
        return EXIT_SOLVER
    except (ValueError, TypeError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def run_cli(argv: list[str]) -> int:
    return main(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
