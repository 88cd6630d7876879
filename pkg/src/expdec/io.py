"""File formats: code and graph JSON, word files, weight CSV, manifests.

Codes are stored as descriptors (``kind`` plus parameters).  A nested graph or
code may be given inline or as a path relative to the referring file.
Word files hold one word per line; symbols are separated by whitespace, a
folded symbol is written as comma-separated digits, and a line without
whitespace is read as one digit per symbol.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .algebra import Field, LinearCode, ReedSolomonCode
from .expander import BipartiteExpander
from .graph_codes import AELCode, ConcatCode, TannerCode


def dumps(obj: Any, compact: bool = False) -> str:
    if compact:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def save_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(dumps(obj))


# -- descriptors -----------------------------------------------------------------


def code_to_dict(code) -> dict:
    if isinstance(code, (TannerCode, AELCode, ConcatCode)):
        return code.to_descriptor()
    if isinstance(code, LinearCode):
        d = code.to_dict()
        d.setdefault("kind", "linear")
        return d
    raise TypeError(f"cannot serialise {type(code).__name__}")


def _resolve(ref, base: Path | None):
    if isinstance(ref, str):
        p = Path(ref)
        if base is not None and not p.is_absolute():
            p = base / p
        return load_json(p), p.parent
    return ref, base


def graph_from_dict(data, base: Path | None = None) -> BipartiteExpander:
    data, _ = _resolve(data, base)
    return BipartiteExpander.from_dict(data)


def code_from_dict(data, base: Path | None = None):
    """Inverse of :func:`code_to_dict`; nested entries may be file references."""
    data, base = _resolve(data, base)
    kind = data.get("kind", "linear")
    if kind == "linear":
        H = data.get("paritycheck")
        return LinearCode(Field(data["q"]), data["generator"], H if H else None, data.get("name", ""))
    if kind == "reed_solomon":
        return ReedSolomonCode(Field(data["q"]), data["n"], data["k"], data.get("points"))
    if kind == "tanner":
        return TannerCode(graph_from_dict(data["graph"], base), code_from_dict(data["inner"], base))
    if kind in ("ael", "concat"):
        inner = code_from_dict(data["inner"], base)
        outer = code_from_dict(data["outer"], base)
        code = AELCode(graph_from_dict(data["graph"], base), inner, outer) if kind == "ael" else ConcatCode(outer, inner)
        if "bijection" in data and [tuple(c) for c in data["bijection"]] != list(code.bijection):
            raise ValueError("stored bijection does not match the sorted inner codewords")
        return code
    raise ValueError(f"unknown code kind {kind!r}")


def load_code(path: str | Path):
    p = Path(path)
    return code_from_dict(load_json(p), p.parent)


# -- words -----------------------------------------------------------------------


def parse_word(line: str) -> tuple:
    tokens = line.split()
    if len(tokens) == 1 and "," not in tokens[0] and len(tokens[0]) > 1:
        return tuple(int(ch) for ch in tokens[0])
    if any("," in tok for tok in tokens):
        return tuple(tuple(int(x) for x in tok.split(",")) for tok in tokens)
    return tuple(int(tok) for tok in tokens)


def format_word(w: Sequence) -> str:
    if len(w) and isinstance(w[0], (tuple, list)):
        return " ".join(",".join(str(int(x)) for x in s) for s in w)
    return " ".join(str(int(x)) for x in w)


def read_words(path: str | Path) -> list[tuple]:
    lines = Path(path).read_text().splitlines()
    return [parse_word(ln) for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def write_words(words: Sequence[Sequence], path: str | Path | None = None) -> str:
    text = "".join(format_word(w) + "\n" for w in words)
    if path is not None:
        Path(path).write_text(text)
    return text


# -- weights -------------------------------------------------------------------------


def read_weights(path: str | Path) -> np.ndarray:
    """``n x q`` CSV of nonnegative weights, one row per coordinate."""
    W = np.loadtxt(path, delimiter=",", ndmin=2)
    if np.any(W < 0):
        raise ValueError("negative weight")
    return W


def write_weights(W, path: str | Path) -> None:
    np.savetxt(path, np.asarray(W, dtype=float), delimiter=",", fmt="%.17g")


# -- moments ---------------------------------------------------------------------------


def dump_moments(pe, subsets: Sequence[Sequence[int]]) -> dict:
    """Joint tables of ``pe`` on the given subsets, keyed by comma-joined variables."""
    return {
        "m": pe.m,
        "q": pe.q,
        "t": pe.t,
        "joints": {",".join(map(str, sorted(S))): pe.joint(S).tolist() for S in subsets},
    }


# -- manifests ---------------------------------------------------------------------------


def digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(command: str, config: dict, inputs: Sequence[str | Path] = (), seeds: Sequence[int] = ()) -> dict:
    """Reproducibility record; contains no timestamps so equal runs give equal files."""
    return {
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(dumps(config, compact=True).encode()).hexdigest(),
        "seeds": list(seeds),
        "inputs": {str(p): digest(p) for p in inputs},
        "version": __version__,
    }
