"""One flat JSON file format for every coefficient-table structure.

A file has ``format_version``, ``kind``, a ``basis`` of
{label, degree, aux_degree?} records and a sorted list of coefficients
{arity, inputs, output, value}.  Values are reduced rationals written as
"p/q" or integer strings.  Equal structures give identical bytes.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Dict, List, Tuple

from .core import GradedSpace
from .ainf import AInfStructure, DefectError, check_stasheff
from .bimod import Bimodule, Pairing, check_bimodule
from .ncsym import DeRhamElement, Diffeomorphism, FormalContext, VectorField
from .sheaf import ExtTable, LineBundleSum

FORMAT_VERSION = 1
KINDS = ("ainf", "bimodule", "pairing", "form", "vectorfield", "diffeo", "exttable")
_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


class FormatError(ValueError):
    """The file could not be parsed into a structure."""


def rational_to_str(x) -> str:
    return str(Fraction(x))


def str_to_rational(s) -> Fraction:
    if not isinstance(s, str) or not _RATIONAL.match(s):
        raise FormatError(f"bad rational {s!r}")
    x = Fraction(s)
    if str(x) != s:
        raise FormatError(f"rational {s!r} is not in reduced form")
    return x


# -- basis and coefficient records ----------------------------------------------

def _basis(space: GradedSpace) -> List[dict]:
    out = []
    for r, (lab, q) in enumerate(zip(space.labels, space.degrees)):
        rec = {"label": lab, "degree": q}
        if space.aux:
            rec["aux_degree"] = space.aux[r]
        out.append(rec)
    return out


def _ctx_basis(ctx: FormalContext) -> List[dict]:
    return [{"label": lab, "degree": q, "aux_degree": t}
            for lab, q, t in zip(ctx.labels, ctx.degrees, ctx.aux)]


def _space(records) -> GradedSpace:
    if not isinstance(records, list):
        raise FormatError("basis must be a list")
    try:
        labels = tuple(str(r["label"]) for r in records)
        degrees = tuple(int(r["degree"]) for r in records)
        has_aux = [("aux_degree" in r) for r in records]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad basis record: {e}") from None
    if len(set(labels)) != len(labels):
        raise FormatError("duplicate basis labels")
    aux = tuple(int(r["aux_degree"]) for r in records) if records and all(has_aux) else None
    if any(has_aux) and not all(has_aux):
        raise FormatError("aux_degree given for some basis elements only")
    return GradedSpace(labels, degrees, aux)


def _sort_key(rec):
    a = rec["arity"]
    return (tuple(a) if isinstance(a, list) else (a,), rec["inputs"], rec["output"])


def _dump(kind: str, basis: List[dict], coefficients: List[dict], **extra) -> bytes:
    doc = {"format_version": FORMAT_VERSION, "kind": kind, "basis": basis,
           "coefficients": sorted(coefficients, key=_sort_key)}
    doc.update(extra)
    return (json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n").encode("utf-8")


def _coef(arity, inputs, output, value) -> dict:
    return {"arity": arity, "inputs": list(inputs), "output": output, "value": rational_to_str(value)}


def _letter(ctx: FormalContext, letter) -> str:
    t, i = letter
    return ("dx:" if t else "x:") + ctx.labels[i]


def _parse_letter(index: Dict[str, int], s: str):
    for prefix, t in (("dx:", 1), ("x:", 0)):
        if s.startswith(prefix) and s[len(prefix):] in index:
            return (t, index[s[len(prefix):]])
    raise FormatError(f"bad letter {s!r}")


# -- serialize -------------------------------------------------------------------

def to_document(obj) -> dict:
    return json.loads(serialize(obj).decode("utf-8"))


def serialize(obj) -> bytes:
    if isinstance(obj, AInfStructure):
        lab = obj.space.labels
        coefs = [_coef(k, [lab[i] for i in key], lab[j], c)
                 for k, table in obj.b.items() for key, vec in table.items() for j, c in vec.items() if c]
        return _dump("ainf", _basis(obj.space), coefs, max_arity=obj.max_arity)
    if isinstance(obj, Bimodule):
        lab = obj.combined_space().labels
        coefs = [_coef([k, l], [lab[i] for i in key], lab[j], c)
                 for (k, l), table in obj.maps.items() for key, vec in table.items()
                 for j, c in vec.items() if c]
        algebra = json.loads(serialize(obj.algebra).decode("utf-8"))
        return _dump("bimodule", _basis(obj.space), coefs, algebra=algebra, max_arity=obj.max_arity)
    if isinstance(obj, Pairing):
        lab = obj.space.labels
        coefs = [_coef(2, [lab[i], lab[j]], "", c) for (i, j), c in obj.matrix.items() if c]
        return _dump("pairing", _basis(obj.space), coefs, degree=obj.degree)
    if isinstance(obj, DeRhamElement):
        ctx = obj.ctx
        coefs = [_coef(len(w), [_letter(ctx, x) for x in w], "", c) for w, c in obj.terms.items() if c]
        return _dump("form", _ctx_basis(ctx), coefs, order=ctx.N, form_degree=obj.p)
    if isinstance(obj, (VectorField, Diffeomorphism)):
        ctx = obj.ctx
        coefs = [_coef(len(w), [_letter(ctx, x) for x in w], ctx.labels[i], c)
                 for i, v in obj.images.items() for w, c in v.items() if c]
        if isinstance(obj, VectorField):
            return _dump("vectorfield", _ctx_basis(ctx), coefs, order=ctx.N, degree=obj.degree)
        return _dump("diffeo", _ctx_basis(ctx), coefs, order=ctx.N)
    if isinstance(obj, ExtTable):
        coefs = [_coef(j, [], "", c) for j, c in obj.entries.items()]
        return _dump("exttable", [], coefs, n=obj.source.n,
                     source=list(obj.source.twists), target=list(obj.target.twists))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- deserialize -----------------------------------------------------------------

def deserialize(data, validate: bool = True):
    """Parse bytes, str or an already-loaded dict.  With ``validate`` the
    defining identities are re-checked and :class:`DefectError` is raised
    on failure."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as e:
            raise FormatError(f"not JSON: {e}") from None
    else:
        doc = data
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}")
    coefs = doc.get("coefficients", [])
    if not isinstance(coefs, list) or any(not isinstance(c, dict) for c in coefs):
        raise FormatError("coefficients must be a list of objects")
    try:
        return _LOADERS[kind](doc, coefs, validate)
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed {kind} file: {e!r}") from None


def _index(space_or_labels) -> Dict[str, int]:
    labels = getattr(space_or_labels, "labels", space_or_labels)
    return {lab: r for r, lab in enumerate(labels)}


def _lookup(index, lab):
    if lab not in index:
        raise FormatError(f"unknown basis label {lab!r}")
    return index[lab]


def _add(table, key, out, value):
    vec = table.setdefault(key, {})
    if out in vec:
        raise FormatError(f"duplicate coefficient {key} -> {out}")
    vec[out] = value


def _load_ainf(doc, coefs, validate):
    V = _space(doc["basis"])
    idx = _index(V)
    b: Dict[int, dict] = {}
    for c in coefs:
        k = int(c["arity"])
        if k != len(c["inputs"]) or k < 1:
            raise FormatError(f"arity {k} does not match inputs {c['inputs']}")
        key = tuple(_lookup(idx, x) for x in c["inputs"])
        _add(b.setdefault(k, {}), key, _lookup(idx, c["output"]), str_to_rational(c["value"]))
    try:
        A = AInfStructure(V, b, doc.get("max_arity"))
    except ValueError as e:
        raise FormatError(str(e)) from None
    if validate:
        check_stasheff(A)
    return A


def _load_bimodule(doc, coefs, validate):
    A = _load_ainf(doc["algebra"], doc["algebra"].get("coefficients", []), validate)
    M = _space(doc["basis"])
    shell = Bimodule(A, M, {}, doc.get("max_arity"))
    idx = _index(shell.combined_space())
    maps: Dict[Tuple[int, int], dict] = {}
    for c in coefs:
        k, l = (int(x) for x in c["arity"])
        if k + l + 1 != len(c["inputs"]):
            raise FormatError(f"arity ({k},{l}) does not match inputs {c['inputs']}")
        key = tuple(_lookup(idx, x) for x in c["inputs"])
        if key[k] < A.dim or any(u >= A.dim for r, u in enumerate(key) if r != k):
            raise FormatError(f"module slot misplaced in {c['inputs']}")
        out = _lookup(idx, c["output"])
        if out < A.dim:
            raise FormatError(f"output {c['output']!r} is not a module element")
        _add(maps.setdefault((k, l), {}), key, out, str_to_rational(c["value"]))
    Mod = Bimodule(A, M, maps, doc.get("max_arity"))
    if validate:
        check_bimodule(Mod)
    return Mod


def _load_pairing(doc, coefs, validate):
    V = _space(doc["basis"])
    idx = _index(V)
    matrix = {}
    for c in coefs:
        if int(c["arity"]) != 2 or len(c["inputs"]) != 2:
            raise FormatError("pairing entries take two inputs")
        key = tuple(_lookup(idx, x) for x in c["inputs"])
        if key in matrix:
            raise FormatError(f"duplicate pairing entry {c['inputs']}")
        matrix[key] = str_to_rational(c["value"])
    try:
        P = Pairing(V, int(doc["degree"]), matrix)
    except ValueError as e:
        raise DefectError(str(e), 2) from None
    if validate and not P.is_symmetric():
        i, j = min(P.symmetry_defect())
        raise DefectError(f"pairing is not graded symmetric at ({V.labels[i]}, {V.labels[j]})", 2, (i, j))
    return P


def _context(doc) -> FormalContext:
    V = _space(doc["basis"])
    return FormalContext(V.degrees, int(doc["order"]), V.aux or None, V.labels)


def _load_form(doc, coefs, validate):
    ctx = _context(doc)
    idx = _index(ctx.labels)
    p = int(doc["form_degree"])
    terms: dict = {}
    for c in coefs:
        w = tuple(_parse_letter(idx, s) for s in c["inputs"])
        if sum(t for t, _ in w) != p:
            raise FormatError(f"word {c['inputs']} is not a {p}-form")
        terms[w] = terms.get(w, 0) + str_to_rational(c["value"])
    return DeRhamElement(ctx, p, terms)


def _series_images(ctx, coefs):
    idx = _index(ctx.labels)
    images: Dict[int, dict] = {}
    for c in coefs:
        w = tuple(_parse_letter(idx, s) for s in c["inputs"])
        if any(t for t, _ in w):
            raise FormatError("images must be words in x letters")
        _add(images, _lookup(idx, c["output"]), w, str_to_rational(c["value"]))
    return images


def _load_vectorfield(doc, coefs, validate):
    ctx = _context(doc)
    try:
        return VectorField(ctx, _series_images(ctx, coefs), int(doc["degree"]))
    except ValueError as e:
        raise DefectError(str(e)) from None


def _load_diffeo(doc, coefs, validate):
    ctx = _context(doc)
    try:
        return Diffeomorphism(ctx, _series_images(ctx, coefs))
    except (ValueError, ZeroDivisionError) as e:
        raise DefectError(str(e)) from None


def _load_exttable(doc, coefs, validate):
    n = int(doc["n"])
    entries = {}
    for c in coefs:
        j = int(c["arity"])
        v = str_to_rational(c["value"])
        if v.denominator != 1 or v < 0 or not 0 <= j <= n:
            raise DefectError(f"bad Ext entry at degree {j}", j)
        entries[j] = int(v)
    return ExtTable(LineBundleSum(n, tuple(doc["source"])), LineBundleSum(n, tuple(doc["target"])), entries)


_LOADERS = {"ainf": _load_ainf, "bimodule": _load_bimodule, "pairing": _load_pairing,
            "form": _load_form, "vectorfield": _load_vectorfield, "diffeo": _load_diffeo,
            "exttable": _load_exttable}


def load(path, validate: bool = True):
    with open(path, "rb") as f:
        return deserialize(f.read(), validate)


def save(obj, path):
    with open(path, "wb") as f:
        f.write(serialize(obj))
