"""Command-line driver.

Exit codes: 0 when every defect vanishes and the computation completes,
1 when a defect is found, 2 on usage or parse errors.  Reports are UTF-8
key=value lines followed by structure-file blocks, with no timestamps.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .ainf import AInfStructure, DefectError, check_stasheff, transfer
from .bimod import (Bimodule, Pairing, canonical_pairing, check_bimodule, cyclicity_defect,
                    diagonal_bimodule, dual_bimodule, shift_bimodule, trivial_extension_ainf)
from .ncsym import (DeRhamElement, FormalContext, darboux_normalize, is_symplectic, verify_pullback)
from .serialize import FormatError, load, serialize
from .sheaf import LineBundleSum, ext_table, line_bundle_cohomology, local_cy_compare


class UsageError(Exception):
    pass


class Report:
    def __init__(self):
        self.lines: List[str] = []
        self.blocks: List[tuple] = []

    def add(self, key, value):
        self.lines.append(f"{key}={value}")

    def line(self, text):
        self.lines.append(text)

    def block(self, name, obj):
        self.blocks.append((name, serialize(obj).decode("utf-8")))

    def text(self) -> str:
        out = "\n".join(self.lines) + "\n"
        for name, body in self.blocks:
            out += f"--- {name} ---\n{body}"
        return out


def _load(path, kinds, validate=True):
    try:
        obj = load(path, validate=validate)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except FormatError as e:
        raise UsageError(f"{path}: {e}") from None
    if not isinstance(obj, kinds):
        raise UsageError(f"{path}: wrong structure kind {type(obj).__name__}")
    return obj


def _twists(s: str):
    try:
        return tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad twist list {s!r}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_check_stasheff(args, rep: Report) -> int:
    obj = _load(args.file, (AInfStructure, Bimodule), validate=False)
    try:
        if isinstance(obj, Bimodule):
            check_stasheff(obj.algebra)
            check_bimodule(obj)
        else:
            check_stasheff(obj)
    except DefectError as e:
        rep.add("status", "defect")
        rep.add("arity", e.arity)
        rep.add("message", str(e))
        return 1
    rep.add("status", "ok")
    rep.add("max_arity", obj.max_arity)
    return 0


def cmd_minimal_model(args, rep: Report) -> int:
    A = _load(args.file, AInfStructure)
    K = args.max_arity
    if K > A.max_arity:
        A = A.with_max_arity(K)
    T = transfer(A, K_out=K)
    H = T.H
    rep.add("dims", _dims(H.space.graded_dims()))
    rep.add("truncated", str(H.truncated).lower())
    for k in sorted(H.b):
        rep.add(f"entries[{k}]", sum(len(v) for v in H.b[k].values()))
    try:
        check_stasheff(H)
    except DefectError as e:
        rep.add("status", "defect")
        rep.add("arity", e.arity)
        return 1
    rep.add("status", "ok")
    rep.block("minimal-model", H)
    return 0


def cmd_trivial_extension(args, rep: Report) -> int:
    A = _load(args.file, AInfStructure)
    T = trivial_extension_ainf(A, shift_bimodule(dual_bimodule(diagonal_bimodule(A)), args.shift))
    P = canonical_pairing(A, T)
    rep.add("dims", _dims(T.space.graded_dims()))
    rep.add("pairing_degree", P.degree)
    try:
        check_stasheff(T)
    except DefectError as e:
        rep.add("status", "defect")
        rep.add("arity", e.arity)
        return 1
    rep.add("status", "ok")
    rep.block("trivial-extension", T)
    rep.block("pairing", P)
    return 0


def cmd_cyclic_check(args, rep: Report) -> int:
    A = _load(args.file, AInfStructure)
    P = _load(args.pairing, Pairing)
    if P.space.labels != A.space.labels or P.space.degrees != A.space.degrees:
        raise UsageError("pairing and structure have different bases")
    bad = 0
    for n in range(1, A.max_arity + 1):
        d = cyclicity_defect(A, P, n)
        rep.add(f"cyclicity_defect[{n}]", len(d))
        if d and not bad:
            bad = n
    rep.add("nondegenerate", str(P.is_nondegenerate()).lower())
    if bad:
        rep.add("status", "defect")
        rep.add("arity", bad)
        return 1
    rep.add("status", "ok")
    return 0


def cmd_darboux(args, rep: Report) -> int:
    omega = _load(args.file, DeRhamElement)
    if omega.p != 2:
        raise UsageError("darboux needs a two-form")
    old = omega.ctx
    ctx = FormalContext(old.degrees, args.order, old.aux, old.labels)
    omega = DeRhamElement(ctx, 2, {w: c for w, c in omega.terms.items() if len(w) <= args.order})
    if not is_symplectic(omega):
        rep.add("status", "defect")
        rep.add("message", "form is not closed or its constant part is degenerate")
        return 1
    res = darboux_normalize(omega)
    ok = verify_pullback(res.phi, omega, res.omega)
    rep.add("order", args.order)
    rep.add("steps", len(res.steps))
    rep.add("pullback_verified", str(ok).lower())
    status = 0 if ok else 1
    if args.graded:
        aux = sorted(res.phi.aux_degrees())
        rep.add("phi_aux_degrees", ",".join(map(str, aux)))
        if aux not in ([], [0]):
            status = 1
    rep.add("status", "ok" if status == 0 else "defect")
    rep.block("normal-form", res.omega)
    rep.block("diffeomorphism", res.phi)
    return status


def cmd_cech(args, rep: Report) -> int:
    dims = line_bundle_cohomology(args.n, args.d)
    rep.line(" ".join(f"H{j}={c}" for j, c in enumerate(dims)))
    return 0


def cmd_ext(args, rep: Report) -> int:
    F = LineBundleSum(args.n, _twists(args.src))
    D = LineBundleSum(args.n, _twists(args.dst))
    tab = ext_table(F, D)
    rep.line(" ".join(f"Ext{j}={c}" for j, c in enumerate(tab.dims())))
    rep.block("ext-table", tab)
    return 0


def cmd_local_cy(args, rep: Report) -> int:
    r = local_cy_compare(args.n, K=args.max_arity)
    for line in r.lines():
        rep.line(line)
    if r.lhs is not None:
        rep.block("minimal-cyclic-model", r.lhs)
        rep.block("pairing", r.pairing)
    if r.rhs is not None:
        rep.block("trivial-extension", r.rhs)
    return 0 if r.ok else 1


def _dims(d) -> str:
    return ",".join(f"{q}:{c}" for q, c in sorted(d.items()))


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="write the full report (with structure blocks) here")
    p = argparse.ArgumentParser(prog="localcy", description="Exact A∞ / cyclic / Čech computations.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-stasheff", parents=[common], help="verify the Stasheff (or bimodule) relations of a file")
    s.add_argument("file")
    s.set_defaults(func=cmd_check_stasheff)

    s = sub.add_parser("minimal-model", parents=[common], help="homotopy transfer to cohomology")
    s.add_argument("file")
    s.add_argument("--max-arity", type=int, default=6)
    s.set_defaults(func=cmd_minimal_model)

    s = sub.add_parser("trivial-extension", parents=[common], help="A ⊕ A*[r] with its canonical pairing")
    s.add_argument("file")
    s.add_argument("--shift", type=int, required=True)
    s.set_defaults(func=cmd_trivial_extension)

    s = sub.add_parser("cyclic-check", parents=[common], help="cyclicity of a structure under a pairing")
    s.add_argument("file")
    s.add_argument("pairing")
    s.set_defaults(func=cmd_cyclic_check)

    s = sub.add_parser("darboux", parents=[common], help="normalize a symplectic two-form")
    s.add_argument("file")
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--graded", action="store_true", help="also require aux degree 0 for φ")
    s.set_defaults(func=cmd_darboux)

    s = sub.add_parser("cech", parents=[common], help="cohomology of O(d) on P^n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.set_defaults(func=cmd_cech)

    s = sub.add_parser("ext", parents=[common], help="Ext table between sums of line bundles")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--src", required=True)
    s.add_argument("--dst", required=True)
    s.set_defaults(func=cmd_ext)

    s = sub.add_parser("local-cy", parents=[common], help="compare the local CY model with B(B*[-n-1])")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--max-arity", type=int, default=4)
    s.set_defaults(func=cmd_local_cy)
    return p


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # twist lists may start with '-'; glue them to their flag
    for r in range(len(argv) - 2, -1, -1):
        if argv[r] in ("--src", "--dst", "--d", "--shift") and argv[r + 1].startswith("-"):
            argv[r:r + 2] = [f"{argv[r]}={argv[r + 1]}"]
    args = parser.parse_args(argv)   # exits with status 2 on usage errors
    rep = Report()
    try:
        code = args.func(args, rep)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        if isinstance(e, DefectError):
            rep.add("status", "defect")
            rep.add("arity", e.arity)
            rep.add("message", str(e))
            code = 1
        else:
            print(f"error: {e}", file=sys.stderr)
            return 2
    out.write("\n".join(rep.lines) + "\n")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(rep.text())
    return code


if __name__ == "__main__":
    sys.exit(main())
