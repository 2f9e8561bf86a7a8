"""Command-line interface. Exit codes: 0 accept/success, 1 reject, 2 error."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from itertools import combinations

from .conditions import A_INVERSE, A_MATRIX, matmul
from .fit import decide
from .kdiss import (
    counterexample_equidistant,
    counterexample_treelike,
    format_kdiss,
    from_tree,
    random_counterexample_tree,
    read_kdiss,
    restrict_map,
    write_kdiss,
)
from .newick import read_newick, write_newick
from .rational import format_rational, parse_rational, to_json_value
from .tree import isomorphic, random_tree, steiner_weight
from .triplets import (
    build_tree,
    check_R1_R2,
    extract,
    format_triplets,
    read_triplets,
    topology_from_kdiss,
)

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None = None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rational(token: str) -> Fraction:
    try:
        return parse_rational(token)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ------------------------------------------------------------------ commands


def cmd_compute(args) -> int:
    t = read_newick(args.tree)
    if args.subset:
        labels = args.subset.split(",")
        if len(labels) != args.k or len(set(labels)) != args.k:
            raise UsageError(f"--subset must name {args.k} distinct labels")
        value = steiner_weight(t, labels)
        if args.json:
            _emit(json.dumps({"k": args.k, "labels": sorted(labels), "value": to_json_value(value)}) + "\n")
        else:
            _emit(format_rational(value) + "\n")
        return EXIT_OK
    d = from_tree(t, args.k)
    if args.json:
        entries = [{"labels": list(key), "value": to_json_value(v)} for key, v in d.items()]
        _emit(json.dumps({"k": d.k, "ground_set": list(d.ground_set), "values": entries}, indent=2) + "\n")
    else:
        _emit(format_kdiss(d))
    return EXIT_OK


def cmd_check(args) -> int:
    d = read_kdiss(args.input)
    method = "constructive" if args.method == "fit" else args.method
    if method == "six-point" and d.k != 3:
        raise UsageError("the six-point method needs k = 3")
    if method == "six-point" and len(d.ground_set) < 5:
        raise UsageError("the six-point method needs at least 5 labels")
    report = decide(d, args.mode, method)
    if args.json:
        _emit(report.to_json() + "\n")
    elif report.verdict:
        _emit(f"accept: {args.mode}\n{write_newick(report.witness)}\n")
    else:
        rej = report.rejection
        where = f" on {','.join(rej['labels'])}" if "labels" in rej else ""
        _emit(f"reject: {rej['kind']}{where}: {rej['detail']}\n")
    return EXIT_OK if report.verdict else EXIT_REJECT


def cmd_fit(args) -> int:
    d = read_kdiss(args.input)
    report = decide(d, args.mode, "constructive")
    if not report.verdict:
        rej = report.rejection
        where = f" on {','.join(rej['labels'])}" if "labels" in rej else ""
        print(f"reject: {rej['kind']}{where}: {rej['detail']}", file=sys.stderr)
        return EXIT_REJECT
    _emit(write_newick(report.witness) + "\n", args.out)
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if args.tree and args.seed is not None:
        raise UsageError("--tree and --seed are mutually exclusive")
    if args.tree:
        tree = read_newick(args.tree)
    elif args.seed is not None:
        tree = random_counterexample_tree(args.k, args.seed)
    else:
        tree = None
    if args.mode == "equidistant":
        if args.lift is not None:
            raise UsageError("--lift applies to treelike counterexamples only")
        d = counterexample_equidistant(args.k, tree=tree, alpha=args.alpha)
    else:
        d = counterexample_treelike(args.k, lift=args.lift, alpha=args.alpha, tree=tree)
    write_kdiss(d, args.out)
    return EXIT_OK


def cmd_triplets(args) -> int:
    if args.action == "extract":
        _emit(format_triplets(extract(read_newick(args.tree))), args.out)
        return EXIT_OK
    if args.action == "recover":
        _emit(write_newick(topology_from_kdiss(read_kdiss(args.input))) + "\n", args.out)
        return EXIT_OK
    r = read_triplets(args.input)
    if args.action == "check":
        report = check_R1_R2(r)
        if args.json:
            _emit(report.to_json() + "\n")
        else:
            lines = ["pass" if report.verdict else "fail"]
            lines += [f"{v.condition}: {' '.join(v.labels)}" for v in report.violations]
            _emit("\n".join(lines) + "\n")
        return EXIT_OK if report.verdict else EXIT_REJECT
    t = build_tree(r)
    if t is None:
        print("reject: no rooted tree displays exactly these triplets", file=sys.stderr)
        return EXIT_REJECT
    _emit(write_newick(t) + "\n", args.out)
    return EXIT_OK


def _selftest_checks():
    size = len(A_MATRIX)
    identity = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    yield "matrix identity", matmul(A_MATRIX, A_INVERSE) == identity
    ok = True
    for seed, (k, n) in enumerate([(2, 4), (3, 6), (3, 7)]):
        labels = [f"x{i}" for i in range(1, n + 1)]
        for rooted in (False, True):
            mode = "equidistant" if rooted else "treelike"
            t = random_tree(labels, rooted=rooted, equidistant=rooted, seed=seed)
            report = decide(from_tree(t, k), mode)
            ok = ok and report.verdict and isomorphic(report.witness, t)
    yield "round trip", ok
    d = counterexample_equidistant(3)
    local = all(decide(restrict_map(d, z), "equidistant").verdict for z in combinations(d.ground_set, 5))
    yield "counterexample", local and not decide(d, "equidistant").verdict


def cmd_selftest(args) -> int:
    ok = True
    for name, passed in _selftest_checks():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_REJECT


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdissim", description="Exact k-dissimilarities of phylogenetic trees.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="k-dissimilarity of a Newick tree")
    c.add_argument("--tree", required=True)
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--subset", help="comma-separated labels: print one value")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_compute)

    c = sub.add_parser("check", help="decide treelike/equidistant")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--mode", choices=["treelike", "equidistant"], required=True)
    c.add_argument("--method", choices=["constructive", "exhaustive", "six-point", "fit"], default="constructive")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("fit", help="print the witnessing tree")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--mode", choices=["treelike", "equidistant"], required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_fit)

    c = sub.add_parser("counterexample", help="locally fine, globally failing map")
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--mode", choices=["treelike", "equidistant"], required=True)
    c.add_argument("--alpha", type=_rational, default=Fraction(1), help="surgery amount (default 1)")
    c.add_argument("--tree", help="equidistant base tree; default is a balanced one")
    c.add_argument("--seed", type=int, help="draw a random base tree instead")
    c.add_argument("--lift", type=_rational, help="treelike mode: root lift (default: smallest valid)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_counterexample)

    c = sub.add_parser("triplets", help="rooted triplet systems")
    tsub = c.add_subparsers(dest="action", required=True)
    t = tsub.add_parser("extract", help="triplets displayed by a rooted tree")
    t.add_argument("--tree", required=True)
    t.add_argument("--out")
    t = tsub.add_parser("check", help="test the two consistency conditions")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--json", action="store_true")
    t = tsub.add_parser("build", help="rooted tree displaying exactly these triplets")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--out")
    t = tsub.add_parser("recover", help="rooted topology from an equidistant map")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--out")
    c.set_defaults(func=cmd_triplets)

    c = sub.add_parser("selftest", help="matrix identity and round-trip smoke checks")
    c.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
