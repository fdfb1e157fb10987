"""Command-line entry point: ``foconv <subcommand> [options]``.

Exit status is 0 on success, 1 on a domain error (a JSON error object goes
to stderr) and 2 on a usage error. Vertex ids on the command line and in all
output are 1-based. Options may also come from ``--config FILE.json`` (keys
are option names with dashes replaced by underscores); flags on the command
line take precedence.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path
from typing import Sequence

from . import evaluate, experiments, graph, lattice, rooting
from .formula import parse

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


def _n_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI or a comma list, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty range")
    return out


def _shift_vertices(obj):
    """Ground sets of measures are vertex ids; shift them to 1-based for output."""
    obj = dict(obj)
    obj["ground"] = [v + 1 for v in obj["ground"]]
    obj["weights"] = [{**w, "set": [v + 1 for v in w["set"]]} for w in obj["weights"]]
    return obj


def _load_graph(path) -> graph.Graph | graph.RootedGraph:
    return graph.load(path)


def _plain(g):
    return g.graph if isinstance(g, graph.RootedGraph) else g


def _seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(32)


# ---------------------------------------------------------------------------
# subcommand handlers: each returns a JSON-ready object or CSV text
# ---------------------------------------------------------------------------

def cmd_stone(args):
    g = _load_graph(args.graph)
    if args.root is not None:
        g = graph.RootedGraph(_plain(g), args.root - 1)
    return evaluate.stone_pairing(g, parse(args.formula)).to_dict()


def cmd_definable(args):
    g = _load_graph(args.graph)
    ds = evaluate.definable_set(g, parse(args.formula))
    return {"arity": ds.arity, "count": len(ds), "tuples": [[v + 1 for v in t] for t in ds.tuples]}


def cmd_pushforward(args):
    g = _plain(_load_graph(args.graph))
    mu = evaluate.pushforward(g, parse(args.xi), parse(args.formula))
    return _shift_vertices(mu.to_dict())


def cmd_lattice_forward(args):
    mu = lattice.SubsetMeasure.from_dict(json.loads(Path(args.measure).read_text()))
    return lattice.forward_table(mu).to_dict()


def cmd_lattice_reconstruct(args):
    obj = json.loads(Path(args.ftable).read_text())
    table = lattice.FTable.from_dict(obj)
    out = {**table.to_dict(), **lattice.reconstruct(table, tol=args.tol).to_dict()}
    if args.perturb is not None:
        out["perturbation"] = lattice.perturbation_report(
            table, delta=args.perturb, trials=args.trials, seed=args.seed or 0, tol=args.tol).to_dict()
    return out


def _report_out(report, args):
    return report.to_csv() if args.format == "csv" else report.to_dict()


def cmd_root_single(args):
    seq = graph.load_sequence(args.sequence)
    report = rooting.root_single(seq, parse(args.xi), parse(args.formula), index=args.index,
                                 window=args.window, theta=args.theta, tail=args.tail,
                                 require_constant=not args.allow_varying)
    return _report_out(report, args)


def cmd_root_multi(args):
    seq = graph.load_sequence(args.sequence)
    report = rooting.root_multi(seq, parse(args.xi), [parse(f) for f in args.formula], tau0=args.tau0,
                                tau=args.tau, window=args.window, theta=args.theta, tail=args.tail)
    return _report_out(report, args)


def cmd_extend_prefix(args):
    seq = graph.load_sequence(args.sequence)
    report = rooting.extend_prefix(seq, parse(args.xi), [parse(f) for f in args.formula], args.prefix,
                                   tol=args.tol, tau0=args.tau0, tau=args.tau, window=args.window,
                                   theta=args.theta, tail=args.tail)
    return report.to_dict()


def cmd_gen_bipartite(args):
    seed = _seed(args)
    g = graph.gen_bipartite_random(args.n, args.p, seed)
    return {**graph.graph_to_dict(g), "meta": {"generator": "bipartite", "n": args.n, "p": args.p, "seed": seed}}


def cmd_interlace(args):
    seq = graph.interlace(graph.load_sequence(args.first), graph.load_sequence(args.second))
    return [graph.graph_to_dict(g) for g in seq]


def cmd_check_extension(args):
    if args.sequence:
        seq = graph.load_sequence(args.sequence)
        return experiments.run_extension_scan([_plain(g) for g in seq], args.k).to_dict()
    g = _plain(_load_graph(args.graph))
    ok, witness = graph.check_bipartite_extension(g, args.k)
    return {"k": args.k, "ok": ok, "witness": experiments._witness_1based(witness)}


def cmd_counterexample(args):
    seed = _seed(args)
    report = experiments.run_counterexample(args.n, args.p, args.q, seed, part=args.part, tol=args.tol)
    if args.format == "csv":
        summary = report.summary()
        print(json.dumps({k: summary[k] for k in ("verdict", "all_within_tol", "min_gap", "eps", "seed")}),
              file=sys.stderr)
        return report.to_csv()
    return {**report.summary(), "rows": report.rows}


def cmd_lattice_oracle(args):
    g = _plain(_load_graph(args.graph))
    report = experiments.run_lattice_oracle(g, parse(args.xi), parse(args.formula), args.k_max, args.l_max,
                                            tol=args.tol, strict=False)
    return report.to_dict()


def cmd_unlabel(args):
    seq = graph.load_sequence(args.sequence)
    plain, formulas = experiments.unlabel_with_gadgets([_plain(g) for g in seq])
    return {"graphs": [graph.graph_to_dict(g) for g in plain], "formulas": formulas}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, csv_ok: bool = False) -> None:
    p.add_argument("-o", "--output", help="write the result here instead of stdout")
    if csv_ok:
        p.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")


def _verdict_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=rooting.DEFAULT_WINDOW,
                   help="converging iff the last WINDOW deltas are below THETA (default 3)")
    p.add_argument("--theta", type=float, default=rooting.DEFAULT_THETA,
                   help="delta threshold; oscillating when half the tail deltas exceed 3*THETA (default 0.05)")
    p.add_argument("--tail", type=float, default=rooting.DEFAULT_TAIL,
                   help="fraction of the sequence forming the tail window (default 0.3)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="foconv", description="Stone pairings, algebraic rooting and "
                                  "boolean-lattice reconstruction on finite graphs.")
    top.add_argument("--config", help="JSON file with option defaults (command-line flags win)")
    sub = top.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, handler, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.set_defaults(handler=handler)
        return p

    p = add("stone", cmd_stone, "Exact Stone pairing <phi, G> = |phi(G)| / n^p.")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--formula", required=True, help="formula text; may use 'root' if the graph is rooted")
    p.add_argument("--root", type=int, help="root vertex (1-based), overriding the file's root")
    _common(p)

    p = add("definable", cmd_definable, "Solution set phi(G) of a formula (1-based tuples).")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--formula", required=True, help="formula text")
    _common(p)

    p = add("pushforward", cmd_pushforward,
            "Measure on subsets of xi(G): law of {u in xi(G) : G |= phi(v, u)} for uniform v in V^p.")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--xi", required=True, help="unary formula defining the candidate roots")
    p.add_argument("--formula", required=True, help="rooted formula phi with p >= 1 free variables")
    _common(p)

    p = add("lattice-forward", cmd_lattice_forward,
            "Table Pr[F_l^k] (k independent subsets meet in >= l elements) for a subset measure.")
    p.add_argument("--measure", required=True, help='measure JSON {"ground": [...], "weights": [{"set": [...], "weight": "a/b"}]}')
    _common(p)

    p = add("lattice-reconstruct", cmd_lattice_reconstruct,
            "Recover the level multisets A_l of filter masses from a Pr[F_l^k] table.")
    p.add_argument("--ftable", required=True, help='FTable JSON {"m": int, "P": [[...], ...]}')
    p.add_argument("--tol", type=float, default=lattice.ROOT_TOL, help="root-recovery tolerance (default 1e-6)")
    p.add_argument("--perturb", type=float, help="also report displacement under perturbations of this size")
    p.add_argument("--trials", type=int, default=20, help="perturbation trials (default 20)")
    p.add_argument("--seed", type=int, help="seed for perturbations (default 0)")
    _common(p)

    for name, handler, help_ in (
        ("root-single", cmd_root_single, "Root every graph at the INDEX-th vertex of its root ordering and "
                                         "report convergence of the sorted rooted values."),
        ("root-multi", cmd_root_multi, "Roots tracking several formulas at once via a power conjunction."),
        ("extend-prefix", cmd_extend_prefix, "Run root-multi on every prefix of the formula list and "
                                             "report disagreements between limit estimates."),
    ):
        p = add(name, handler, help_)
        p.add_argument("--sequence", required=True, help="graph sequence: JSON array or directory of numbered files")
        p.add_argument("--xi", required=True, help="unary formula defining the candidate roots")
        if name == "root-single":
            p.add_argument("--formula", required=True, help="rooted formula phi")
            p.add_argument("--index", type=int, default=1, help="1-based position in the ordering (default 1)")
            p.add_argument("--allow-varying", action="store_true",
                           help="do not require |xi(G_n)| to be constant")
        else:
            p.add_argument("--formula", action="append", required=True, help="rooted formula (repeatable)")
            p.add_argument("--tau0", type=float, default=1e-9, help="positivity threshold (default 1e-9)")
            p.add_argument("--tau", type=float, default=1e-9, help="product separation for exponents (default 1e-9)")
        if name == "extend-prefix":
            p.add_argument("--prefix", type=int, help="prefix length t (default: all formulas)")
            p.add_argument("--tol", type=float, default=1e-9, help="agreement tolerance (default 1e-9)")
        _verdict_opts(p)
        _common(p, csv_ok=name != "extend-prefix")

    p = add("gen-bipartite", cmd_gen_bipartite, "Random marked bipartite graph with parts n^2 (A) and n (B).")
    p.add_argument("--n", type=int, required=True, help="size parameter n")
    p.add_argument("--p", type=float, required=True, help="edge probability in (0, 1)")
    p.add_argument("--seed", type=int, help="RNG seed (a generated seed is recorded in the output)")
    _common(p)

    p = add("interlace", cmd_interlace, "Alternate two sequences: first[1], second[1], first[2], ...")
    p.add_argument("--first", required=True, help="sequence for odd positions")
    p.add_argument("--second", required=True, help="sequence for even positions")
    _common(p)

    p = add("check-extension", cmd_check_extension, "Bipartite k-extension property (with failing witness).")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="bipartite-marked graph JSON")
    src.add_argument("--sequence", help="sequence: report verdicts for every k up to K")
    p.add_argument("--k", type=int, required=True, help="level k (or k_max with --sequence)")
    _common(p)

    p = add("counterexample", cmd_counterexample,
            "Interlaced G_n(p), G_n(q): rooted value of 'x ~ root' for every root, parity gaps vs (q-p)/3.")
    p.add_argument("--p", type=float, required=True, help="edge probability of odd positions")
    p.add_argument("--q", type=float, required=True, help="edge probability of even positions")
    p.add_argument("--n", type=_n_range, required=True, help="size parameters, LO..HI or a comma list")
    p.add_argument("--seed", type=int, help="RNG seed (a generated seed is recorded in the output)")
    p.add_argument("--part", choices=("A", "B"), default="B", help="part holding the roots (default B)")
    p.add_argument("--tol", type=float, default=0.15, help="band around the edge probability (default 0.15)")
    _common(p, csv_ok=True)

    p = add("lattice-oracle", cmd_lattice_oracle,
            "Check <psi_{k,l}, G> == Pr[F_l^k] exactly and the level-multiset round trip.")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--xi", required=True, help="unary formula, |xi(G)| <= 5")
    p.add_argument("--formula", required=True, help="rooted formula phi")
    p.add_argument("--k-max", type=int, default=2, help="largest k (default 2)")
    p.add_argument("--l-max", type=int, default=2, help="largest l (default 2)")
    p.add_argument("--tol", type=float, default=1e-6, help="round-trip tolerance (default 1e-6)")
    _common(p)

    p = add("unlabel", cmd_unlabel, "Replace A/B marks by triangle (B) and pentagon (A) gadgets.")
    p.add_argument("--sequence", required=True, help="bipartite-marked graph sequence")
    _common(p)
    return top


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            cfg = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {known.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        for sub in subparsers.choices.values():
            hits = {a.dest: a for a in sub._actions if a.dest in cfg}
            for action in hits.values():
                action.required = False
            sub.set_defaults(**{k: cfg[k] for k in hits})
    return parser.parse_args(argv)


def _emit(result, output: str | None) -> None:
    text = result if isinstance(result, str) else json.dumps(result, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        result = args.handler(args)
        _emit(result, args.output)
    except Exception as exc:  # every failure past parsing is reported, never raised
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
