"""Command-line entry point: ``tl <command> [flags]``.

Exit codes: 0 success, 1 user error (bad input, parse error), 2 internal
invariant failure (including theorem-check violations).
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from .evaluator import evaluate
from .expr import analyze
from .graph import Graph, GraphError, dump_corpus, exhaustive_graphs, load_corpus, load_graph, random_graph
from .parser import ParseError, load_expressions, parse, render
from .registry import DEFAULT_FUNCTIONS, EvaluationError

USER_ERROR = 1
INTERNAL_ERROR = 2


class UserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserError(message)


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _emit(args, text_lines, obj):
    if args.json:
        print(_dumps(obj))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------- input helpers

def _functions(args):
    reg = DEFAULT_FUNCTIONS
    if getattr(args, "mlp", None):
        reg = reg.copy()
        for item in args.mlp:
            name, _, path = item.partition("=")
            if not name or not path:
                raise UserError(f"--mlp expects NAME=FILE, got {item!r}")
            try:
                payload = json.loads(Path(path).read_text())
                reg.register_mlp(name, payload)
            except (OSError, json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
                raise UserError(f"--mlp {name}: {exc}") from None
    return reg


def _expressions(args, functions=None) -> list:
    out = []
    for text in args.expr or []:
        out.append(("expr", parse(text, functions)))
    for path in args.expr_file or []:
        out.extend(load_expressions(path, functions))
    if not out:
        raise UserError("give an expression with --expr or --expr-file")
    return out


def _single(args, functions=None):
    exprs = _expressions(args, functions)
    if len(exprs) != 1:
        raise UserError(f"this command takes one expression, got {len(exprs)}")
    return exprs[0][1]


def _corpus(spec: str) -> list[Graph]:
    if spec.startswith("exhaustive:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise UserError(f"bad corpus spec {spec!r}; expected exhaustive:N") from None
        if not 0 <= n <= 7:
            raise UserError("exhaustive corpora are available for 0 <= N <= 7")
        return exhaustive_graphs(n)
    if spec.startswith("random:"):
        parts = spec.split(":")[1:]
        try:
            n, count = int(parts[0]), int(parts[1])
            seed = int(parts[2]) if len(parts) > 2 else 0
        except (ValueError, IndexError):
            raise UserError(f"bad corpus spec {spec!r}; expected random:N:COUNT[:SEED]") from None
        rng = random.Random(seed)
        return [random_graph(n, rng) for _ in range(count)]
    return load_corpus(spec)


def _assignment(items) -> dict:
    nu = {}
    for item in items or []:
        name, _, value = item.partition("=")
        if not (name.startswith("x") and name[1:].isdigit()) or not value.lstrip("-").isdigit():
            raise UserError(f"--assign expects xI=V, got {item!r}")
        nu[int(name[1:])] = int(value)
    return nu


def _fmt_value(x) -> str:
    if isinstance(x, float):
        return repr(x)
    q = Fraction(x)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------- commands

def cmd_parse(args):
    e = _single(args, _functions(args))
    _emit(args, [render(e)], {"expr": render(e)})


def cmd_analyze(args):
    funcs = _functions(args)
    rows = []
    for name, e in _expressions(args, funcs):
        rep = analyze(e).to_json()
        rows.append((name, rep))
    if args.json:
        print(_dumps(rows[0][1] if len(rows) == 1 else [{"name": n, **r} for n, r in rows]))
    else:
        for name, rep in rows:
            print(f"{name}: " + " ".join(f"{k}={v}" for k, v in rep.items()))


def cmd_eval(args):
    funcs = _functions(args)
    e = _single(args, funcs)
    if not args.graph:
        raise UserError("--graph is required")
    G = load_graph(args.graph)
    nu = _assignment(args.assign)
    free = sorted(analyze(e).free_vars)
    missing = [v for v in free if v not in nu]
    rows = []
    for combo in itertools.product(range(G.n), repeat=len(missing)):
        full = dict(nu)
        full.update(zip(missing, combo))
        val = evaluate(e, G, full, args.mode, funcs)
        rows.append(({f"x{v}": full[v] for v in free}, _fmt_value(val)))
    if not missing:
        _emit(args, [rows[0][1]], {"assignment": rows[0][0], "value": rows[0][1]})
        return
    lines = [" ".join(f"{k}={v}" for k, v in a.items()) + f": {val}" for a, val in rows]
    _emit(args, lines, {"rows": [{"assignment": a, "value": val} for a, val in rows]})


def cmd_wl(args):
    from .wl import color_refinement, wl_k, wl_report

    if args.graph:
        graphs = [load_graph(p) for p in args.graph]
    elif args.corpus:
        graphs = _corpus(args.corpus)
    else:
        raise UserError("give --graph or --corpus")
    reports = []
    for G in graphs:
        trace = color_refinement(G, args.t) if args.algo == "cr" else wl_k(G, args.k, args.t)
        reports.append(wl_report(trace))
    obj = reports[0] if len(reports) == 1 else reports
    lines = [f"{r['algo']} rounds={r['rounds']} stable={r['stable_round']} label={r['graph_label']}" for r in reports]
    _emit(args, lines, obj)


def cmd_rewrite(args):
    from .treewidth import rewrite_with_report

    funcs = _functions(args)
    e = _single(args, funcs)
    out, rep = rewrite_with_report(e)
    obj = {"expr": render(out), **rep.to_json()}
    _emit(args, [render(out), _dumps(rep.to_json())], obj)


def cmd_encode(args):
    from .gnn import GnnLayerSpec, bound_report, encode, random_spec

    if args.params:
        try:
            params = json.loads(Path(args.params).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UserError(f"--params: {exc}") from None
        if "arch" in params and "params" in params:
            spec = GnnLayerSpec.from_json(params)
        else:
            if not args.arch:
                raise UserError("--arch is required unless the params file holds a full spec")
            spec = GnnLayerSpec(args.arch, args.layers, params)
    else:
        if not args.arch:
            raise UserError("--arch is required")
        options = {"k": args.k} if args.k else {}
        spec = random_spec(args.arch, args.layers, args.in_dim, args.seed, **options)
    enc = encode(spec)
    rep = bound_report(enc)
    obj = {"arch": spec.arch, "layers": spec.layers, "exprs": [render(e) for e in enc.exprs],
           "bound": rep.to_json(), "meta": enc.meta}
    _emit(args, [render(e) for e in enc.exprs] + [_dumps(rep.to_json())], obj)


def cmd_synth(args):
    from .logic import synthesize_cr_distinguisher

    if not args.graph or len(args.graph) != 2:
        raise UserError("synth needs two --graph files (G then H)")
    G, H = load_graph(args.graph[0]), load_graph(args.graph[1])
    for v, X in ((args.vertex, G), (args.other_vertex, H)):
        if not 0 <= v < X.n:
            raise UserError(f"vertex {v} is not in a graph with {X.n} vertices")
    e = synthesize_cr_distinguisher(G, args.vertex, H, args.other_vertex, args.t)
    if e is None:
        _emit(args, [f"not separated by {args.t} rounds of colour refinement"], {"separated": False})
        return
    rep = analyze(e).to_json()
    _emit(args, [render(e), _dumps(rep)], {"separated": True, "expr": render(e), "analysis": rep})


def cmd_separate(args):
    from .separation import check_theorem, induced_partition, refines, wl_partition

    if not args.corpus:
        raise UserError("--corpus is required")
    corpus = _corpus(args.corpus)
    if args.theorem:
        rep = check_theorem(args.theorem, corpus, k=args.k or (2 if args.theorem in ("thm2", "thm4_2") else 1),
                            t=args.t, n_exprs=args.random_exprs, seed=args.seed, threads=args.threads)
        obj = rep.to_json()
        _emit(args, [f"{rep.theorem}: {len(rep.violations)} violations over {rep.pairs_checked} pair checks",
                     _dumps(obj)], obj)
        return 0 if rep.ok else INTERNAL_ERROR
    P = wl_partition(corpus, args.algo, args.k or 1, args.t, args.s)
    obj = {"algo": args.algo, "k": args.k or 1, "t": args.t, "s": args.s, "classes": P.class_count,
           "partition": P.classes}
    if args.expr or args.expr_file:
        exprs = [e for _, e in _expressions(args, _functions(args))]
        Q = induced_partition(exprs, corpus, args.s, threads=args.threads)
        obj["expr_classes"] = Q.class_count
        obj["wl_refines_exprs"] = refines(P, Q)
    _emit(args, [_dumps(obj)], obj)
    return 0


def cmd_corpus(args):
    graphs = _corpus(args.corpus)
    if args.json:
        print(_dumps({"count": len(graphs), "sizes": sorted({G.n for G in graphs})}))
    else:
        sys.stdout.write(dump_corpus(graphs))


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tl", description="Tensor-language expressions over labelled graphs.")
    p.add_argument("--threads", type=int, default=1, help="parallelism cap (default 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, exprs=True):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--threads", type=int, default=1, help="parallelism cap (default 1)")
        if exprs:
            sp.add_argument("--expr", action="append", help="expression text (repeatable)")
            sp.add_argument("--expr-file", action="append", help="expression file (repeatable)")
            sp.add_argument("--mlp", action="append", help="register an MLP payload as NAME=FILE")

    sp = sub.add_parser("parse", help="parse and pretty-print an expression")
    common(sp)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("analyze", help="variables, depths and guardedness")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("eval", help="evaluate an expression on a graph")
    common(sp)
    sp.add_argument("--graph", help="graph JSON file")
    sp.add_argument("--assign", action="append", help="valuation xI=V (repeatable)")
    sp.add_argument("--mode", choices=("exact", "float"), default="exact")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("wl", help="colour refinement / k-WL report")
    common(sp, exprs=False)
    sp.add_argument("--graph", action="append", help="graph JSON file (repeatable)")
    sp.add_argument("--corpus", help="exhaustive:N, random:N:COUNT[:SEED] or a JSONL file")
    sp.add_argument("--algo", choices=("cr", "wl"), default="cr")
    sp.add_argument("-k", type=int, default=1)
    sp.add_argument("-t", type=int, default=None, help="rounds (default: until stable)")
    sp.set_defaults(func=cmd_wl)

    sp = sub.add_parser("rewrite", help="variable-minimising rewrite")
    common(sp)
    sp.set_defaults(func=cmd_rewrite)

    sp = sub.add_parser("encode", help="compile a GNN specification")
    common(sp, exprs=False)
    sp.add_argument("--arch")
    sp.add_argument("--layers", type=int, default=1)
    sp.add_argument("--params", help="JSON weight payloads (or a full {arch, layers, params} spec)")
    sp.add_argument("--seed", type=int, default=0, help="seed for random weights when --params is absent")
    sp.add_argument("--in-dim", type=int, default=1)
    sp.add_argument("-k", type=int, default=0)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("synth", help="guarded distinguisher for two vertices")
    common(sp, exprs=False)
    sp.add_argument("--graph", action="append", help="graph JSON file; give G then H")
    sp.add_argument("--vertex", type=int, default=0)
    sp.add_argument("--other-vertex", type=int, default=0)
    sp.add_argument("-t", type=int, default=1)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("separate", help="partitions and theorem checks over a corpus")
    common(sp)
    sp.add_argument("--corpus")
    sp.add_argument("--algo", choices=("cr", "wl"), default="cr")
    sp.add_argument("-k", type=int, default=0)
    sp.add_argument("-t", type=int, default=1)
    sp.add_argument("-s", type=int, choices=(0, 1), default=1, help="item arity")
    sp.add_argument("--random-exprs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--theorem", choices=("thm2", "thm3", "thm4_1", "thm4_2"))
    sp.set_defaults(func=cmd_separate)

    sp = sub.add_parser("corpus", help="emit a graph corpus as JSONL")
    common(sp, exprs=False)
    sp.add_argument("corpus", help="exhaustive:N, random:N:COUNT[:SEED] or a JSONL file")
    sp.set_defaults(func=cmd_corpus)
    return p


def run(argv=None) -> int:
    from .expr import ExprError
    from .gnn import GnnSpecError
    from .logic import LogicError
    from .separation import SeparationError
    from .treewidth import NormalizationError
    from .wl import WLError

    user_errors = (UserError, ExprError, ParseError, GraphError, EvaluationError, GnnSpecError, LogicError, SeparationError,
                   NormalizationError, WLError, OSError, json.JSONDecodeError)
    try:
        args = build_parser().parse_args(argv)
        code = args.func(args)
        return code or 0
    except user_errors as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
