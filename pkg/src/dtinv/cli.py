"""Command-line interface: ``dtinv <subcommand>``.

Exit codes: 0 verified (or artifact written), 1 candidate refuted,
2 program unsafe, 3 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dtlearn, features, formula as fm, pac, pipeline as pl, program as pm, sampler, verifier

EXIT_OK, EXIT_FAIL, EXIT_UNSAFE, EXIT_ERROR = 0, 1, 2, 3


def _dump(obj, out=None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load_program(path: str):
    source = Path(path).read_text()
    try:
        return pm.parse(source), source
    except pm.DslError as exc:
        raise pl.PipelineError("parse", exc) from exc


def _sampler_config(args, source: str = "") -> sampler.SamplerConfig:
    max_states = args.max_states
    if getattr(args, "schedule", None):
        return sampler.SamplerConfig(pl.parse_schedule(args.schedule), max_states)
    if any(v is not None for v in (args.L, args.I, args.M)):
        L0, I0, M0 = sampler.default_schedule()[0]
        return sampler.SamplerConfig.single(args.L or L0, args.I or I0, args.M or M0, max_states)
    prag = pl.read_pragmas(source)
    if "sampler" in prag:
        return sampler.SamplerConfig(pl.parse_schedule(prag["sampler"]), max_states)
    return sampler.SamplerConfig(max_states=max_states)


def _augment(args, ts, source: str) -> list:
    if args.augment is not None:
        return features.parse_augment(args.augment)
    prag = pl.read_pragmas(source)
    if "augment" in prag:
        return features.parse_augment(prag["augment"])
    return features.default_augment(ts)


def _add_sampler_args(p) -> None:
    p.add_argument("--L", type=int, help="initial box radius")
    p.add_argument("--I", type=int, help="iteration budget per run")
    p.add_argument("--M", type=int, help="perturbation margin around good states")
    p.add_argument("--schedule", help="escalation rounds 'L,I,M; L,I,M; ...'")
    p.add_argument("--max-states", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0, help="recorded for reproducibility; sampling is deterministic")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    ts, source = _load_program(args.file)
    res = sampler.sample(ts, _sampler_config(args, source))
    if isinstance(res, sampler.Unsafe):
        _dump({"vars": list(ts.vars), "unsafe": list(res.witness)}, args.output)
        return EXIT_UNSAFE
    _dump(res.to_json(), args.output)
    return EXIT_OK


def cmd_slopes(args) -> int:
    ts, source = _load_program(args.file)
    if args.samples:
        sample = sampler.SampleSet.from_json(json.loads(Path(args.samples).read_text()))
    elif args.domain == "pca":
        sample = sampler.sample(ts, _sampler_config(args, source))
        if isinstance(sample, sampler.Unsafe):
            print(f"program unsafe: {sample.witness}", file=sys.stderr)
            return EXIT_UNSAFE
    else:
        sample = None
    extra = _augment(args, ts, source)
    X = sample.X if sample is not None else np.zeros((0, ts.dim), dtype=np.int64)
    Xa, terms = features.augment_nonlinear(X, ts.vars, extra)
    cfg = pl.PipelineConfig(domain=args.domain, pca_k=args.pca_k)
    slopes = pl.build_slopes(ts, cfg, terms, Xa[sample.y == sampler.GOOD] if sample is not None else None)
    out = slopes.to_json()
    out["vars"] = list(ts.vars)
    if args.samples:
        out["Z"] = features.transform(Xa, slopes).tolist()
        out["y"] = sample.y.tolist()
    _dump(out, args.output)
    return EXIT_OK


def cmd_learn(args) -> int:
    data = json.loads(Path(args.transformed).read_text())
    if "Z" not in data:
        print("learn needs a transformed sample (run `dtinv slopes FILE --samples S.json`)", file=sys.stderr)
        return EXIT_ERROR
    tree = dtlearn.learn(np.asarray(data["Z"], dtype=np.int64), np.asarray(data["y"], dtype=np.int64),
                         args.criterion, args.max_nodes)
    if args.emit_formula or args.formula_json:
        slopes = features.SlopeMatrix.from_json(data)
        f = fm.simplify(fm.dt_to_form(tree, slopes), slopes.terms)
        if args.formula_json:
            _dump({"invariant": fm.format_formula(f, slopes.terms), "formula": fm.to_json(f),
                   "terms": [t.to_json() for t in slopes.terms], "tree": tree.to_json()}, args.output)
        else:
            print(fm.format_formula(f, slopes.terms))
        return EXIT_OK
    _dump(tree.to_json(), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    ts, _ = _load_program(args.file)
    inv = pm.parse_pred(args.formula)
    for name in pm.variables(inv):
        if name not in ts.index:
            raise pm.SemanticError(f"formula mentions undeclared variable '{name}'")
    if args.emit_smt:
        Path(args.emit_smt).write_text(verifier.emit_smt(ts, inv))
        print(f"wrote {args.emit_smt}")
        return EXIT_OK
    verdict = verifier.check_bounded(ts, inv, args.bound)
    if args.json:
        _dump(verdict.to_json())
    else:
        print(verdict)
    if verdict.status == verifier.ERROR:
        return EXIT_ERROR
    return EXIT_OK if verdict.is_valid else EXIT_FAIL


def _pipeline_config(args, source: str) -> pl.PipelineConfig:
    """Benchmark pragmas first, then explicit command-line options on top."""
    cfg = pl.config_for_source(source)
    kw = dict(cfg.__dict__)
    if args.schedule or any(v is not None for v in (args.L, args.I, args.M)) or args.max_states != 200_000:
        kw["sampler"] = _sampler_config(args, source)
    if args.augment is not None:
        kw["augment"] = features.parse_augment(args.augment)
    for key in ("domain", "pca_k", "criterion", "max_nodes"):
        if getattr(args, key) is not None:
            kw[key] = getattr(args, key)
    if args.emit_smt:
        kw["bound"], kw["emit_smt"] = None, args.emit_smt
    elif args.bound is not None:
        kw["bound"] = args.bound
    kw["seed"] = args.seed
    return pl.PipelineConfig(**kw)


def cmd_infer(args) -> int:
    ts, source = _load_program(args.file)
    cfg = _pipeline_config(args, source)
    res = pl.infer_invariant(ts, cfg)
    if args.json:
        _dump(res.to_json(), None if args.json == "-" else args.json)
    if res.status == pl.UNSAFE:
        print(f"unsafe: state {res.witness} is reachable and violates the assertion")
    elif res.status == pl.ERROR:
        print(f"error in stage {res.error.stage}: {res.error.cause}", file=sys.stderr)
    elif args.json != "-":
        print(res.text)
        if res.verdict is not None:
            print(f"verdict: {res.verdict}")
        else:
            print(f"wrote {cfg.emit_smt}")
    if args.report:
        r = res.report
        print(f"samples: {r.n_good} good, {r.n_bad} bad; slopes m={r.m}; tree nodes={r.tree_size}; "
              f"|phi|={r.n_predicates}", file=sys.stderr)
        print(f"time: sample {r.t_sample:.3f}s, transform {r.t_transform:.3f}s, learn {r.t_learn:.3f}s, "
              f"verify {r.t_verify:.3f}s, total {r.t_total:.3f}s", file=sys.stderr)
    return res.exit_code


def cmd_pac_bound(args) -> int:
    q = pac.PacQuery(args.epsilon, args.delta, args.max_nodes, args.dim)
    vc = pac.dt_vc_bound(q.K, q.d)
    t1, t2 = pac.blumer_terms(q.epsilon, q.delta, vc)
    print(f"sample size: {pac.sample_size_for(q)}")
    print(f"  4/eps*ln(2/delta)      = {t1:.4f}")
    print(f"  8*VC/eps*ln(13/eps)    = {t2:.4f}  (VC = {vc})")
    print(f"note: {pac.VC_NOTE}")
    print(f"note: {pac.LOG_NOTE}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = pl.PipelineConfig(criterion=args.criterion, max_nodes=args.max_nodes, bound=args.bound)
    jobs = pl.cpu_count() if args.jobs == 0 else args.jobs
    rows = pl.run_suite(args.directory, cfg, timeout=args.timeout, memory_mb=args.memory_mb, jobs=jobs)
    print(pl.suite_table(rows), end="")
    if args.csv:
        Path(args.csv).write_text(pl.suite_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtinv", description="Decision-tree invariant inference for single-loop programs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample good/bad states as JSON")
    p.add_argument("file")
    _add_sampler_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("slopes", help="emit the slope matrix (and the transformed sample with --samples)")
    p.add_argument("file")
    p.add_argument("--domain", choices=pl.DOMAINS, default="octagon")
    p.add_argument("--augment", help="extra columns, e.g. mod:x:2,square:i,mul:x:y")
    p.add_argument("--samples", help="sample JSON from `dtinv sample`; adds Z and y to the output")
    p.add_argument("--pca-k", type=int)
    _add_sampler_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_slopes)

    p = sub.add_parser("learn", help="learn a decision tree from a transformed sample")
    p.add_argument("transformed")
    p.add_argument("--criterion", choices=dtlearn.CRITERIA, default="gini")
    p.add_argument("--max-nodes", type=int, default=63)
    p.add_argument("--emit-formula", action="store_true", help="print the simplified candidate invariant")
    p.add_argument("--formula-json", action="store_true", help="emit the formula AST as JSON")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("verify", help="check a candidate invariant")
    p.add_argument("file")
    p.add_argument("--formula", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--bound", type=int, default=50)
    mode.add_argument("--emit-smt", metavar="OUT.smt2")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("infer", help="run the whole pipeline (benchmark pragmas apply unless overridden)")
    p.add_argument("file")
    p.add_argument("--domain", choices=pl.DOMAINS)
    p.add_argument("--augment")
    p.add_argument("--pca-k", type=int)
    p.add_argument("--criterion", choices=dtlearn.CRITERIA)
    p.add_argument("--max-nodes", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--bound", type=int, help="bounded-check box radius (default 50)")
    mode.add_argument("--emit-smt", metavar="OUT.smt2")
    _add_sampler_args(p)
    p.add_argument("--json", metavar="OUT.json", help="write the full result as JSON ('-' for stdout)")
    p.add_argument("--report", action="store_true", help="print stage times and counts to stderr")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("pac-bound", help="PAC sample-size bound for bounded decision trees")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--max-nodes", type=int, default=63)
    p.add_argument("--dim", type=int, required=True)
    p.set_defaults(func=cmd_pac_bound)

    p = sub.add_parser("bench", help="run every *.dtinv benchmark in a directory")
    p.add_argument("directory")
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--memory-mb", type=int, default=8192)
    p.add_argument("--jobs", type=int, default=1, help="parallel benchmark processes (0 = all cores)")
    p.add_argument("--criterion", choices=dtlearn.CRITERIA, default="gini")
    p.add_argument("--max-nodes", type=int, default=63)
    p.add_argument("--bound", type=int, default=50)
    p.add_argument("--csv", metavar="OUT.csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except pl.PipelineError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return EXIT_ERROR
    except (pm.DslError, pm.ArithmeticOverflow, sampler.SamplerError, dtlearn.LearnError, ValueError,
            OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
