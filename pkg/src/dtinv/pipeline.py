"""The DTInv pipeline and the benchmark harness.

sample -> slopes -> Z = X' H^T -> learn tree -> tree to formula -> simplify
-> IsInvariant. There is no refinement loop: a candidate refuted by the
verifier is reported with its counterexample.
"""

from __future__ import annotations

import csv
import io
import multiprocessing as mp
import os
import re
import resource
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import dtlearn, features, formula as fm, program as pm, sampler, verifier

DOMAINS = ("octagon", "constants", "pca", "octagon+pca")

VERIFIED = "verified"
FAIL = "fail"
UNSAFE = "unsafe"
ERROR = "error"
UNCHECKED = "unchecked"

EXIT_CODES = {VERIFIED: 0, UNCHECKED: 0, FAIL: 1, UNSAFE: 2, ERROR: 3}


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    sampler: sampler.SamplerConfig = field(default_factory=sampler.SamplerConfig)
    domain: str = "octagon"
    augment: list | None = None  # None: derive mod columns from the program
    slope_rows: list | None = None  # explicit H rows, overrides ``domain``
    pca_k: int | None = None
    criterion: str = "gini"
    max_nodes: int = 63
    bound: int | None = 50
    emit_smt: str | None = None
    seed: int = 0

    def __post_init__(self):
        if (self.bound is None) == (self.emit_smt is None):
            raise ValueError("exactly one verification mode (bound or emit_smt) must be set")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown slope domain {self.domain!r}")
        if self.criterion not in dtlearn.CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be positive")


@dataclass
class RunReport:
    t_sample: float = 0.0
    t_transform: float = 0.0
    t_learn: float = 0.0
    t_verify: float = 0.0
    t_total: float = 0.0
    n_good: int = 0
    n_bad: int = 0
    m: int = 0
    tree_size: int = 0
    n_predicates: int = 0
    verdict: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class InferResult:
    status: str
    report: RunReport
    formula: fm.Formula | None = None
    terms: tuple = ()
    verdict: verifier.Verdict | None = None
    tree: dtlearn.DecisionTree | None = None
    slopes: features.SlopeMatrix | None = None
    witness: tuple | None = None
    error: PipelineError | None = None

    @property
    def text(self) -> str:
        return fm.format_formula(self.formula, self.terms) if self.formula is not None else ""

    @property
    def predicate(self) -> pm.Pred | None:
        return fm.to_pred(self.formula, self.terms) if self.formula is not None else None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_json(self) -> dict:
        out = {"status": self.status, "report": self.report.to_json()}
        if self.formula is not None:
            out["invariant"] = self.text
            out["formula"] = fm.to_json(self.formula)
            out["terms"] = [t.to_json() for t in self.terms]
        if self.verdict is not None:
            out["verdict"] = self.verdict.to_json()
        if self.tree is not None:
            out["tree"] = self.tree.to_json()
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.error is not None:
            out["error"] = {"stage": self.error.stage, "message": str(self.error.cause)}
        return out


def build_slopes(ts: pm.TransitionSystem, cfg: PipelineConfig, terms: tuple, X=None) -> features.SlopeMatrix:
    if cfg.slope_rows is not None:
        return features.SlopeMatrix(tuple(tuple(r) for r in cfg.slope_rows), terms)
    octagon = features.octagon_slopes(terms)
    if cfg.domain == "octagon":
        return octagon
    if cfg.domain == "constants":
        return features.constant_slopes(ts, terms)
    pca = features.pca_slopes(X, cfg.pca_k, terms)
    return pca if cfg.domain == "pca" else features.combine(octagon, pca)


def infer_invariant(ts: pm.TransitionSystem, cfg: PipelineConfig | None = None) -> InferResult:
    """Run the whole pipeline once. Stage errors are returned as status
    ``error`` with the failing stage recorded."""
    cfg = cfg or PipelineConfig()
    rep = RunReport()
    start = time.perf_counter()

    def done(res: InferResult) -> InferResult:
        rep.t_total = time.perf_counter() - start
        rep.verdict = str(res.verdict) if res.verdict is not None else res.status
        return res

    stage = "sample"
    try:
        t = time.perf_counter()
        sample = sampler.sample(ts, cfg.sampler)
        rep.t_sample = time.perf_counter() - t
        if isinstance(sample, sampler.Unsafe):
            return done(InferResult(UNSAFE, rep, witness=sample.witness))
        rep.n_good, rep.n_bad = len(sample.good), len(sample.bad)

        stage = "slopes"
        t = time.perf_counter()
        extra = features.default_augment(ts) if cfg.augment is None else list(cfg.augment)
        Xa, terms = features.augment_nonlinear(sample.X, ts.vars, extra)
        good_rows = Xa[sample.y == sampler.GOOD]
        slopes = build_slopes(ts, cfg, terms, good_rows)
        rep.m = slopes.m
        Z = features.transform(Xa, slopes)
        rep.t_transform = time.perf_counter() - t

        stage = "learn"
        t = time.perf_counter()
        tree = dtlearn.learn(Z, sample.y, cfg.criterion, cfg.max_nodes)
        rep.t_learn = time.perf_counter() - t
        rep.tree_size = tree.size

        stage = "formula"
        f = fm.simplify(fm.dt_to_form(tree, slopes), terms)
        rep.n_predicates = fm.count_predicates(f)
        inv = fm.to_pred(f, terms)

        stage = "verify"
        t = time.perf_counter()
        if cfg.emit_smt is not None:
            Path(cfg.emit_smt).write_text(verifier.emit_smt(ts, inv))
            rep.t_verify = time.perf_counter() - t
            return done(InferResult(UNCHECKED, rep, f, terms, tree=tree, slopes=slopes))
        verdict = verifier.check_bounded(ts, inv, cfg.bound)
        rep.t_verify = time.perf_counter() - t
        if verdict.status == verifier.ERROR:
            raise pm.ArithmeticOverflow(verdict.message)
        status = VERIFIED if verdict.is_valid else FAIL
        return done(InferResult(status, rep, f, terms, verdict, tree, slopes, witness=verdict.state))
    except (pm.DslError, pm.ArithmeticOverflow, sampler.SamplerError, dtlearn.LearnError,
            ValueError, OSError) as exc:
        return done(InferResult(ERROR, rep, error=PipelineError(stage, exc)))


# ---------------------------------------------------------------------------
# Benchmark files and the suite runner
# ---------------------------------------------------------------------------

_PRAGMA = re.compile(r"^\s*//!\s*([\w-]+)\s*:\s*(.*?)\s*$", re.MULTILINE)


def read_pragmas(source: str) -> dict:
    """``//! key: value`` lines carried by benchmark files."""
    return {m.group(1): m.group(2) for m in _PRAGMA.finditer(source)}


def parse_schedule(text: str) -> tuple:
    """``"2,16,1; 4,32,2"`` -> ((2, 16, 1), (4, 32, 2))."""
    rounds = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        L, I, M = (int(v) for v in part.split(","))
        rounds.append((L, I, M))
    return tuple(rounds)


def config_for_source(source: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Overlay a benchmark's pragmas onto ``base``."""
    base = base or PipelineConfig()
    prag = read_pragmas(source)
    kw = dict(base.__dict__)
    if "sampler" in prag:
        kw["sampler"] = sampler.SamplerConfig(parse_schedule(prag["sampler"]), base.sampler.max_states)
    if "augment" in prag:
        kw["augment"] = features.parse_augment(prag["augment"])
    if "domain" in prag:
        kw["domain"] = prag["domain"]
    if "max-nodes" in prag:
        kw["max_nodes"] = int(prag["max-nodes"])
    if "bound" in prag and base.emit_smt is None:
        kw["bound"] = int(prag["bound"])
    return PipelineConfig(**kw)


SUITE_COLUMNS = ("Name", "Vars", "|φ|", "Samp", "DT", "Verdict")


def _child(path: str, cfg: PipelineConfig, memory_mb: int | None, conn) -> None:
    if memory_mb:
        limit = memory_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    try:
        source = Path(path).read_text()
        ts = pm.parse(source)
        res = infer_invariant(ts, config_for_source(source, cfg))
        conn.send({"vars": ts.dim, "status": res.status, "report": res.report.to_json(),
                   "invariant": res.text, "verdict": str(res.verdict or res.status),
                   "error": str(res.error) if res.error else ""})
    except MemoryError:
        conn.send({"status": "MO"})
    except Exception as exc:  # noqa: BLE001 - reported per benchmark, never aborts the suite
        conn.send({"status": ERROR, "error": f"{type(exc).__name__}: {exc}"})
    finally:
        conn.close()


def _row(name: str, msg: dict) -> dict:
    rep = msg.get("report", {})
    status = msg["status"]
    verdict = {VERIFIED: "Valid", FAIL: "F", UNSAFE: "Unsafe", UNCHECKED: "unchecked"}.get(status, status)
    if status == ERROR:
        verdict = "E"
    return {
        "Name": name,
        "Vars": msg.get("vars", ""),
        "|φ|": rep.get("n_predicates", "") if status in (VERIFIED, FAIL, UNCHECKED) else "",
        "Samp": f"{rep['t_sample']:.2f}" if rep else "",
        "DT": f"{rep['t_learn']:.2f}" if rep else "",
        "Verdict": verdict,
        "Invariant": msg.get("invariant", ""),
        "Detail": msg.get("error") or msg.get("verdict", ""),
    }


def run_suite(directory, cfg: PipelineConfig | None = None, timeout: float = 300.0,
              memory_mb: int | None = 8192, jobs: int = 1, pattern: str = "*.dtinv") -> list:
    """Run every benchmark in ``directory`` in its own process.

    Timeouts are recorded as TO and memory exhaustion as MO; neither aborts
    the suite. Rows come back in file-name order.
    """
    cfg = cfg or PipelineConfig()
    paths = sorted(Path(directory).glob(pattern))
    ctx = mp.get_context("fork")
    rows: dict = {}
    pending = list(paths)
    running = []
    while pending or running:
        while pending and len(running) < max(1, jobs):
            path = pending.pop(0)
            recv, send = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_child, args=(str(path), cfg, memory_mb, send), daemon=True)
            proc.start()
            send.close()
            running.append((path, proc, recv, time.monotonic()))
        still = []
        for path, proc, recv, started in running:
            if recv.poll(0.01):
                try:
                    msg = recv.recv()
                except EOFError:
                    msg = {"status": ERROR, "error": "benchmark process died"}
                proc.join()
                rows[path] = _row(path.stem, msg)
            elif not proc.is_alive():
                proc.join()
                code = proc.exitcode
                rows[path] = _row(path.stem, {"status": ERROR, "error": f"benchmark process exited with {code}"})
            elif time.monotonic() - started > timeout:
                proc.kill()
                proc.join()
                rows[path] = _row(path.stem, {"status": "TO"})
            else:
                still.append((path, proc, recv, started))
        running = still
    return [rows[p] for p in paths]


def suite_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUITE_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def suite_table(rows: list) -> str:
    cols = SUITE_COLUMNS + ("Invariant",)
    cells = [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def cpu_count() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
