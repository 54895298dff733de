"""Command-line front end.

Exit codes: 0 when every requested check passed, 1 when a verification
failed (the report carries the witness), 2 for input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import EmptySet, FamilyTooLarge, InhomogeneousChain, ParseError, RecurrenceError
from .gallery import FAIL, GALLERY_NAMES, run_gallery
from .maps import classify_with_refinement
from .multirec import furstenberg_probe
from .recurrence import (
    ALL_SUBSETS,
    MAX_TABLE_STATES,
    metrically_recurrent_points,
    poincare_recurrent_set_at,
    recurrence_report,
    topologically_recurrent_points,
    verify_theorem1,
    verify_theorem2,
    verify_theorem4,
)
from .sets import SupportSet, scc_decomposition, series_forward, series_main, series_pushforward
from .sim import empirical_vs_exact
from .specfile import ChainSpec, parse_chain_spec

SCHEMA_VERSION = 1
COMMANDS = ("analyze", "verify", "simulate", "discretize", "multirec", "gallery")
DEFAULT_FORMAT = {"simulate": "csv", "gallery": "csv"}


@dataclass
class RunConfig:
    command: str
    input_path: str = None
    set_selectors: list = field(default_factory=list)
    output_format: str = None
    seed: int = 0
    gamma: float = None
    theorem: str = "all"
    n_max: int = None
    trials: int = 10_000
    steps: tuple = (1,)
    refine: tuple = None
    k: tuple = (2, 3, 4)
    gen_tol: float = 1e-13

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.output_format is None:
            self.output_format = DEFAULT_FORMAT.get(self.command, "json")
        if self.output_format not in ("json", "csv"):
            raise ValueError("format must be json or csv")


# -- set selectors -----------------------------------------------------------

def parse_selectors(text: str) -> list:
    """``"s0;s1,s2;ALL_SUBSETS"`` -> ``[["s0"], ["s1", "s2"], "ALL_SUBSETS"]``."""
    out = []
    for group in text.split(";"):
        group = group.strip()
        if not group:
            continue
        if group in (ALL_SUBSETS, "SINGLETONS", "ALL"):
            out.append(group)
        else:
            out.append([x.strip() for x in group.split(",") if x.strip()])
    return out


def _state(space, token) -> int:
    if token in space.labels:
        return space.labels.index(token)
    try:
        i = int(token)
    except ValueError:
        raise ParseError(f"unknown state {token!r}", field="--sets") from None
    if not 0 <= i < space.n:
        raise ParseError(f"state index {i} out of range", field="--sets")
    return i


def resolve_sets(space, selectors) -> list:
    n = space.n
    if not selectors:
        selectors = ["SINGLETONS", "ALL"]
    masks = []
    for sel in selectors:
        if sel == ALL_SUBSETS:
            if n > MAX_TABLE_STATES:
                raise FamilyTooLarge(f"ALL_SUBSETS needs n <= {MAX_TABLE_STATES}, got {n}")
            masks.extend(range(1, 1 << n))
        elif sel == "SINGLETONS":
            masks.extend(1 << i for i in range(n))
        elif sel == "ALL":
            masks.append((1 << n) - 1)
        else:
            bits = 0
            for tok in sel:
                bits |= 1 << _state(space, tok)
            masks.append(bits)
    seen, out = set(), []
    for b in masks:
        if b not in seen:
            seen.add(b)
            out.append(SupportSet(n, b))
    return out


# -- serialization -----------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating, Fraction)):
        v = float(x)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(x, SupportSet):
        return list(x.indices())
    return x


def _cell(v):
    v = _plain(v)
    if isinstance(v, list):
        return " ".join(str(_cell(x)) for x in v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(payload: dict, rows: list, columns: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

def _load(cfg: RunConfig) -> ChainSpec:
    if not cfg.input_path:
        raise ParseError("--input is required", field="--input")
    spec = parse_chain_spec(cfg.input_path)
    if cfg.gamma is not None:
        spec = spec.with_gamma(cfg.gamma, cfg.gen_tol)
    elif spec.kind == "generator" and cfg.gen_tol != 1e-13:
        spec = spec.with_gamma(spec.gamma, cfg.gen_tol)
    return spec


def _finite(spec: ChainSpec):
    if spec.kind == "map_pieces":
        raise ParseError("interval maps are handled by the discretize command", field="map_pieces")
    return spec


def _series(fn, q, m, a, space):
    try:
        return fn(q, m, a).to_record(space)
    except EmptySet:
        return {"set": a.labels(space), "skipped": "m(A) = 0"}


def cmd_analyze(cfg, spec):
    _finite(spec)
    space, m = spec.space, spec.measure
    sets = resolve_sets(space, cfg.set_selectors)
    base = {"states": list(space.labels), "measure": list(m.weights), "kind": spec.kind}
    records, rows = [], []
    if spec.kernel is None:
        sched = spec.schedule
        starts = list(range(sched.prefix + sched.tail_period))
        for a in sets:
            by_start = {str(s): poincare_recurrent_set_at(sched, a, s).labels(space) for s in starts}
            records.append({"set": a.labels(space), "recurrent_by_start": by_start})
            for s in starts:
                rows.append({"set": a.labels(space), "start": s, "recurrent": by_start[str(s)]})
        base.update(homogeneous=False, sets=records)
        return base, rows, ["set", "start", "recurrent"], 0
    q = spec.kernel
    dec = scc_decomposition(q)
    base.update(
        homogeneous=True,
        classes=[{"states": c.states.labels(space), "closed": c.closed, "cyclic": c.cyclic}
                 for c in dec.classes],
        topological_recurrent=topologically_recurrent_points(q, m).labels(space),
        metric_recurrent=metrically_recurrent_points(q, m).labels(space),
    )
    for a in sets:
        rep = recurrence_report(q, m, a)
        rec = {"set": a.labels(space), "m_set": m.mass(a),
               "recurrence": rep.to_record(space),
               "series": [_series(series_main, q, m, a, space),
                          _series(series_forward, q, m, a, space),
                          series_pushforward(q, m, a).to_record(space)]}
        records.append(rec)
        main, fwd, push = rec["series"]
        rows.append({
            "set": a.labels(space), "m_set": m.mass(a),
            "recurrent": rep.recurrent.labels(space),
            "nonrecurrent": rep.nonrecurrent.labels(space),
            "strong_recurrent": rep.strong_recurrent.labels(space),
            "m_nonrecurrent": rep.m_nonrecurrent,
            "main_diverges": main.get("diverges"), "main_P": main.get("P"), "main_L": main.get("L"),
            "forward_diverges": fwd.get("diverges"), "pushforward_diverges": push.get("diverges"),
        })
    base["sets"] = records
    cols = ["set", "m_set", "recurrent", "nonrecurrent", "strong_recurrent", "m_nonrecurrent",
            "main_diverges", "main_P", "main_L", "forward_diverges", "pushforward_diverges"]
    return base, rows, cols, 0


def cmd_verify(cfg, spec):
    _finite(spec)
    if spec.kernel is None:
        raise InhomogeneousChain("theorem checks need a time-homogeneous chain")
    q, m, space = spec.kernel, spec.measure, spec.space
    wanted = ("1", "2", "4") if cfg.theorem == "all" else (cfg.theorem,)
    records = []
    for th in wanted:
        if th == "1":
            records.append(("1", "check", verify_theorem1(q, m)))
        elif th == "2":
            records.append(("2", "check", verify_theorem2(q, m)))
        elif th == "4":
            a, c, plus, prp, mes = verify_theorem4(q, m)
            records += [("4", "check", a), ("4", "check", c), ("4", "evaluation", plus),
                        ("4", "evaluation", prp), ("4", "evaluation", mes)]
        else:
            raise ParseError(f"unknown theorem {th!r}", field="--theorem")
    out = []
    for th, role, v in records:
        r = v.to_record(space)
        r.update(theorem=th, role=role)
        out.append(r)
    failed = any(r["role"] == "check" and not r["holds"] for r in out)
    rows = [{**r, "details": json.dumps(_plain(r["details"]), sort_keys=True)} for r in out]
    cols = ["theorem", "role", "property", "holds", "witness", "family_restricted", "details"]
    return {"checks": out, "all_passed": not failed}, rows, cols, 1 if failed else 0


def cmd_simulate(cfg, spec):
    _finite(spec)
    space = spec.space
    sets = resolve_sets(space, cfg.set_selectors)
    pairs = [(x, a, t) for t in cfg.steps for a in sets for x in range(space.n)]
    chain = spec.kernel if spec.kernel is not None else spec.schedule
    report = empirical_vs_exact(chain, spec.measure, pairs, cfg.trials, cfg.seed)
    rows = []
    for r in report.rows:
        rows.append({**r, "x": space.labels[r["x"]], "set": [space.labels[i] for i in r["set"]]})
    payload = {"seed": cfg.seed, "trials": cfg.trials, "coverage": report.fraction,
               "covered": report.covered, "pairs": report.total, "rows": rows}
    cols = ["x", "set", "t", "trials", "point", "lo", "hi", "exact", "covered"]
    return payload, rows, cols, 0


def cmd_discretize(cfg, spec):
    if spec.kind != "map_pieces":
        raise ParseError("discretize needs map_pieces input", field="map_pieces")
    schedule = cfg.refine or spec.refine or (10, 100, 1000)
    levels = classify_with_refinement(spec.piecewise, schedule)
    recs = [lv.to_record() for lv in levels]
    lengths = [r["unknown_length"] for r in recs]
    shrinking = all(b < a for a, b in zip(lengths, lengths[1:]))
    rows = [{k: v for k, v in r.items() if k != "unknown_cells"} for r in recs]
    return ({"map": spec.name, "levels": recs, "unknown_strictly_decreasing": shrinking},
            rows, ["n_cells", "n_unknown", "unknown_length"], 0)


def cmd_multirec(cfg, spec):
    _finite(spec)
    if spec.kernel is None:
        raise InhomogeneousChain("the multiple-recurrence probe needs a time-homogeneous chain")
    q, m, space = spec.kernel, spec.measure, spec.space
    rows = []
    for a in resolve_sets(space, cfg.set_selectors):
        if not m.is_positive(a.bits):
            continue
        for k in cfg.k:
            r = furstenberg_probe(q, m, a, k, cfg.n_max).to_record()
            rows.append({"set": a.labels(space), **r})
    return {"results": rows}, rows, ["set", "k", "n", "mass", "searched_bound", "exhaustive"], 0


def cmd_gallery(cfg, spec=None):
    entries = run_gallery(GALLERY_NAMES)
    recs = [e.to_record() for e in entries]
    rows = [{"example": e.name, "status": e.status,
             "checks_passed": sum(c.ok for c in e.checks), "checks": len(e.checks),
             "note": e.note} for e in entries]
    failed = any(e.status == FAIL for e in entries)
    return ({"examples": recs, "any_fail": failed}, rows,
            ["example", "status", "checks_passed", "checks", "note"], 1 if failed else 0)


_COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "simulate": cmd_simulate,
             "discretize": cmd_discretize, "multirec": cmd_multirec, "gallery": cmd_gallery}


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Execute one command, write its report, return the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        spec = None if cfg.command == "gallery" else _load(cfg)
        payload, rows, cols, code = _COMMANDS[cfg.command](cfg, spec)
    except (RecurrenceError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    payload = {"schema_version": SCHEMA_VERSION, "command": cfg.command,
               "input": None if spec is None else spec.name, "results": payload}
    out.write(render(payload, rows, cols, cfg.output_format))
    return code


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markov-recurrence",
                                description="Exact recurrence analysis of finite Markov chains.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sets=True):
        sp.add_argument("--input", required=True, help="chain file (YAML)")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        if sets:
            sp.add_argument("--sets", default="",
                            help="';'-separated label lists, or SINGLETONS, ALL, ALL_SUBSETS")
        sp.add_argument("--gamma", type=float, default=None,
                        help="time step for generator input")
        sp.add_argument("--tol", type=float, default=1e-13,
                        help="Poisson tail tolerance for generator input")

    common(sub.add_parser("analyze", help="recurrence report per set"))
    v = sub.add_parser("verify", help="check the recurrence theorems on a chain")
    common(v, sets=False)
    v.add_argument("--theorem", choices=("1", "2", "4", "all"), default="all")
    s = sub.add_parser("simulate", help="Monte Carlo return probabilities vs exact values")
    common(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--steps", type=_int_list, default=(1,), help="comma-separated times t")
    d = sub.add_parser("discretize", help="grid refinement study of an interval map")
    common(d, sets=False)
    d.add_argument("--refine", type=_int_list, default=None, help="comma-separated grid sizes")
    mr = sub.add_parser("multirec", help="multiple-recurrence probe")
    common(mr)
    mr.add_argument("--k", type=_int_list, default=(2, 3, 4))
    mr.add_argument("--n-max", type=int, default=None)
    g = sub.add_parser("gallery", help="recompute the bundled golden examples")
    g.add_argument("--format", choices=("json", "csv"), default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None),
        set_selectors=parse_selectors(getattr(args, "sets", "") or ""),
        output_format=args.format,
        seed=getattr(args, "seed", 0),
        gamma=getattr(args, "gamma", None),
        theorem=getattr(args, "theorem", "all"),
        n_max=getattr(args, "n_max", None),
        trials=getattr(args, "trials", 10_000),
        steps=getattr(args, "steps", (1,)),
        refine=getattr(args, "refine", None),
        k=getattr(args, "k", (2, 3, 4)),
        gen_tol=getattr(args, "tol", 1e-13),
    )
    return run(cfg)
