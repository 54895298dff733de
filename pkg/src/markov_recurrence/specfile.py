"""Reading chain descriptions from YAML files.

A chain file is a YAML mapping. ``states`` is a count or a list of labels
and ``measure`` is an optional weight list (uniform when absent). The
dynamics come from exactly one of these keys:

``matrix``
    list of rows
``map``
    list of image states, given as indices or labels
``generator``
    rate matrix, together with a positive ``gamma``
``schedule``
    list of ``{matrix: ...}`` or ``{map: ...}`` entries plus an optional
    ``tail_period``
``map_pieces``
    list of ``{domain: "[lo, hi)", formula: ...}`` for a self-map of
    ``[0, 1]``, with optional ``overrides`` (``[point, image]`` pairs) and
    ``refine`` (grid sizes)

Formulas are ``identity``, ``square``, ``{const: c}``, ``{reflect: f}`` or
``{compose: [outer, inner]}``. Optional ``cells`` gives one ``[lo, hi]`` pair
per state. Numbers may be integers, decimals or ``p/q`` strings; they are
read as exact fractions and only turned into floats when a kernel is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml
from yaml.nodes import MappingNode, ScalarNode, SequenceNode

from .chain import (
    GeneratorMatrix,
    KernelSchedule,
    ReferenceMeasure,
    StateSpace,
    StochasticKernel,
    kernel_from_generator,
    kernel_from_map,
    validate_kernel,
)
from .errors import ParseError, RecurrenceError
from .maps import Compose, Const, Identity, Piece, PiecewiseMap, Reflect, Square, parse_interval

DYNAMICS_KEYS = ("matrix", "map", "generator", "schedule", "map_pieces")
KNOWN_KEYS = set(DYNAMICS_KEYS) | {
    "name", "description", "states", "measure", "gamma", "tail_period",
    "overrides", "refine", "cells",
}


@dataclass(frozen=True, eq=False)
class ChainSpec:
    name: str
    kind: str
    space: StateSpace = None
    measure: ReferenceMeasure = None
    kernel: StochasticKernel = None
    schedule: KernelSchedule = None
    generator: GeneratorMatrix = None
    gamma: float = None
    piecewise: PiecewiseMap = None
    refine: tuple = ()
    exact_matrix: tuple = None
    description: str = ""
    path: str = None
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.space.n

    def with_gamma(self, gamma: float, tol: float = 1e-13) -> "ChainSpec":
        """Resample a generator spec at a different time step."""
        if self.kind != "generator":
            raise ParseError("gamma only applies to generator input", field="gamma")
        q = kernel_from_generator(self.generator, gamma, tol, self.space)
        return ChainSpec(self.name, self.kind, self.space, self.measure, q,
                         KernelSchedule.constant(q), self.generator, gamma,
                         description=self.description, path=self.path)


def _line(node) -> int:
    return node.start_mark.line + 1


def _fail(msg, node=None, fld=None):
    raise ParseError(msg, field=fld, line=_line(node) if node is not None else None)


def _mapping(node) -> dict:
    if not isinstance(node, MappingNode):
        _fail("expected a mapping", node)
    out = {}
    for k, v in node.value:
        if not isinstance(k, ScalarNode):
            _fail("mapping keys must be plain strings", k)
        if k.value in out:
            _fail(f"duplicate key {k.value!r}", k, k.value)
        out[k.value] = v
    return out


def _seq(node, fld) -> list:
    if not isinstance(node, SequenceNode):
        _fail("expected a list", node, fld)
    return list(node.value)


def _number(node, fld) -> Fraction:
    if not isinstance(node, ScalarNode):
        _fail("expected a number", node, fld)
    text = node.value.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        _fail(f"not a number: {text!r}", node, fld)


def _int(node, fld) -> int:
    x = _number(node, fld)
    if x.denominator != 1:
        _fail(f"expected an integer, got {x}", node, fld)
    return int(x)


def _text(node, fld) -> str:
    if not isinstance(node, ScalarNode):
        _fail("expected a string", node, fld)
    return node.value


def _states(node):
    if isinstance(node, ScalarNode):
        n = _int(node, "states")
        if n < 1:
            _fail("need at least one state", node, "states")
        return n, None
    labels = [_text(x, "states") for x in _seq(node, "states")]
    if not labels:
        _fail("need at least one state", node, "states")
    if len(set(labels)) != len(labels):
        _fail("state labels must be distinct", node, "states")
    return len(labels), labels


def _matrix(node, fld, n):
    rows = _seq(node, fld)
    if len(rows) != n:
        _fail(f"expected {n} rows, got {len(rows)}", node, fld)
    out = []
    for i, r in enumerate(rows):
        vals = [_number(x, f"{fld}[{i}]") for x in _seq(r, f"{fld}[{i}]")]
        if len(vals) != n:
            _fail(f"row {i} has {len(vals)} entries, expected {n}", r, f"{fld}[{i}]")
        out.append(tuple(vals))
    return tuple(out)


def _kernel(node, fld, space, exact):
    try:
        return validate_kernel([[float(x) for x in row] for row in exact], space)
    except RecurrenceError as exc:
        row = getattr(exc, "row", None)
        rows = node.value
        where = rows[row] if row is not None and row < len(rows) else node
        name = f"{fld}[{row}]" if row is not None else fld
        _fail(f"{exc}", where, name)


def _state_ref(node, space, fld) -> int:
    text = _text(node, fld)
    if text in space.labels:
        return space.labels.index(text)
    try:
        i = int(text)
    except ValueError:
        _fail(f"unknown state {text!r}", node, fld)
    if not 0 <= i < space.n:
        _fail(f"state index {i} out of range", node, fld)
    return i


def _map_kernel(node, fld, space):
    targets = _seq(node, fld)
    if len(targets) != space.n:
        _fail(f"map needs {space.n} images, got {len(targets)}", node, fld)
    return kernel_from_map([_state_ref(x, space, fld) for x in targets], space)


def _formula(node, fld):
    if isinstance(node, ScalarNode):
        tag = node.value.strip()
        if tag == "identity":
            return Identity()
        if tag == "square":
            return Square()
        _fail(f"unknown formula {tag!r}", node, fld)
    d = _mapping(node)
    if len(d) != 1:
        _fail("a formula mapping has exactly one key", node, fld)
    (tag, arg), = d.items()
    if tag == "const":
        try:
            return Const(_number(arg, fld))
        except ValueError as exc:
            _fail(str(exc), arg, fld)
    if tag == "reflect":
        return Reflect(_formula(arg, fld))
    if tag == "compose":
        parts = _seq(arg, fld)
        if len(parts) != 2:
            _fail("compose takes [outer, inner]", arg, fld)
        return Compose(_formula(parts[0], fld), _formula(parts[1], fld))
    _fail(f"unknown formula {tag!r}", node, fld)


def _piecewise(doc, name):
    pieces = []
    for i, pn in enumerate(_seq(doc["map_pieces"], "map_pieces")):
        fld = f"map_pieces[{i}]"
        d = _mapping(pn)
        if "domain" not in d or "formula" not in d:
            _fail("each piece needs domain and formula", pn, fld)
        try:
            dom = parse_interval(_text(d["domain"], fld))
        except ValueError as exc:
            _fail(str(exc), d["domain"], fld)
        pieces.append(Piece(dom, _formula(d["formula"], fld)))
    overrides = []
    if "overrides" in doc:
        for i, on in enumerate(_seq(doc["overrides"], "overrides")):
            pair = _seq(on, f"overrides[{i}]")
            if len(pair) != 2:
                _fail("override is [point, image]", on, f"overrides[{i}]")
            overrides.append((_number(pair[0], "overrides"), _number(pair[1], "overrides")))
    try:
        return PiecewiseMap(pieces, overrides, name=name)
    except RecurrenceError as exc:
        _fail(str(exc), doc["map_pieces"], "map_pieces")


def parse_chain_text(text: str, path: str = None) -> ChainSpec:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"invalid YAML: {exc}", line=mark.line + 1 if mark else None) from None
    if root is None:
        raise ParseError("empty chain file")
    doc = _mapping(root)
    for k in doc:
        if k not in KNOWN_KEYS:
            _fail(f"unknown field {k!r}", doc[k], k)
    kinds = [k for k in DYNAMICS_KEYS if k in doc]
    if len(kinds) != 1:
        _fail(f"exactly one of {', '.join(DYNAMICS_KEYS)} is required", root)
    kind = kinds[0]
    name = _text(doc["name"], "name") if "name" in doc else (Path(path).stem if path else "chain")
    description = _text(doc["description"], "description") if "description" in doc else ""
    if "gamma" in doc and kind != "generator":
        _fail("gamma only applies to generator input", doc["gamma"], "gamma")
    refine = ()
    if "refine" in doc:
        refine = tuple(_int(x, "refine") for x in _seq(doc["refine"], "refine"))
        if any(b <= a for a, b in zip(refine, refine[1:])) or (refine and refine[0] < 2):
            _fail("refine must be increasing grid sizes >= 2", doc["refine"], "refine")

    if kind == "map_pieces":
        for k in ("states", "measure", "cells", "tail_period"):
            if k in doc:
                _fail(f"{k} does not apply to map_pieces input", doc[k], k)
        return ChainSpec(name, kind, piecewise=_piecewise(doc, name), refine=refine,
                         description=description, path=path)
    if "overrides" in doc:
        _fail("overrides only apply to map_pieces input", doc["overrides"], "overrides")

    if "states" not in doc:
        _fail("states is required", root, "states")
    n, labels = _states(doc["states"])
    cells = None
    if "cells" in doc:
        cells = []
        for i, cn in enumerate(_seq(doc["cells"], "cells")):
            pair = _seq(cn, f"cells[{i}]")
            if len(pair) != 2:
                _fail("a cell is [lo, hi]", cn, f"cells[{i}]")
            cells.append((_number(pair[0], "cells"), _number(pair[1], "cells")))
    try:
        space = StateSpace(n, tuple(labels) if labels else None, tuple(cells) if cells else None)
    except ValueError as exc:
        _fail(str(exc), doc.get("cells", doc["states"]), "cells" if cells else "states")

    if "measure" in doc:
        w = [_number(x, "measure") for x in _seq(doc["measure"], "measure")]
        if len(w) != n:
            _fail(f"measure needs {n} weights, got {len(w)}", doc["measure"], "measure")
        try:
            measure = ReferenceMeasure([float(x) for x in w])
        except ValueError as exc:
            _fail(str(exc), doc["measure"], "measure")
    else:
        measure = ReferenceMeasure.uniform(n)

    common = dict(space=space, measure=measure, refine=refine, description=description, path=path)
    if kind == "matrix":
        exact = _matrix(doc["matrix"], "matrix", n)
        q = _kernel(doc["matrix"], "matrix", space, exact)
        return ChainSpec(name, kind, kernel=q, schedule=KernelSchedule.constant(q),
                         exact_matrix=exact, **common)
    if kind == "map":
        q = _map_kernel(doc["map"], "map", space)
        return ChainSpec(name, kind, kernel=q, schedule=KernelSchedule.constant(q), **common)
    if kind == "generator":
        if "gamma" not in doc:
            _fail("generator input needs gamma", root, "gamma")
        gamma = _number(doc["gamma"], "gamma")
        rates = _matrix(doc["generator"], "generator", n)
        try:
            g = GeneratorMatrix([[float(x) for x in row] for row in rates])
            q = kernel_from_generator(g, float(gamma), space=space)
        except RecurrenceError as exc:
            _fail(str(exc), doc["generator"], "generator")
        return ChainSpec(name, kind, kernel=q, schedule=KernelSchedule.constant(q),
                         generator=g, gamma=float(gamma), exact_matrix=rates, **common)

    entries = _seq(doc["schedule"], "schedule")
    if not entries:
        _fail("schedule needs at least one kernel", doc["schedule"], "schedule")
    kernels = []
    for i, en in enumerate(entries):
        fld = f"schedule[{i}]"
        d = _mapping(en)
        if len(d) != 1 or not set(d) <= {"matrix", "map"}:
            _fail("schedule entries are {matrix: ...} or {map: ...}", en, fld)
        if "matrix" in d:
            kernels.append(_kernel(d["matrix"], fld, space, _matrix(d["matrix"], fld, n)))
        else:
            kernels.append(_map_kernel(d["map"], fld, space))
    tail = _int(doc["tail_period"], "tail_period") if "tail_period" in doc else len(kernels)
    try:
        sched = KernelSchedule(tuple(kernels), tail)
    except ValueError as exc:
        _fail(str(exc), doc.get("tail_period", doc["schedule"]), "tail_period")
    q = kernels[0] if sched.homogeneous else None
    return ChainSpec(name, kind, kernel=q, schedule=sched, **common)


def parse_chain_spec(path) -> ChainSpec:
    """Parse a chain file; errors carry the offending field and line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_chain_text(text, str(path))


def bundled_path(name: str) -> Path:
    """Location of a chain file shipped with the package."""
    return Path(__file__).with_name("data") / f"{name}.yaml"


def load_bundled(name: str) -> ChainSpec:
    return parse_chain_spec(bundled_path(name))


def bundled_names() -> list:
    return sorted(p.stem for p in (Path(__file__).with_name("data")).glob("*.yaml"))
