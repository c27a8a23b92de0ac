"""Finite groupoids as immutable, validated values.

A groupoid is described by outcome labels, transition labels, source/target
maps, one unit per outcome, one inverse per transition and a partial
composition table.  ``compose_table[(beta, alpha)] = gamma`` encodes
``beta ∘ alpha = gamma`` and must be present exactly when
``source(beta) == target(alpha)``.  Rendered multiplication tables follow the
same reading: the cell at (row, column) holds row ∘ column, with "∗" marking
non-composable pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

NOT_COMPOSABLE = "∗"

# Canonical labels for the four-element two-outcome groupoid.
OUT_MINUS = "-"
OUT_PLUS = "+"
UNIT_MINUS = "1-"
UNIT_PLUS = "1+"
ALPHA = "alpha"
ALPHA_INV = "alpha^-1"


class GroupoidParseError(ValueError):
    """A groupoid description is malformed or encodes an invalid groupoid."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NotComposable(ValueError):
    """Composition was requested for a pair that does not chain."""

    def __init__(self, groupoid: "FiniteGroupoid", beta: str, alpha: str):
        self.beta = beta
        self.alpha = alpha
        super().__init__(
            f"{beta!r} ∘ {alpha!r} is undefined: {beta!r} maps "
            f"{groupoid.source[beta]} -> {groupoid.target[beta]} and cannot follow "
            f"{alpha!r} mapping {groupoid.source[alpha]} -> {groupoid.target[alpha]}"
        )


@dataclass(frozen=True)
class AxiomFailure:
    axiom: str
    message: str

    def __str__(self) -> str:
        return f"{self.axiom}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[AxiomFailure, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        if self.ok:
            return "all groupoid axioms hold"
        return "\n".join(str(f) for f in self.failures)


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    """Immutable finite groupoid.

    The constructor enforces referential integrity only (every label used is
    declared); the algebraic axioms are checked by :func:`validate_axioms` so
    that deliberately broken tables can still be represented and diagnosed.
    """

    outcomes: tuple[str, ...]
    elements: tuple[str, ...]
    source: Mapping[str, str]
    target: Mapping[str, str]
    unit_of: Mapping[str, str]
    inverse: Mapping[str, str]
    compose_table: Mapping[tuple[str, str], str]

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        elements = tuple(self.elements)
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("duplicate outcome labels")
        if len(set(elements)) != len(elements):
            raise ValueError("duplicate element labels")
        if not outcomes:
            raise ValueError("a groupoid needs at least one outcome")
        eset, oset = set(elements), set(outcomes)
        for name, mapping in (("source", self.source), ("target", self.target)):
            if set(mapping) != eset:
                raise ValueError(f"{name} map must cover exactly the elements")
            bad = [e for e in elements if mapping[e] not in oset]
            if bad:
                raise ValueError(f"{name} of {bad[0]!r} is not a declared outcome")
        if set(self.unit_of) != oset:
            raise ValueError("unit_of must cover exactly the outcomes")
        if any(self.unit_of[o] not in eset for o in outcomes):
            raise ValueError("unit_of points at an undeclared element")
        if set(self.inverse) != eset:
            raise ValueError("inverse map must cover exactly the elements")
        if any(self.inverse[e] not in eset for e in elements):
            raise ValueError("inverse points at an undeclared element")
        for (b, a), c in self.compose_table.items():
            if b not in eset or a not in eset or c not in eset:
                raise ValueError(f"compose table mentions undeclared elements: ({b!r}, {a!r}) -> {c!r}")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "source", MappingProxyType(dict(self.source)))
        object.__setattr__(self, "target", MappingProxyType(dict(self.target)))
        object.__setattr__(self, "unit_of", MappingProxyType(dict(self.unit_of)))
        object.__setattr__(self, "inverse", MappingProxyType(dict(self.inverse)))
        object.__setattr__(self, "compose_table", MappingProxyType(dict(self.compose_table)))

    def __eq__(self, other) -> bool:
        """Structural equality; label declaration order is irrelevant."""
        if not isinstance(other, FiniteGroupoid):
            return NotImplemented
        return (
            set(self.outcomes) == set(other.outcomes)
            and set(self.elements) == set(other.elements)
            and dict(self.source) == dict(other.source)
            and dict(self.target) == dict(other.target)
            and dict(self.unit_of) == dict(other.unit_of)
            and dict(self.inverse) == dict(other.inverse)
            and dict(self.compose_table) == dict(other.compose_table)
        )

    def __hash__(self):
        return hash((frozenset(self.outcomes), frozenset(self.elements)))

    def is_composable(self, beta: str, alpha: str) -> bool:
        return self.source[beta] == self.target[alpha]

    def compose(self, beta: str, alpha: str) -> str:
        """Return beta ∘ alpha, or raise :class:`NotComposable`."""
        try:
            return self.compose_table[(beta, alpha)]
        except KeyError:
            if beta not in self.source or alpha not in self.source:
                missing = beta if beta not in self.source else alpha
                raise KeyError(f"unknown element {missing!r}") from None
            raise NotComposable(self, beta, alpha) from None

    def inverse_of(self, alpha: str) -> str:
        return self.inverse[alpha]

    def unit_at(self, outcome: str) -> str:
        return self.unit_of[outcome]


def build_a2() -> FiniteGroupoid:
    """The four-element groupoid on outcomes (-, +).

    ``alpha`` maps + to -; the outcome order (-, +) fixes the basis order used
    by every matrix representation downstream.
    """
    source = {UNIT_PLUS: OUT_PLUS, UNIT_MINUS: OUT_MINUS, ALPHA: OUT_PLUS, ALPHA_INV: OUT_MINUS}
    target = {UNIT_PLUS: OUT_PLUS, UNIT_MINUS: OUT_MINUS, ALPHA: OUT_MINUS, ALPHA_INV: OUT_PLUS}
    table = {
        (UNIT_PLUS, UNIT_PLUS): UNIT_PLUS,
        (UNIT_PLUS, ALPHA_INV): ALPHA_INV,
        (UNIT_MINUS, UNIT_MINUS): UNIT_MINUS,
        (UNIT_MINUS, ALPHA): ALPHA,
        (ALPHA, UNIT_PLUS): ALPHA,
        (ALPHA, ALPHA_INV): UNIT_MINUS,
        (ALPHA_INV, UNIT_MINUS): ALPHA_INV,
        (ALPHA_INV, ALPHA): UNIT_PLUS,
    }
    return FiniteGroupoid(
        outcomes=(OUT_MINUS, OUT_PLUS),
        elements=(UNIT_PLUS, UNIT_MINUS, ALPHA, ALPHA_INV),
        source=source,
        target=target,
        unit_of={OUT_PLUS: UNIT_PLUS, OUT_MINUS: UNIT_MINUS},
        inverse={UNIT_PLUS: UNIT_PLUS, UNIT_MINUS: UNIT_MINUS, ALPHA: ALPHA_INV, ALPHA_INV: ALPHA},
        compose_table=table,
    )


def pair_element(target_label: str, source_label: str) -> str:
    """Label of the transition source_label -> target_label, written (target,source)."""
    return f"({target_label},{source_label})"


def _check_label(label: str) -> str:
    if not label or any(ch.isspace() for ch in label) or "," in label:
        raise ValueError(f"label {label!r} must be non-empty, without whitespace or commas")
    return label


def build_pair_groupoid(labels_or_size: int | Sequence[str]) -> FiniteGroupoid:
    """Pair groupoid over given outcome labels (or x1..xn for an integer size).

    There is exactly one transition (y,x): x -> y per ordered outcome pair,
    composing as (z,y) ∘ (y,x) = (z,x).
    """
    if isinstance(labels_or_size, int):
        if labels_or_size < 1:
            raise ValueError("pair groupoid size must be at least 1")
        labels = tuple(f"x{i}" for i in range(1, labels_or_size + 1))
    else:
        labels = tuple(_check_label(str(x)) for x in labels_or_size)
        if not labels:
            raise ValueError("pair groupoid needs at least one outcome label")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate outcome labels")
    elements, source, target, inverse = [], {}, {}, {}
    for y in labels:
        for x in labels:
            e = pair_element(y, x)
            elements.append(e)
            source[e] = x
            target[e] = y
            inverse[e] = pair_element(x, y)
    table = {}
    for z in labels:
        for y in labels:
            for x in labels:
                table[(pair_element(z, y), pair_element(y, x))] = pair_element(z, x)
    return FiniteGroupoid(
        outcomes=labels,
        elements=tuple(elements),
        source=source,
        target=target,
        unit_of={x: pair_element(x, x) for x in labels},
        inverse=inverse,
        compose_table=table,
    )


def validate_axioms(g: FiniteGroupoid) -> ValidationReport:
    """Exhaustively check every groupoid axiom, reporting failures with witnesses.

    Cost is cubic in the number of elements (all composable triples are
    visited); intended for the small groupoids this package deals in.
    """
    failures: list[AxiomFailure] = []

    def fail(axiom: str, message: str) -> None:
        failures.append(AxiomFailure(axiom, message))

    table = g.compose_table
    for b in g.elements:
        for a in g.elements:
            defined = (b, a) in table
            composable = g.is_composable(b, a)
            if composable and not defined:
                fail("composition-domain", f"missing composition for ({b}, {a})")
            elif defined and not composable:
                fail("composition-domain", f"({b}, {a}) is not composable but the table defines it")
            elif defined:
                c = table[(b, a)]
                if g.source[c] != g.source[a] or g.target[c] != g.target[b]:
                    fail(
                        "composition-endpoints",
                        f"{b} ∘ {a} = {c} maps {g.source[c]} -> {g.target[c]}, "
                        f"expected {g.source[a]} -> {g.target[b]}",
                    )

    for o in g.outcomes:
        u = g.unit_of[o]
        if g.source[u] != o or g.target[u] != o:
            fail("unit-endpoints", f"unit {u} of outcome {o} maps {g.source[u]} -> {g.target[u]}")
    for a in g.elements:
        left_unit = g.unit_of[g.target[a]]
        right_unit = g.unit_of[g.source[a]]
        if table.get((left_unit, a)) != a:
            fail("unit-law", f"{left_unit} ∘ {a} = {table.get((left_unit, a))}, expected {a}")
        if table.get((a, right_unit)) != a:
            fail("unit-law", f"{a} ∘ {right_unit} = {table.get((a, right_unit))}, expected {a}")

    for a in g.elements:
        inv = g.inverse[a]
        if g.source[inv] != g.target[a] or g.target[inv] != g.source[a]:
            fail("inverse-endpoints", f"inverse of {a} is {inv} mapping {g.source[inv]} -> {g.target[inv]}")
            continue
        if g.inverse[inv] != a:
            fail("inverse-involution", f"inverse(inverse({a})) = {g.inverse[inv]}")
        if table.get((inv, a)) != g.unit_of[g.source[a]]:
            fail("inverse-law", f"{inv} ∘ {a} = {table.get((inv, a))}, expected {g.unit_of[g.source[a]]}")
        if table.get((a, inv)) != g.unit_of[g.target[a]]:
            fail("inverse-law", f"{a} ∘ {inv} = {table.get((a, inv))}, expected {g.unit_of[g.target[a]]}")

    for c in g.elements:
        for b in g.elements:
            if not g.is_composable(c, b):
                continue
            cb = table.get((c, b))
            for a in g.elements:
                if not g.is_composable(b, a):
                    continue
                ba = table.get((b, a))
                left = table.get((cb, a)) if cb is not None else None
                right = table.get((c, ba)) if ba is not None else None
                if left != right or left is None:
                    fail(
                        "associativity",
                        f"({c} ∘ {b}) ∘ {a} = {left} but {c} ∘ ({b} ∘ {a}) = {right}",
                    )
    return ValidationReport(tuple(failures))


def multiplication_table(g: FiniteGroupoid) -> str:
    """Human-readable multiplication grid; cell (row, col) is row ∘ col."""
    width = max(len(e) for e in g.elements)
    width = max(width, 1)
    header = ["∘".ljust(width)] + [e.ljust(width) for e in g.elements]
    lines = ["  ".join(header).rstrip()]
    lines.append("-" * len(lines[0]))
    for b in g.elements:
        row = [b.ljust(width)]
        for a in g.elements:
            cell = g.compose_table.get((b, a), NOT_COMPOSABLE)
            row.append(cell.ljust(width))
        lines.append("  ".join(row).rstrip())
    return "\n".join(lines) + "\n"


def groupoid_to_text(g: FiniteGroupoid) -> str:
    """Serialize to the line-oriented description format parsed by build_from_table."""
    lines = [f"# finite groupoid: {len(g.outcomes)} outcomes, {len(g.elements)} elements"]
    lines.append("outcomes: " + " ".join(g.outcomes))
    for e in g.elements:
        lines.append(f"element: {e} {g.source[e]} {g.target[e]}")
    for o in g.outcomes:
        lines.append(f"unit: {o} {g.unit_of[o]}")
    seen: set[str] = set()
    for e in g.elements:
        if e in seen:
            continue
        inv = g.inverse[e]
        seen.add(e)
        seen.add(inv)
        lines.append(f"inverse: {e} {inv}")
    for b in g.elements:
        for a in g.elements:
            if (b, a) in g.compose_table:
                lines.append(f"compose: {b} {a} = {g.compose_table[(b, a)]}")
    return "\n".join(lines) + "\n"


def build_from_table(text: str) -> FiniteGroupoid:
    """Parse the line-oriented groupoid format.

    Directives (one per line, ``#`` starts a comment):

    - ``outcomes: a b c``            ordered outcome labels
    - ``element: NAME SRC TGT``      one line per transition
    - ``unit: OUTCOME NAME``         optional when the loop at OUTCOME is unique
    - ``inverse: NAME NAME``         symmetric; every element needs one
    - ``compose: BETA ALPHA = GAMMA``  every composable pair must be listed

    The parsed groupoid must pass :func:`validate_axioms`; otherwise parsing
    fails naming the violated axiom.
    """
    outcomes: list[str] | None = None
    elements: list[str] = []
    source: dict[str, str] = {}
    target: dict[str, str] = {}
    unit_of: dict[str, str] = {}
    inverse: dict[str, str] = {}
    table: dict[tuple[str, str], str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        head = head.strip()
        tokens = rest.split()
        if head == "outcomes":
            if outcomes is not None:
                raise GroupoidParseError("duplicate outcomes line", lineno)
            if not tokens:
                raise GroupoidParseError("outcomes line lists no labels", lineno)
            if len(set(tokens)) != len(tokens):
                raise GroupoidParseError("duplicate outcome labels", lineno)
            outcomes = tokens
        elif head == "element":
            if len(tokens) != 3:
                raise GroupoidParseError("element line needs NAME SRC TGT", lineno)
            name, src, tgt = tokens
            if name in source:
                raise GroupoidParseError(f"element {name} declared twice", lineno)
            elements.append(name)
            source[name] = src
            target[name] = tgt
        elif head == "unit":
            if len(tokens) != 2:
                raise GroupoidParseError("unit line needs OUTCOME NAME", lineno)
            o, name = tokens
            if o in unit_of and unit_of[o] != name:
                raise GroupoidParseError(f"conflicting unit for outcome {o}", lineno)
            unit_of[o] = name
        elif head == "inverse":
            if len(tokens) != 2:
                raise GroupoidParseError("inverse line needs NAME NAME", lineno)
            a, b = tokens
            for x, y in ((a, b), (b, a)):
                if x in inverse and inverse[x] != y:
                    raise GroupoidParseError(f"conflicting inverse for {x}", lineno)
                inverse[x] = y
        elif head == "compose":
            if len(tokens) != 4 or tokens[2] != "=":
                raise GroupoidParseError("compose line needs BETA ALPHA = GAMMA", lineno)
            b, a, _, c = tokens
            if (b, a) in table and table[(b, a)] != c:
                raise GroupoidParseError(f"conflicting composition for ({b}, {a})", lineno)
            table[(b, a)] = c
        else:
            raise GroupoidParseError(f"unknown directive {head!r}", lineno)

    if outcomes is None:
        raise GroupoidParseError("missing outcomes line")
    oset, eset = set(outcomes), set(elements)
    for e in elements:
        if source[e] not in oset:
            raise GroupoidParseError(f"element {e} has unknown source {source[e]}")
        if target[e] not in oset:
            raise GroupoidParseError(f"element {e} has unknown target {target[e]}")
    for o, u in unit_of.items():
        if o not in oset:
            raise GroupoidParseError(f"unit declared for unknown outcome {o}")
        if u not in eset:
            raise GroupoidParseError(f"unit of {o} names unknown element {u}")
    for o in outcomes:
        if o not in unit_of:
            loops = [e for e in elements if source[e] == o and target[e] == o]
            if len(loops) == 1:
                unit_of[o] = loops[0]
            else:
                raise GroupoidParseError(
                    f"unit undefined for {o}: found {len(loops)} loop candidates, add a unit line"
                )
    for e in elements:
        if e not in inverse:
            raise GroupoidParseError(f"inverse undefined for {e}")
        if inverse[e] not in eset:
            raise GroupoidParseError(f"inverse of {e} names unknown element {inverse[e]}")
    for (b, a), c in table.items():
        for name in (b, a, c):
            if name not in eset:
                raise GroupoidParseError(f"compose line mentions unknown element {name}")
        if source[b] != target[a]:
            raise GroupoidParseError(f"({b}, {a}) is not composable but a composition is declared")
    for b in elements:
        for a in elements:
            if source[b] == target[a] and (b, a) not in table:
                raise GroupoidParseError(f"missing composition for ({b}, {a})")

    g = FiniteGroupoid(
        outcomes=tuple(outcomes),
        elements=tuple(elements),
        source=source,
        target=target,
        unit_of=unit_of,
        inverse=inverse,
        compose_table=table,
    )
    report = validate_axioms(g)
    if not report.ok:
        raise GroupoidParseError("groupoid axioms violated: " + "; ".join(str(f) for f in report.failures[:5]))
    return g


@dataclass(frozen=True)
class OutcomePartition:
    """Non-empty, disjoint, covering blocks of outcome labels."""

    blocks: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(b) for b in self.blocks)
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        flat = [x for b in blocks for x in b]
        if len(set(flat)) != len(flat):
            raise ValueError("partition blocks must be disjoint")
        object.__setattr__(self, "blocks", blocks)

    def validate_against(self, outcomes: Iterable[str]) -> None:
        flat = {x for b in self.blocks for x in b}
        missing = set(outcomes) - flat
        extra = flat - set(outcomes)
        if missing:
            raise ValueError(f"partition does not cover outcomes: {sorted(missing)}")
        if extra:
            raise ValueError(f"partition mentions unknown outcomes: {sorted(extra)}")

    def block_label(self, block: tuple[str, ...]) -> str:
        if len(block) == 1:
            return block[0]
        return "{" + "+".join(block) + "}"
