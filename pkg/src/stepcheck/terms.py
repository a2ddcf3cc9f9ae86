"""Process terms, labels, and recursive specifications.

Ground terms are the currency of the whole toolkit: data sums are expanded
eagerly into finite alternatives, so every downstream pass works on finite,
sum-free terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

TAU_NAME = "tau"
DELTA_NAME = "delta"
RESERVED_NAMES = frozenset({TAU_NAME, DELTA_NAME})


class SpecError(Exception):
    """Raised for structurally unusable specifications."""


class UnknownDomainError(SpecError):
    pass


@dataclass(frozen=True)
class DataDomain:
    """A finite, ordered set of data constants."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"domain {self.name} has no values")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"domain {self.name} repeats a value")


@dataclass(frozen=True, order=True)
class ActionLabel:
    """An atomic action, optionally instantiated with data constants."""

    name: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("action name must be non-empty")
        if self.name in RESERVED_NAMES and self.args:
            raise ValueError(f"{self.name} carries no arguments")

    def pretty(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(self.args)})"


@dataclass(frozen=True, order=True)
class CommResultLabel:
    """The label of a synchronized (fused) occurrence of several actions."""

    participants: tuple[str, ...]
    name: Optional[str] = None

    def __post_init__(self):
        if len(self.participants) < 2:
            raise ValueError("a communication needs at least two participants")
        if tuple(sorted(self.participants)) != tuple(self.participants):
            raise ValueError("participants must be sorted")

    def pretty(self) -> str:
        if self.name is not None:
            return self.name
        return f"c({','.join(self.participants)})"


Label = Union[ActionLabel, CommResultLabel]


# ---------------------------------------------------------------------------
# Abstract syntax


class ProcessTerm:
    """Base class for all term nodes.  Instances are immutable."""

    __slots__ = ()


@dataclass(frozen=True)
class Deadlock(ProcessTerm):
    pass


@dataclass(frozen=True)
class Act(ProcessTerm):
    label: ActionLabel


@dataclass(frozen=True)
class Shadow(ProcessTerm):
    """Placeholder that only fires fused with a concurrent base action."""

    base: str


@dataclass(frozen=True)
class Var(ProcessTerm):
    name: str


@dataclass(frozen=True)
class Seq(ProcessTerm):
    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class Alt(ProcessTerm):
    branches: tuple[ProcessTerm, ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("alternative needs at least one branch")


@dataclass(frozen=True)
class Par(ProcessTerm):
    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class WholePar(ProcessTerm):
    """System-level parallel composition; semantically identical to Par."""

    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class Sum(ProcessTerm):
    binder: str
    domain: str
    body: ProcessTerm


@dataclass(frozen=True)
class Hide(ProcessTerm):
    names: frozenset
    body: ProcessTerm


@dataclass(frozen=True)
class Encaps(ProcessTerm):
    names: frozenset
    body: ProcessTerm


@dataclass(frozen=True)
class ConflictElim(ProcessTerm):
    body: ProcessTerm


@dataclass
class RecursiveSpec:
    """A guarded equation system with a distinguished entry variable."""

    name: str
    equations: dict  # variable name -> ProcessTerm, insertion-ordered
    entry: str

    def __post_init__(self):
        if self.entry not in self.equations:
            # recorded as a violation by validate_spec; keep construction lax
            pass


@dataclass(frozen=True)
class CommEntry:
    a: str
    b: str
    result: Optional[str] = None

    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))

    def result_name(self) -> str:
        if self.result is not None:
            return self.result
        return "c(" + ",".join(sorted((self.a, self.b))) + ")"


@dataclass(frozen=True)
class CommTable:
    """The communication function: unordered action-name pairs -> result."""

    entries: tuple[CommEntry, ...] = ()

    def mapping(self) -> dict:
        out = {}
        for e in self.entries:
            out.setdefault(e.pair(), CommResultLabel(
                tuple(sorted((e.a, e.b))), e.result))
        return out

    def action_names(self) -> frozenset:
        names = set()
        for e in self.entries:
            names.add(e.a)
            names.add(e.b)
        return frozenset(names)


@dataclass(frozen=True)
class ConflictRelation:
    pairs: frozenset = frozenset()  # of frozenset name pairs

    def __post_init__(self):
        for p in self.pairs:
            if len(p) != 2:
                raise ValueError("conflict pairs must relate two distinct actions")


# ---------------------------------------------------------------------------
# Pretty printing (also the DSL's term syntax)

_PREC_ALT = 0
_PREC_PAR = 1
_PREC_SEQ = 2
_PREC_ATOM = 3


def term_to_str(term: ProcessTerm, prec: int = _PREC_ALT) -> str:
    s, p = _render(term)
    if p < prec:
        return "(" + s + ")"
    return s


def _render(term):
    if isinstance(term, Deadlock):
        return "delta", _PREC_ATOM
    if isinstance(term, Act):
        return term.label.pretty(), _PREC_ATOM
    if isinstance(term, Shadow):
        return "@" + term.base, _PREC_ATOM
    if isinstance(term, Var):
        return term.name, _PREC_ATOM
    if isinstance(term, Seq):
        lhs = term_to_str(term.left, _PREC_ATOM)
        rhs = term_to_str(term.right, _PREC_SEQ)
        return lhs + " . " + rhs, _PREC_SEQ
    if isinstance(term, Alt):
        return " + ".join(term_to_str(b, _PREC_PAR) for b in term.branches), _PREC_ALT
    if isinstance(term, (Par, WholePar)):
        op = " || " if isinstance(term, Par) else " <> "
        lhs = term_to_str(term.left, _PREC_SEQ)
        rhs = term_to_str(term.right, _PREC_SEQ)
        return lhs + op + rhs, _PREC_PAR
    if isinstance(term, Sum):
        return (f"sum {term.binder} in {term.domain} . "
                + term_to_str(term.body, _PREC_SEQ)), _PREC_ALT
    if isinstance(term, Hide):
        return ("hide " + _names_to_str(term.names) + " in "
                + term_to_str(term.body, _PREC_ALT)), _PREC_ALT
    if isinstance(term, Encaps):
        return ("block " + _names_to_str(term.names) + " in "
                + term_to_str(term.body, _PREC_ALT)), _PREC_ALT
    if isinstance(term, ConflictElim):
        return "theta " + term_to_str(term.body, _PREC_ATOM), _PREC_ALT
    raise TypeError(f"not a term: {term!r}")


def _names_to_str(names) -> str:
    return "{" + ", ".join(sorted(names)) + "}"


# ---------------------------------------------------------------------------
# Sum elaboration


def substitute(term: ProcessTerm, binder: str, value: str) -> ProcessTerm:
    """Replace data-variable `binder` with constant `value` in action args."""
    if isinstance(term, Act):
        if binder in term.label.args:
            args = tuple(value if a == binder else a for a in term.label.args)
            return Act(ActionLabel(term.label.name, args))
        return term
    if isinstance(term, (Deadlock, Shadow, Var)):
        return term
    if isinstance(term, Seq):
        return Seq(substitute(term.left, binder, value),
                   substitute(term.right, binder, value))
    if isinstance(term, Alt):
        return Alt(tuple(substitute(b, binder, value) for b in term.branches))
    if isinstance(term, Par):
        return Par(substitute(term.left, binder, value),
                   substitute(term.right, binder, value))
    if isinstance(term, WholePar):
        return WholePar(substitute(term.left, binder, value),
                        substitute(term.right, binder, value))
    if isinstance(term, Sum):
        if term.binder == binder:
            return term
        return Sum(term.binder, term.domain, substitute(term.body, binder, value))
    if isinstance(term, Hide):
        return Hide(term.names, substitute(term.body, binder, value))
    if isinstance(term, Encaps):
        return Encaps(term.names, substitute(term.body, binder, value))
    if isinstance(term, ConflictElim):
        return ConflictElim(substitute(term.body, binder, value))
    raise TypeError(f"not a term: {term!r}")


def elaborate_sums(term: ProcessTerm, domains: Mapping[str, DataDomain]) -> ProcessTerm:
    """Expand every data sum into a finite alternative, in domain order."""
    if isinstance(term, (Deadlock, Act, Shadow, Var)):
        return term
    if isinstance(term, Seq):
        return Seq(elaborate_sums(term.left, domains),
                   elaborate_sums(term.right, domains))
    if isinstance(term, Alt):
        return Alt(tuple(elaborate_sums(b, domains) for b in term.branches))
    if isinstance(term, Par):
        return Par(elaborate_sums(term.left, domains),
                   elaborate_sums(term.right, domains))
    if isinstance(term, WholePar):
        return WholePar(elaborate_sums(term.left, domains),
                        elaborate_sums(term.right, domains))
    if isinstance(term, Sum):
        if term.domain not in domains:
            raise UnknownDomainError(f"unknown domain {term.domain}")
        body = elaborate_sums(term.body, domains)
        branches = tuple(substitute(body, term.binder, v)
                         for v in domains[term.domain].values)
        return Alt(branches)
    if isinstance(term, Hide):
        return Hide(term.names, elaborate_sums(term.body, domains))
    if isinstance(term, Encaps):
        return Encaps(term.names, elaborate_sums(term.body, domains))
    if isinstance(term, ConflictElim):
        return ConflictElim(elaborate_sums(term.body, domains))
    raise TypeError(f"not a term: {term!r}")


# ---------------------------------------------------------------------------
# Alphabet


@dataclass(frozen=True)
class AlphabetInfo:
    actions: frozenset  # of ActionLabel, ground, without tau/delta
    shadow_bases: frozenset  # of base names


def term_alphabet(term: ProcessTerm, domains: Mapping[str, DataDomain]) -> AlphabetInfo:
    ground = elaborate_sums(term, domains)
    actions: set = set()
    bases: set = set()
    _collect_alphabet(ground, actions, bases)
    return AlphabetInfo(frozenset(actions), frozenset(bases))


def alphabet(spec: RecursiveSpec, domains: Mapping[str, DataDomain]) -> AlphabetInfo:
    """All ground action labels of the elaborated equations, plus shadow bases."""
    actions: set = set()
    bases: set = set()
    for rhs in spec.equations.values():
        _collect_alphabet(elaborate_sums(rhs, domains), actions, bases)
    return AlphabetInfo(frozenset(actions), frozenset(bases))


def _collect_alphabet(term, actions, bases):
    if isinstance(term, Act):
        if term.label.name not in RESERVED_NAMES:
            actions.add(term.label)
    elif isinstance(term, Shadow):
        bases.add(term.base)
    elif isinstance(term, Seq):
        _collect_alphabet(term.left, actions, bases)
        _collect_alphabet(term.right, actions, bases)
    elif isinstance(term, Alt):
        for b in term.branches:
            _collect_alphabet(b, actions, bases)
    elif isinstance(term, (Par, WholePar)):
        _collect_alphabet(term.left, actions, bases)
        _collect_alphabet(term.right, actions, bases)
    elif isinstance(term, Sum):
        _collect_alphabet(term.body, actions, bases)
    elif isinstance(term, (Hide, Encaps)):
        _collect_alphabet(term.body, actions, bases)
    elif isinstance(term, ConflictElim):
        _collect_alphabet(term.body, actions, bases)


# ---------------------------------------------------------------------------
# Guardedness


def _guards(term) -> bool:
    """True when every run of `term` performs at least one action before it ends."""
    if isinstance(term, (Act, Shadow, Deadlock)):
        return True
    if isinstance(term, Var):
        return False
    if isinstance(term, Seq):
        return _guards(term.left) or _guards(term.right)
    if isinstance(term, Alt):
        return all(_guards(b) for b in term.branches)
    if isinstance(term, (Par, WholePar)):
        return _guards(term.left) or _guards(term.right)
    if isinstance(term, Sum):
        return _guards(term.body)
    if isinstance(term, (Hide, Encaps)):
        return _guards(term.body)
    if isinstance(term, ConflictElim):
        return _guards(term.body)
    raise TypeError(f"not a term: {term!r}")


def unguarded_vars(term) -> frozenset:
    """Variables reachable from the root without an intervening action prefix."""
    if isinstance(term, Var):
        return frozenset((term.name,))
    if isinstance(term, (Act, Shadow, Deadlock)):
        return frozenset()
    if isinstance(term, Seq):
        left = unguarded_vars(term.left)
        if _guards(term.left):
            return left
        return left | unguarded_vars(term.right)
    if isinstance(term, Alt):
        out = frozenset()
        for b in term.branches:
            out |= unguarded_vars(b)
        return out
    if isinstance(term, (Par, WholePar)):
        return unguarded_vars(term.left) | unguarded_vars(term.right)
    if isinstance(term, Sum):
        return unguarded_vars(term.body)
    if isinstance(term, (Hide, Encaps)):
        return unguarded_vars(term.body)
    if isinstance(term, ConflictElim):
        return unguarded_vars(term.body)
    raise TypeError(f"not a term: {term!r}")


def guardedness_check(spec: RecursiveSpec) -> tuple[bool, tuple[str, ...]]:
    """Check that every variable occurrence is action-guarded.

    Returns (ok, offending equation names).
    """
    offenders = tuple(name for name, rhs in spec.equations.items()
                      if unguarded_vars(rhs))
    return (not offenders, offenders)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}({self.subject}): {self.message}"


def _walk(term):
    yield term
    if isinstance(term, Seq):
        yield from _walk(term.left)
        yield from _walk(term.right)
    elif isinstance(term, Alt):
        for b in term.branches:
            yield from _walk(b)
    elif isinstance(term, (Par, WholePar)):
        yield from _walk(term.left)
        yield from _walk(term.right)
    elif isinstance(term, Sum):
        yield from _walk(term.body)
    elif isinstance(term, (Hide, Encaps)):
        yield from _walk(term.body)
    elif isinstance(term, ConflictElim):
        yield from _walk(term.body)


def validate_spec(spec: RecursiveSpec,
                  domains,
                  comms: CommTable,
                  extra_names=frozenset()) -> list[Violation]:
    """Collect all well-formedness violations; an empty list means valid."""
    violations: list[Violation] = []
    domain_map = {d.name: d for d in domains} if not isinstance(domains, Mapping) else dict(domains)
    constants = {v for d in domain_map.values() for v in d.values}

    if spec.entry not in spec.equations:
        violations.append(Violation(
            "missing-entry", spec.entry,
            f"entry variable {spec.entry} has no equation"))

    known = set(spec.equations) | set(extra_names)
    for name, rhs in spec.equations.items():
        violations.extend(_validate_term(rhs, name, known, domain_map, constants, ()))

    seen_pairs = set()
    for e in comms.entries:
        if e.a == e.b:
            violations.append(Violation(
                "self-communication", e.a,
                f"gamma pairs {e.a} with itself"))
            continue
        p = e.pair()
        if p in seen_pairs:
            violations.append(Violation(
                "duplicate-pair", "{" + ",".join(sorted(p)) + "}",
                "gamma declares the same unordered pair twice"))
        seen_pairs.add(p)
    return violations


def _validate_term(term, eq_name, known, domain_map, constants, binders):
    out = []
    if isinstance(term, Var):
        if term.name not in known:
            out.append(Violation("unbound-variable", term.name,
                                 f"{term.name} used in {eq_name} but never defined"))
    elif isinstance(term, Act):
        if term.label.name in RESERVED_NAMES:
            out.append(Violation("reserved-name", term.label.name,
                                 f"{term.label.name} may not be declared by the user"))
        for a in term.label.args:
            if a not in constants and a not in binders:
                out.append(Violation(
                    "unknown-constant", a,
                    f"argument {a} of {term.label.pretty()} in {eq_name} "
                    "is neither a domain constant nor a bound sum variable"))
    elif isinstance(term, Shadow):
        if not term.base:
            out.append(Violation("bad-shadow", "@", "empty shadow base"))
    elif isinstance(term, Seq):
        out += _validate_term(term.left, eq_name, known, domain_map, constants, binders)
        out += _validate_term(term.right, eq_name, known, domain_map, constants, binders)
    elif isinstance(term, Alt):
        for b in term.branches:
            out += _validate_term(b, eq_name, known, domain_map, constants, binders)
    elif isinstance(term, (Par, WholePar)):
        out += _validate_term(term.left, eq_name, known, domain_map, constants, binders)
        out += _validate_term(term.right, eq_name, known, domain_map, constants, binders)
    elif isinstance(term, Sum):
        if term.domain not in domain_map:
            out.append(Violation("unknown-domain", term.domain,
                                 f"sum in {eq_name} ranges over undeclared domain"))
        if term.binder in binders:
            out.append(Violation("rebinding", term.binder,
                                 f"sum binder {term.binder} shadows an enclosing binder"))
        out += _validate_term(term.body, eq_name, known, domain_map, constants,
                              binders + (term.binder,))
    elif isinstance(term, (Hide, Encaps)):
        out += _validate_term(term.body, eq_name, known, domain_map, constants, binders)
    elif isinstance(term, ConflictElim):
        out += _validate_term(term.body, eq_name, known, domain_map, constants, binders)
    return out
