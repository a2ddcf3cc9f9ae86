"""The in-memory model: everything a single `.aptc` file declares."""
from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    CommTable,
    ConflictRelation,
    DataDomain,
    ProcessTerm,
    RecursiveSpec,
    Violation,
    validate_spec,
)

RELATIONS = (
    "strong-step-bisim",
    "branching-bisim",
    "rooted-branching-bisim",
    "weak-trace-inclusion",
)


@dataclass
class CheckGoal:
    name: str
    left: str
    right: str
    relation: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation}")


@dataclass
class Model:
    domains: tuple = ()          # DataDomain
    processes: tuple = ()        # RecursiveSpec
    comms: CommTable = CommTable()
    conflicts: ConflictRelation = ConflictRelation()
    action_sets: dict = field(default_factory=dict)   # name -> frozenset
    systems: dict = field(default_factory=dict)       # name -> ProcessTerm
    checks: tuple = ()           # CheckGoal

    def domain_map(self) -> dict:
        return {d.name: d for d in self.domains}

    def equations(self) -> dict:
        """All process equations in one namespace; names must be unique."""
        out: dict = {}
        for spec in self.processes:
            for name, rhs in spec.equations.items():
                if name in out:
                    raise ValueError(f"equation name {name} declared twice")
                out[name] = rhs
        return out

    def process_names(self) -> frozenset:
        return frozenset(s.entry for s in self.processes)

    def validate(self) -> list[Violation]:
        violations: list[Violation] = []
        try:
            names = frozenset(self.equations())
        except ValueError as exc:
            return [Violation("duplicate-equation", "", str(exc))]
        for spec in self.processes:
            violations.extend(validate_spec(
                spec, self.domains, self.comms, extra_names=names))
        return violations
