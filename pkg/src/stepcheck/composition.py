"""Web-service composition workflow on top of the step semantics.

A composition couples web service orchestrations (WSO) with the web
services (WS) they drive.  From each orchestration an activity base (AB)
is derived by hiding its internal actions; the assembled system hides
internal traffic, blocks half-synchronizations, and eliminates conflicts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .equivalence import (
    Verdict,
    branching_bisim,
    minimize,
    strong_step_bisim,
)
from .model import Model
from .semantics import (
    Config,
    ConflictElim,
    Encaps,
    Hide,
    StepLTS,
    WholePar,
    generate_lts,
    prune_dead,
)
from .terms import (
    Act,
    ActionLabel,
    Alt,
    Par,
    ProcessTerm,
    RecursiveSpec,
    Seq,
    Shadow,
    Sum,
    Var,
    alphabet,
)


class CompositionError(Exception):
    pass


@dataclass
class WsoDef:
    """An orchestration: the driving process of one composition member."""
    name: str
    spec: RecursiveSpec


@dataclass
class WsDef:
    """A web service: the reactive counterpart of an orchestration."""
    name: str
    spec: RecursiveSpec


@dataclass
class AbDef:
    """An activity base derived from an orchestration by hiding internals."""
    name: str
    source: str                      # the orchestration it came from
    internal: frozenset
    lts: StepLTS
    spec: Optional[RecursiveSpec]    # None when no linear presentation exists
    notes: tuple = ()

    def pretty_equations(self) -> str:
        if self.spec is None:
            return f"// {self.name}: no linear presentation"
        from .terms import term_to_str
        return "\n".join(f"{n} = {term_to_str(rhs)}"
                         for n, rhs in self.spec.equations.items())


@dataclass
class WscContract:
    """The contract: the protocol the coupled interactions must follow."""
    name: str
    pairs: tuple                     # of (x, y) action-name pairs, sorted
    protocol: RecursiveSpec


@dataclass
class CompositionModel:
    model: Model
    wsos: tuple = ()
    wss: tuple = ()
    config: Config = Config()

    def wso(self, name: str) -> WsoDef:
        for w in self.wsos:
            if w.name == name:
                return w
        raise CompositionError(f"no orchestration named {name}")

    def ws(self, name: str) -> WsDef:
        for w in self.wss:
            if w.name == name:
                return w
        raise CompositionError(f"no web service named {name}")


def from_model(model: Model, config: Config = Config()) -> CompositionModel:
    """Classify the model's processes: WSO* are orchestrations, WS* services."""
    wsos = []
    wss = []
    for spec in model.processes:
        if spec.name.startswith("WSO"):
            wsos.append(WsoDef(spec.name, spec))
        elif spec.name.startswith("WS"):
            wss.append(WsDef(spec.name, spec))
    return CompositionModel(model, tuple(wsos), tuple(wss), config)


def ab_name(wso_name: str) -> str:
    if wso_name.startswith("WSO"):
        return "AB" + wso_name[3:]
    return "AB_" + wso_name


# ---------------------------------------------------------------------------
# Activity-base derivation


def default_internal(model: Model, wso: WsoDef) -> frozenset:
    """Action names of the orchestration that take part in no communication."""
    info = alphabet(wso.spec, model.domain_map())
    comm_names = model.comms.action_names()
    return frozenset(l.name for l in info.actions if l.name not in comm_names)


def derive_ab(model: Model, wso_name: str,
              internal: Optional[frozenset] = None,
              config: Config = Config()) -> AbDef:
    """Hide an orchestration's internal actions and minimize the result."""
    cm_wso = None
    for spec in model.processes:
        if spec.name == wso_name:
            cm_wso = WsoDef(spec.name, spec)
    if cm_wso is None:
        raise CompositionError(f"no process named {wso_name}")
    if internal is None:
        internal = default_internal(model, cm_wso)
    notes = []
    info = alphabet(cm_wso.spec, model.domain_map())
    term = Hide(frozenset(internal), Var(cm_wso.spec.entry))
    lts = generate_lts(term, model, config)
    reduced = minimize(lts, "branching")
    name = ab_name(wso_name)
    spec = _linear_presentation(name, reduced)
    if spec is None:
        notes.append("no linear presentation: the reduced behavior is "
                     "nondeterministic, silent or uses true steps")
    hidden_data = sorted({l.name for l in info.actions
                          if l.name in internal and l.args})
    if hidden_data:
        notes.append("hiding folds the data choice of "
                     + ", ".join(hidden_data) + " into silent branching")
    return AbDef(name, wso_name, frozenset(internal), reduced, spec,
                 tuple(notes))


def _linear_presentation(name: str, lts: StepLTS) -> Optional[RecursiveSpec]:
    """Rebuild linear equations X = a . Y + ... from a reduced LTS.

    Only possible when every step is a single visible label; silent steps
    or true multi-label steps have no linear rendering here.
    """
    out = lts.outgoing()
    actions = {}
    for s in range(lts.num_states):
        moves = []
        for label, t in sorted(out[s], key=lambda at: (
                tuple(l.pretty() for l in at[0]), at[1])):
            if len(label) != 1:
                return None
            moves.append((label[0], t))
        if not moves:
            return None  # deadlocking presentations are not linear loops
        actions[s] = moves
    others = [s for s in range(lts.num_states) if s != lts.initial]
    var = {lts.initial: name}
    for i, s in enumerate(others, start=1):
        var[s] = f"{name}{i}"
    equations = {}
    for s in [lts.initial] + others:
        branches = []
        for label, t in actions[s]:
            if not isinstance(label, ActionLabel):
                return None
            branches.append(Seq(Act(label), Var(var[t])))
        rhs = branches[0] if len(branches) == 1 else Alt(tuple(branches))
        equations[var[s]] = rhs
    return RecursiveSpec(name, equations, name)


# ---------------------------------------------------------------------------
# Orchestration / web-service correspondence


def strip_shadows(term: ProcessTerm) -> Optional[ProcessTerm]:
    """Elide shadow constants, contracting the sequences they sit in.

    Returns None for a term consisting of shadows only.
    """
    if isinstance(term, Shadow):
        return None
    if isinstance(term, Seq):
        left = strip_shadows(term.left)
        right = strip_shadows(term.right)
        if left is None:
            return right
        if right is None:
            return left
        return Seq(left, right)
    if isinstance(term, Alt):
        branches = [b2 for b in term.branches
                    if (b2 := strip_shadows(b)) is not None]
        if not branches:
            return None
        return branches[0] if len(branches) == 1 else Alt(tuple(branches))
    if isinstance(term, (Par, WholePar)):
        left = strip_shadows(term.left)
        right = strip_shadows(term.right)
        if left is None:
            return right
        if right is None:
            return left
        return type(term)(left, right)
    if isinstance(term, Sum):
        body = strip_shadows(term.body)
        return None if body is None else Sum(term.binder, term.domain, body)
    if isinstance(term, (Hide, Encaps)):
        body = strip_shadows(term.body)
        return None if body is None else type(term)(term.names, body)
    if isinstance(term, ConflictElim):
        body = strip_shadows(term.body)
        return None if body is None else ConflictElim(body)
    return term


def _rename_lts(lts: StepLTS, mapping: dict) -> StepLTS:
    def rename(label):
        out = []
        for l in label:
            if isinstance(l, ActionLabel) and l.name in mapping:
                out.append(ActionLabel(mapping[l.name], l.args))
            else:
                out.append(l)
        return tuple(sorted(out, key=lambda l: l.pretty()))
    return StepLTS(
        initial=lts.initial,
        num_states=lts.num_states,
        transitions=tuple((s, rename(a), t) for s, a, t in lts.transitions),
        state_names=lts.state_names,
        initial_dead=lts.initial_dead,
    )


def correspondence_check(model: Model, ab: AbDef, ws_name: str,
                         rename: Optional[dict] = None,
                         config: Config = Config()) -> Verdict:
    """Does the derived activity base mirror the web service's skeleton?

    The web service's shadows are read as plain actions; the activity
    base's labels are renamed (by default through the communication table)
    onto the service's alphabet, then the two are compared up to strong
    step bisimulation.
    """
    ws = None
    for spec in model.processes:
        if spec.name == ws_name:
            ws = spec
    if ws is None:
        raise CompositionError(f"no process named {ws_name}")
    if rename is None:
        rename = {}
        ws_info = alphabet(ws, model.domain_map())
        ws_names = {l.name for l in ws_info.actions} | set(ws_info.shadow_bases)
        for pair in model.comms.mapping():
            a, b = sorted(pair)
            if a in ws_names and b not in ws_names:
                rename[b] = a
            elif b in ws_names and a not in ws_names:
                rename[a] = b
    stripped_eqs = {}
    for n, rhs in ws.equations.items():
        body = strip_shadows(rhs)
        if body is None:
            raise CompositionError(
                f"equation {n} of {ws.name} consists of shadows only")
        stripped_eqs[n] = body
    stripped = RecursiveSpec(ws.name, stripped_eqs, ws.entry)
    shadow_free = Model(
        domains=model.domains,
        processes=tuple(p if p.name != ws.name else stripped
                        for p in model.processes),
        comms=model.comms,
        conflicts=model.conflicts,
        action_sets=model.action_sets,
        systems={},
        checks=(),
    )
    ws_lts = generate_lts(Var(ws.entry), shadow_free, config)
    renamed = _rename_lts(ab.lts, rename)
    verdict = strong_step_bisim(renamed, minimize(ws_lts, "strong"))
    verdict.details["rename"] = dict(sorted(rename.items()))
    return verdict


# ---------------------------------------------------------------------------
# System assembly and verification


def assemble_system(model: Model, component_names,
                    hide_set: Optional[frozenset] = None,
                    block_set: Optional[frozenset] = None) -> ProcessTerm:
    """hide I in block H in theta (C1 <> C2 <> ...)."""
    if not component_names:
        raise CompositionError("a system needs at least one component")
    term: ProcessTerm = Var(component_names[0])
    for name in component_names[1:]:
        term = WholePar(term, Var(name))
    term = ConflictElim(term)
    if block_set is None:
        block_set = model.comms.action_names()
    if block_set:
        term = Encaps(frozenset(block_set), term)
    if hide_set:
        term = Hide(frozenset(hide_set), term)
    return term


def verify_system(model: Model, system: ProcessTerm, spec_name: str,
                  config: Config = Config(),
                  rooted: bool = False) -> Verdict:
    """Branching-bisimulation check of the assembled system against a spec.

    States of the system from which deadlock is unavoidable are pruned
    first; an initially dead system fails outright.
    """
    sys_lts = prune_dead(generate_lts(system, model, config))
    if sys_lts.initial_dead:
        from .equivalence import StepCounterexample
        return Verdict(
            False, ("rooted " if rooted else "") + "branching bisimulation",
            StepCounterexample((), "the system deadlocks from every run"))
    spec_lts = generate_lts(Var(spec_name), model, config)
    verdict = branching_bisim(sys_lts, spec_lts, rooted=rooted)
    verdict.details["system_states"] = sys_lts.num_states
    verdict.details["spec_states"] = spec_lts.num_states
    return verdict


# ---------------------------------------------------------------------------
# Contract conformance


def _project_to_pairs(lts: StepLTS, pairs) -> StepLTS:
    """Keep only the contracted interactions, as `x~y` labels; rest is tau."""
    pair_sets = {frozenset(p): "~".join(sorted(p)) for p in pairs}

    def project(label):
        out = []
        for l in label:
            if not isinstance(l, ActionLabel):
                parts = set(l.participants)
                for ps, name in pair_sets.items():
                    if ps <= parts:
                        out.append(ActionLabel(name))
        return tuple(sorted(out, key=lambda l: l.pretty()))

    return StepLTS(
        initial=lts.initial,
        num_states=lts.num_states,
        transitions=tuple((s, project(a), t) for s, a, t in lts.transitions),
        state_names=lts.state_names,
        initial_dead=lts.initial_dead,
    )


def wsc_conformance(model: Model, system: ProcessTerm,
                    contract: WscContract,
                    config: Config = Config()) -> Verdict:
    """Do the system's contracted interactions follow the contract protocol?"""
    sys_lts = prune_dead(generate_lts(system, model, config))
    projected = _project_to_pairs(sys_lts, contract.pairs)
    proto_model = Model(
        domains=model.domains,
        processes=(contract.protocol,),
    )
    proto_lts = generate_lts(Var(contract.protocol.entry), proto_model,
                             Config(max_states=config.max_states))
    verdict = branching_bisim(minimize(projected, "branching"), proto_lts)
    verdict.relation = f"conformance to contract {contract.name}"
    return verdict
