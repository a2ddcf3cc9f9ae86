"""Operational step semantics: from system expressions to finite step LTSs.

Transition labels are multisets of labels executed simultaneously; the
empty multiset (all contributions hidden) is the silent step tau.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .model import Model
from .terms import (
    Act,
    ActionLabel,
    Alt,
    CommResultLabel,
    ConflictElim,
    Deadlock,
    Encaps,
    Hide,
    Label,
    Par,
    ProcessTerm,
    Seq,
    Shadow,
    Sum,
    Var,
    WholePar,
    elaborate_sums,
    term_to_str,
)


class SemanticsError(Exception):
    pass


class StateBudgetExceeded(SemanticsError):
    def __init__(self, max_states, frontier):
        super().__init__(
            f"state budget of {max_states} states exceeded "
            f"({frontier} states still on the frontier)")
        self.max_states = max_states
        self.frontier = frontier


class UnguardedRecursion(SemanticsError):
    def __init__(self, name):
        super().__init__(f"unguarded recursion through {name} during unfolding")
        self.name = name


@dataclass(frozen=True)
class Config:
    comm_policy: str = "chained"     # binary | chained
    step_mode: str = "step"          # interleave | step
    round_mode: str = "overlap"      # overlap | barrier
    shadow_policy: str = "strict"    # strict | loose
    max_states: int = 100000

    def __post_init__(self):
        if self.comm_policy not in ("binary", "chained"):
            raise ValueError(f"bad comm_policy {self.comm_policy}")
        if self.step_mode not in ("interleave", "step"):
            raise ValueError(f"bad step_mode {self.step_mode}")
        if self.round_mode not in ("overlap", "barrier"):
            raise ValueError(f"bad round_mode {self.round_mode}")
        if self.shadow_policy not in ("strict", "loose"):
            raise ValueError(f"bad shadow_policy {self.shadow_policy}")
        if self.max_states < 1:
            raise ValueError("max_states must be positive")


# ---------------------------------------------------------------------------
# Canonical terms and states


@dataclass(frozen=True)
class _Terminated(ProcessTerm):
    def __repr__(self):
        return "TERM"


TERM = _Terminated()


def _term_key(t: ProcessTerm) -> str:
    if t is TERM:
        return "\x00"
    return term_to_str(t)


def canon(term: ProcessTerm) -> ProcessTerm:
    """Behavioral canonical form used for state memoization.

    Seq is right-associated, Alt is flattened/sorted/deduplicated, WholePar
    collapses into Par, empty hide/block wrappers vanish and nested identical
    wrappers merge.
    """
    if isinstance(term, (Deadlock, Act, Shadow, Var, _Terminated)):
        return term
    if isinstance(term, Seq):
        left = canon(term.left)
        right = canon(term.right)
        if left is TERM:
            return right
        if isinstance(left, Seq):  # right-associate
            return canon(Seq(left.left, Seq(left.right, right)))
        return Seq(left, right)
    if isinstance(term, Alt):
        flat = []
        for b in term.branches:
            cb = canon(b)
            if isinstance(cb, Alt):
                flat.extend(cb.branches)
            else:
                flat.append(cb)
        uniq = sorted(set(flat), key=_term_key)
        if len(uniq) == 1:
            return uniq[0]
        return Alt(tuple(uniq))
    if isinstance(term, (Par, WholePar)):
        left = canon(term.left)
        right = canon(term.right)
        if left is TERM:
            return right
        if right is TERM:
            return left
        return Par(left, right)
    if isinstance(term, Sum):
        return Sum(term.binder, term.domain, canon(term.body))
    if isinstance(term, Hide):
        body = canon(term.body)
        names = frozenset(term.names)
        if isinstance(body, Hide):
            names |= body.names
            body = body.body
        if not names or body is TERM:
            return body
        return Hide(names, body)
    if isinstance(term, Encaps):
        body = canon(term.body)
        names = frozenset(term.names)
        if isinstance(body, Encaps):
            names |= body.names
            body = body.body
        if not names or body is TERM:
            return body
        return Encaps(names, body)
    if isinstance(term, ConflictElim):
        body = canon(term.body)
        if isinstance(body, ConflictElim) or body is TERM:
            return body if body is TERM else ConflictElim(body.body)
        return ConflictElim(body)
    raise TypeError(f"not a term: {term!r}")


@dataclass(frozen=True)
class SystemState:
    components: tuple  # of canonical ProcessTerm
    rounds: Optional[tuple] = None  # per-component, barrier mode only

    def pretty(self) -> str:
        parts = " <> ".join(
            "TERM" if c is TERM else term_to_str(c) for c in self.components)
        if self.rounds is not None:
            parts += " @" + ",".join(str(r) for r in self.rounds)
        return parts


# ---------------------------------------------------------------------------
# Occurrences and events


@dataclass(frozen=True)
class _ActOcc:
    label: ActionLabel


@dataclass(frozen=True)
class _ShadowOcc:
    base: str


@dataclass(frozen=True)
class _DoneOcc:
    """An already-resolved event bubbling up through a hide/block boundary."""
    label: Optional[Label]
    fused: bool


@dataclass(frozen=True)
class Event:
    label: Optional[Label]  # None = silent contribution
    fused: bool


def _event_key(e: Event):
    return (e.label is not None, e.label.pretty() if e.label else "", e.fused)


def step_label(events) -> tuple:
    """Final LTS label: the sorted multiset of visible labels (empty = tau)."""
    labels = [e.label for e in events if e.label is not None]
    return tuple(sorted(labels, key=lambda l: l.pretty()))


def label_str(label: tuple) -> str:
    if not label:
        return "tau"
    return "{" + ",".join(l.pretty() for l in label) + "}"


# ---------------------------------------------------------------------------
# Context


@dataclass
class _Context:
    equations: dict                 # name -> canonical, ground ProcessTerm
    comm: dict                      # frozenset pair -> CommResultLabel
    gamma_components: dict          # action name -> frozenset of its component
    conflicts: frozenset            # of frozenset pairs
    shadow_bases: frozenset         # scoped to the system being generated
    config: Config
    _raw_cache: dict = field(default_factory=dict)


def _gamma_components(comm: dict) -> dict:
    adj: dict = {}
    for pair in comm:
        a, b = sorted(pair)
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    comp: dict = {}
    for start in sorted(adj):
        if start in comp:
            continue
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        fs = frozenset(seen)
        for x in seen:
            comp[x] = fs
    return comp


def _reachable_equations(terms, equations) -> frozenset:
    """Names of equations reachable from the given terms."""
    seen: set = set()
    stack = list(terms)
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            if t.name in seen or t.name not in equations:
                continue
            seen.add(t.name)
            stack.append(equations[t.name])
        elif isinstance(t, Seq):
            stack += [t.left, t.right]
        elif isinstance(t, Alt):
            stack += list(t.branches)
        elif isinstance(t, (Par, WholePar)):
            stack += [t.left, t.right]
        elif isinstance(t, Sum):
            stack.append(t.body)
        elif isinstance(t, (Hide, Encaps, ConflictElim)):
            stack.append(t.body)
    return frozenset(seen)


def _collect_shadow_bases(terms, equations) -> frozenset:
    bases: set = set()
    todo = list(terms)
    for name in _reachable_equations(terms, equations):
        todo.append(equations[name])
    for t in todo:
        stack = [t]
        while stack:
            x = stack.pop()
            if isinstance(x, Shadow):
                bases.add(x.base)
            elif isinstance(x, Seq):
                stack += [x.left, x.right]
            elif isinstance(x, Alt):
                stack += list(x.branches)
            elif isinstance(x, (Par, WholePar)):
                stack += [x.left, x.right]
            elif isinstance(x, Sum):
                stack.append(x.body)
            elif isinstance(x, (Hide, Encaps, ConflictElim)):
                stack.append(x.body)
    return frozenset(bases)


# ---------------------------------------------------------------------------
# Raw moves of a single component term


def _raw(term: ProcessTerm, ctx: _Context, stack=frozenset()):
    """All (occurrence multiset, successor) moves of a component term.

    Occurrences stay unresolved so that communication and shadow fusion can
    span sibling components; hide/block/theta boundaries resolve locally.
    """
    if term in ctx._raw_cache:
        return ctx._raw_cache[term]
    moves = _raw_uncached(term, ctx, stack)
    ctx._raw_cache[term] = moves
    return moves


def _raw_uncached(term, ctx, stack):
    if term is TERM or isinstance(term, Deadlock):
        return ()
    if isinstance(term, Act):
        return (((_ActOcc(term.label),), TERM),)
    if isinstance(term, Shadow):
        return (((_ShadowOcc(term.base),), TERM),)
    if isinstance(term, Var):
        if term.name in stack:
            raise UnguardedRecursion(term.name)
        if term.name not in ctx.equations:
            raise SemanticsError(f"unknown process {term.name}")
        return _raw(ctx.equations[term.name], ctx, stack | {term.name})
    if isinstance(term, Seq):
        out = []
        for occs, left2 in _raw(term.left, ctx, stack):
            succ = term.right if left2 is TERM else canon(Seq(left2, term.right))
            out.append((occs, succ))
        return tuple(out)
    if isinstance(term, Alt):
        out = []
        for b in term.branches:
            out.extend(_raw(b, ctx, stack))
        return tuple(out)
    if isinstance(term, (Par, WholePar)):
        lmoves = _raw(term.left, ctx, stack)
        rmoves = _raw(term.right, ctx, stack)
        out = []
        for occs, left2 in lmoves:
            out.append((occs, _par(left2, term.right)))
        for occs, right2 in rmoves:
            out.append((occs, _par(term.left, right2)))
        for (o1, left2), (o2, right2) in itertools.product(lmoves, rmoves):
            out.append((o1 + o2, _par(left2, right2)))
        return tuple(out)
    if isinstance(term, Hide):
        out = []
        for events, succ in _resolved_moves(term.body, ctx, stack):
            hidden = tuple(
                Event(None, e.fused) if _label_hidden(e.label, term.names) else e
                for e in events)
            succ2 = TERM if succ is TERM else canon(Hide(term.names, succ))
            out.append((tuple(_DoneOcc(e.label, e.fused) for e in hidden), succ2))
        return tuple(out)
    if isinstance(term, Encaps):
        out = []
        for events, succ in _resolved_moves(term.body, ctx, stack):
            if _blocked(events, term.names):
                continue
            succ2 = TERM if succ is TERM else canon(Encaps(term.names, succ))
            out.append((tuple(_DoneOcc(e.label, e.fused) for e in events), succ2))
        return tuple(out)
    if isinstance(term, ConflictElim):
        resolved = _resolved_moves(term.body, ctx, stack)
        kept = apply_theta(resolved, ctx.conflicts)
        out = []
        for events, succ in kept:
            succ2 = TERM if succ is TERM else canon(ConflictElim(succ))
            out.append((tuple(_DoneOcc(e.label, e.fused) for e in events), succ2))
        return tuple(out)
    if isinstance(term, Sum):
        raise SemanticsError("sum must be elaborated before generation")
    raise TypeError(f"not a term: {term!r}")


def _par(left, right):
    if left is TERM and right is TERM:
        return TERM
    if left is TERM:
        return right
    if right is TERM:
        return left
    return Par(left, right)


def _resolved_moves(term, ctx, stack):
    out = []
    seen = set()
    for occs, succ in _raw(term, ctx, stack):
        for events in _resolve(occs, ctx):
            key = (events, succ)
            if key not in seen:
                seen.add(key)
                out.append((events, succ))
    return out


def _label_hidden(label, names) -> bool:
    if label is None:
        return False
    if isinstance(label, ActionLabel):
        return label.name in names
    # a communication is hidden by its result name or by all participants
    if label.name is not None and label.name in names:
        return True
    if label.pretty() in names:
        return True
    return all(p in names for p in label.participants)


def _blocked(events, names) -> bool:
    """True when the step contains an unfused occurrence of a blocked action."""
    return any(isinstance(e.label, ActionLabel) and not e.fused
               and e.label.name in names for e in events)


# ---------------------------------------------------------------------------
# Fusion resolution


def _resolve(occs, ctx: _Context):
    """All ways to resolve an occurrence multiset into a resolved step."""
    done = tuple(Event(o.label, o.fused) for o in occs if isinstance(o, _DoneOcc))
    shadows = [o for o in occs if isinstance(o, _ShadowOcc)]
    acts = [o for o in occs if isinstance(o, _ActOcc)]

    results = set()
    for matched in _shadow_matchings(shadows, acts):
        rest = [i for i in range(len(acts)) if i not in matched]
        for groups in _comm_groupings(rest, acts, ctx):
            grouped = {i for g in groups for i in g}
            unfused = [i for i in rest if i not in grouped]
            if ctx.config.shadow_policy == "strict" and any(
                    acts[i].label.name in ctx.shadow_bases for i in unfused):
                continue
            events = list(done)
            events += [Event(acts[i].label, True) for i in matched]
            events += [Event(_comm_label(g, acts, ctx), True) for g in groups]
            events += [Event(acts[i].label, False) for i in unfused]
            results.add(tuple(sorted(events, key=_event_key)))
    return sorted(results, key=lambda evs: tuple(map(_event_key, evs)))


def _shadow_matchings(shadows, acts):
    """Assignments of every shadow to a distinct matching action occurrence."""
    if not shadows:
        yield frozenset()
        return
    first, rest = shadows[0], shadows[1:]
    for i, a in enumerate(acts):
        if a.label.name != first.base:
            continue
        for sub in _shadow_matchings(rest, acts):
            if i in sub:
                continue
            yield sub | {i}


def _comm_groupings(idxs, acts, ctx):
    if ctx.config.comm_policy == "binary":
        yield from _binary_matchings(tuple(idxs), acts, ctx.comm)
    else:
        yield from _chained_groupings(idxs, acts, ctx)


def _binary_matchings(idxs, acts, comm):
    """All sets of disjoint gamma pairs over the occurrence indices."""
    if not idxs:
        yield ()
        return
    first, rest = idxs[0], idxs[1:]
    # first stays unmatched
    for sub in _binary_matchings(rest, acts, comm):
        yield sub
    for j in rest:
        if frozenset((acts[first].label.name, acts[j].label.name)) in comm:
            remaining = tuple(k for k in rest if k != j)
            for sub in _binary_matchings(remaining, acts, comm):
                yield ((first, j),) + sub


def _chained_groupings(idxs, acts, ctx):
    """Chained fusion: a group is a whole component of the gamma graph.

    A component fuses only when every one of its action names is on offer;
    partial relays stay unfused (and are then typically blocked by the
    encapsulation set).
    """
    by_comp: dict = {}
    for i in idxs:
        comp = ctx.gamma_components.get(acts[i].label.name)
        if comp is not None:
            by_comp.setdefault(comp, []).append(i)
    options = []
    for comp, members in sorted(by_comp.items(), key=lambda kv: sorted(kv[0])):
        by_name: dict = {}
        for i in members:
            by_name.setdefault(acts[i].label.name, []).append(i)
        if set(by_name) == set(comp):
            picks = [tuple(sorted(p)) for p in itertools.product(
                *[by_name[n] for n in sorted(comp)])]
            options.append([None] + picks)
        else:
            options.append([None])
    for combo in itertools.product(*options):
        yield tuple(g for g in combo if g is not None)


def _comm_label(group, acts, ctx) -> CommResultLabel:
    names = tuple(sorted(acts[i].label.name for i in group))
    if len(names) == 2:
        declared = ctx.comm.get(frozenset(names))
        if declared is not None:
            return declared
    return CommResultLabel(names)


# ---------------------------------------------------------------------------
# Theta (conflict elimination)


def apply_theta(steps, conflicts):
    """Drop, among a state's enabled steps, conflict losers.

    When two distinct enabled steps contain conflicting actions a # b, the
    step containing the lexicographically larger participant is removed.
    """
    if not conflicts:
        return list(steps)
    steps = list(steps)
    names = [_step_names(events) for events, _ in steps]
    removed = set()
    for i in range(len(steps)):
        for j in range(len(steps)):
            if i == j:
                continue
            for pair in sorted(conflicts, key=sorted):
                a, b = sorted(pair)
                for x, y in ((a, b), (b, a)):
                    if x in names[i] and y in names[j]:
                        loser = max(x, y)
                        if loser in names[i]:
                            removed.add(i)
                        else:
                            removed.add(j)
    return [s for k, s in enumerate(steps) if k not in removed]


def _step_names(events) -> frozenset:
    names = set()
    for e in events:
        if isinstance(e.label, ActionLabel):
            names.add(e.label.name)
        elif isinstance(e.label, CommResultLabel):
            names.update(e.label.participants)
    return frozenset(names)


# ---------------------------------------------------------------------------
# System preparation and generation


@dataclass
class PreparedSystem:
    components: tuple         # initial component terms, canonical
    entries: tuple            # per-component entry variable name or None
    hides: tuple              # hide sets, outermost first
    encaps: tuple             # block sets
    theta: bool
    ctx: _Context

    def initial_state(self) -> SystemState:
        rounds = None
        if self.ctx.config.round_mode == "barrier":
            rounds = (0,) * len(self.components)
        return SystemState(self.components, rounds)


def prepare_system(system: ProcessTerm, model: Model, config: Config) -> PreparedSystem:
    domains = model.domain_map()
    equations = {name: canon(elaborate_sums(rhs, domains))
                 for name, rhs in model.equations().items()}
    comm = model.comms.mapping()
    ctx = _Context(
        equations=equations,
        comm=comm,
        gamma_components=_gamma_components(comm),
        conflicts=model.conflicts.pairs,
        shadow_bases=frozenset(),
        config=config,
    )
    term = canon(elaborate_sums(system, domains))
    hides = []
    encaps = []
    theta = False
    while isinstance(term, (Hide, Encaps, ConflictElim)):
        if isinstance(term, Hide):
            hides.append(frozenset(term.names))
        elif isinstance(term, Encaps):
            encaps.append(frozenset(term.names))
        else:
            theta = True
        term = term.body
    components = tuple(_flatten_par(term))
    entries = tuple(c.name if isinstance(c, Var) else None for c in components)
    ctx.shadow_bases = _collect_shadow_bases(components, equations)
    return PreparedSystem(components, entries, tuple(hides), tuple(encaps),
                          theta, ctx)


def _flatten_par(term):
    if isinstance(term, (Par, WholePar)):
        return _flatten_par(term.left) + _flatten_par(term.right)
    return [term]


def enabled_steps(state: SystemState, prepared: PreparedSystem):
    """All (label, successor state) steps the configuration permits."""
    ctx = prepared.ctx
    config = ctx.config
    comps = state.components
    n = len(comps)

    if config.round_mode == "barrier":
        rounds = state.rounds
        tracked = [r for i, r in enumerate(rounds)
                   if comps[i] is not TERM and prepared.entries[i] is not None]
        floor = min(tracked) if tracked else 0
        allowed = [i for i in range(n) if comps[i] is not TERM
                   and (prepared.entries[i] is None or rounds[i] == floor)]
    else:
        allowed = [i for i in range(n) if comps[i] is not TERM]

    local = {i: _raw(comps[i], ctx) for i in allowed}
    candidates = []
    for size in range(1, len(allowed) + 1):
        for subset in itertools.combinations(allowed, size):
            for choice in itertools.product(*[local[i] for i in subset]):
                occs = tuple(o for occs_i, _ in choice for o in occs_i)
                for events in _resolve(occs, ctx):
                    if config.step_mode == "interleave" and len(events) != 1:
                        continue
                    new_comps = list(comps)
                    moved = {}
                    for i, (_, succ) in zip(subset, choice):
                        new_comps[i] = succ
                        moved[i] = succ
                    rounds2 = state.rounds
                    if rounds2 is not None:
                        rl = list(rounds2)
                        for i, succ in moved.items():
                            entry = prepared.entries[i]
                            if entry is not None and succ == Var(entry):
                                rl[i] += 1
                        # rounds only mean anything for live, entried
                        # components; normalize over those and zero the rest
                        live = [i for i in range(n)
                                if new_comps[i] is not TERM
                                and prepared.entries[i] is not None]
                        lo = min((rl[i] for i in live), default=0)
                        rounds2 = tuple(
                            rl[i] - lo if i in live else 0 for i in range(n))
                    candidates.append(
                        (events, SystemState(tuple(new_comps), rounds2)))

    if prepared.theta:
        candidates = apply_theta(candidates, ctx.conflicts)
    for blocked_set in prepared.encaps:
        candidates = [(ev, st) for ev, st in candidates
                      if not _blocked(ev, blocked_set)]

    out = []
    seen = set()
    for events, succ in candidates:
        labels = [e.label for e in events if e.label is not None]
        for hide_set in reversed(prepared.hides):  # innermost-out
            labels = [l for l in labels if not _label_hidden(l, hide_set)]
        label = tuple(sorted(labels, key=lambda l: l.pretty()))
        key = (label, succ)
        if key not in seen:
            seen.add(key)
            out.append((label, succ))
    out.sort(key=lambda ls: (tuple(l.pretty() for l in ls[0]),
                             ls[1].pretty()))
    return out


# ---------------------------------------------------------------------------
# The LTS


@dataclass(frozen=True)
class StepLTS:
    initial: int
    num_states: int
    transitions: tuple   # of (src, label tuple, dst)
    state_names: tuple
    initial_dead: bool = False

    def outgoing(self):
        out = [[] for _ in range(self.num_states)]
        for s, a, t in self.transitions:
            out[s].append((a, t))
        return out

    def deadlock_states(self) -> tuple:
        has_out = [False] * self.num_states
        for s, _, _ in self.transitions:
            has_out[s] = True
        return tuple(i for i in range(self.num_states) if not has_out[i])

    def labels(self) -> frozenset:
        return frozenset(a for _, a, _ in self.transitions)


def generate_lts(system: ProcessTerm, model: Model,
                 config: Config = Config()) -> StepLTS:
    """Breadth-first closure of enabled steps with canonical memoization."""
    prepared = prepare_system(system, model, config)
    init = prepared.initial_state()
    index = {init: 0}
    names = [init.pretty()]
    order = [init]
    transitions = []
    head = 0
    while head < len(order):
        state = order[head]
        src = index[state]
        head += 1
        for label, succ in enabled_steps(state, prepared):
            if succ not in index:
                if len(order) >= config.max_states:
                    raise StateBudgetExceeded(config.max_states,
                                              len(order) - head)
                index[succ] = len(order)
                names.append(succ.pretty())
                order.append(succ)
            transitions.append((src, label, index[succ]))
    return StepLTS(
        initial=0,
        num_states=len(order),
        transitions=tuple(sorted(
            transitions,
            key=lambda t: (t[0], tuple(l.pretty() for l in t[1]), t[2]))),
        state_names=tuple(names),
    )


def prune_dead(lts: StepLTS) -> StepLTS:
    """Least-fixpoint removal of states from which deadlock is inevitable."""
    out = lts.outgoing()
    dead = [False] * lts.num_states
    changed = True
    while changed:
        changed = False
        for s in range(lts.num_states):
            if dead[s]:
                continue
            if all(dead[t] for _, t in out[s]):
                dead[s] = True
                changed = True
    if dead[lts.initial]:
        return StepLTS(
            initial=0, num_states=1, transitions=(),
            state_names=(lts.state_names[lts.initial],),
            initial_dead=True)
    # restrict to live states reachable from the initial one
    keep = []
    seen = {lts.initial}
    queue = [lts.initial]
    while queue:
        s = queue.pop()
        keep.append(s)
        for _, t in out[s]:
            if not dead[t] and t not in seen:
                seen.add(t)
                queue.append(t)
    keep.sort()
    remap = {s: i for i, s in enumerate(keep)}
    transitions = tuple(
        (remap[s], a, remap[t]) for s, a, t in lts.transitions
        if s in remap and t in remap)
    return StepLTS(
        initial=remap[lts.initial],
        num_states=len(keep),
        transitions=transitions,
        state_names=tuple(lts.state_names[s] for s in keep),
    )
