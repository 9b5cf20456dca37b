"""Referees for the three arithmetic games.

The abstract game moves numbers only. The single-thread game runs one machine
process and watches every configuration for move shapes against the recorded
history. The multi-thread game keeps every position's full trace alive and
re-examines old configurations whenever the history grows, which is what lets
a realizer win there by having already visited the right configuration.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from .formula import ArithFormula, truth_oracle_g0
from .machine import Machine
from .realizers import box_max_index, is_proof_like, next_tuple
from .syntax import (
    Bottom,
    Const,
    LamcError,
    Process,
    Push,
    Registry,
    Stack,
    Term,
    decode_numeral,
    fresh_constants,
    is_closed,
    numeral,
    parse_stack,
    parse_term,
    process_to_text,
    random_closed_term,
    random_stack,
    stack_to_text,
    term_to_text,
)

### history

@dataclass(frozen=True)
class HistoryEntry:
    """A recorded position: numbers played so far plus the handle to answer."""

    ms: tuple[int, ...]
    ns: tuple[int, ...]
    u: Term
    pi: Stack

    def __post_init__(self):
        if len(self.ms) != len(self.ns):
            raise LamcError("history entry wants as many answers as moves")

    def depth(self) -> int:
        return len(self.ms)


class History:
    """Append-only entry list with hash lookups for move-shape detection."""

    def __init__(self, h: int):
        self.h = h
        self.entries: list[HistoryEntry] = []
        self._final_by_shape: dict[tuple[Term, Stack], list[int]] = {}
        self._open_by_shape: dict[tuple[Term, Stack], int] = {}

    def append(self, entry: HistoryEntry) -> int:
        if entry.depth() > self.h:
            raise LamcError("history entry deeper than the formula")
        idx = len(self.entries)
        self.entries.append(entry)
        key = (entry.u, entry.pi)
        if entry.depth() == self.h:
            self._final_by_shape.setdefault(key, []).append(idx)
        else:
            self._open_by_shape.setdefault(key, idx)
        return idx

    def final_matches(self, p: Process) -> list[int]:
        """Indices of complete entries whose u * pi is exactly p, earliest first."""
        return self._final_by_shape.get((p.term, p.stack), [])

    def open_match(self, p: Process) -> Optional[tuple[int, int, Term]]:
        """(entry index, move, handler) when p is u * m.t.pi for a recorded
        incomplete entry (u, pi); earliest entry on ties."""
        s = p.stack
        if not (isinstance(s, Push) and isinstance(s.rest, Push)):
            return None
        m = decode_numeral(s.top)
        if m is None:
            return None
        idx = self._open_by_shape.get((p.term, s.rest.rest))
        if idx is None:
            return None
        return idx, m, s.rest.top

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class WinShape:
    entry_index: int


@dataclass(frozen=True)
class PlayShape:
    entry_index: int
    m: int
    t: Term


MoveEvent = Union[WinShape, PlayShape]


def detect_move(p: Process, history: History, h: int) -> Optional[MoveEvent]:
    """Shape-only detection: a win shape on any complete entry beats a play
    shape; the payoff gate is the referee's job, not this function's."""
    final = history.final_matches(p)
    if final:
        return WinShape(final[0])
    hit = history.open_match(p)
    if hit is None:
        return None
    idx, m, t = hit
    return PlayShape(idx, m, t)


### adversaries for the machine games

@dataclass(frozen=True)
class MoveContext:
    """What Abelard sees when asked to answer a move."""

    phi: ArithFormula
    entry: HistoryEntry
    entry_index: int
    m: int
    t: Term
    move_number: int


Reply = tuple[int, Term, Stack]
AbelardStrategy = Callable[[MoveContext], Optional[Reply]]


class ScriptedAbelard:
    """Plays a fixed reply list in order; silent once exhausted."""

    def __init__(self, replies: Sequence[Reply]):
        self._replies = list(replies)
        self._next = 0

    def __call__(self, ctx: MoveContext) -> Optional[Reply]:
        if self._next >= len(self._replies):
            return None
        reply = self._replies[self._next]
        self._next += 1
        return reply


class FreshConstantAbelard:
    """Answers the scripted numbers with brand-new inert constants and
    brand-new stack bottoms, so every reply is maximally uninformative."""

    def __init__(self, registry: Registry, nseq: Sequence[int],
                 term_prefix: str = "kappa", stack_prefix: str = "alpha"):
        self._registry = registry
        self._nseq = list(nseq)
        self._next = 0
        self._term_prefix = term_prefix
        self._stack_prefix = stack_prefix

    def __call__(self, ctx: MoveContext) -> Optional[Reply]:
        if self._next >= len(self._nseq):
            return None
        n = self._nseq[self._next]
        self._next += 1
        (kname,) = fresh_constants(self._registry, 1, kind="term",
                                   prefix=self._term_prefix)
        (aname,) = fresh_constants(self._registry, 1, kind="stack",
                                   prefix=self._stack_prefix)
        return n, Const(kname), Bottom(aname)


def fresh_handle(registry: Registry, term_prefix: str = "kappa",
                 stack_prefix: str = "alpha") -> tuple[Term, Stack]:
    """A fresh inert constant facing a fresh stack bottom."""
    (kname,) = fresh_constants(registry, 1, kind="term", prefix=term_prefix)
    (aname,) = fresh_constants(registry, 1, kind="stack", prefix=stack_prefix)
    return Const(kname), Bottom(aname)


class RandomAbelard:
    """Seeded random numbers, closed terms and stacks."""

    def __init__(self, registry: Registry, seed: int, max_move: int = 6,
                 max_replies: int = 64):
        self._registry = registry
        self._rng = random.Random(seed)
        self._max_move = max_move
        self._remaining = max_replies

    def __call__(self, ctx: MoveContext) -> Optional[Reply]:
        if self._remaining <= 0:
            return None
        self._remaining -= 1
        n = self._rng.randint(0, self._max_move)
        u = random_closed_term(self._rng, self._registry)
        pi = random_stack(self._rng, self._registry)
        return n, u, pi


class InteractiveAbelard:
    """Prompts a human for each reply; empty input resigns the reply."""

    def __init__(self, registry: Registry, out=None):
        self._registry = registry
        import sys

        self._out = out if out is not None else sys.stdout

    def __call__(self, ctx: MoveContext) -> Optional[Reply]:
        print(f"move {ctx.move_number}: position {ctx.entry.ms}/{ctx.entry.ns} "
              f"extended by {ctx.m}", file=self._out)
        while True:
            line = input("answer n, term, stack (comma separated, empty to stop): ")
            if not line.strip():
                return None
            try:
                n_text, u_text, pi_text = (part.strip() for part in line.split(",", 2))
                return (int(n_text), parse_term(u_text, self._registry),
                        parse_stack(pi_text, self._registry))
            except (ValueError, LamcError) as exc:
                print(f"could not read that reply: {exc}", file=self._out)


def load_abelard_script(source, registry: Registry):
    """Read {leading?, handle?, replies} from a JSON path or parsed dict.

    Returns (leading numbers, optional (u0, pi0), ScriptedAbelard).
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = source
    leading = tuple(int(z) for z in data.get("leading", ()))
    handle = None
    if "handle" in data:
        handle = (parse_term(data["handle"]["u"], registry),
                  parse_stack(data["handle"]["pi"], registry))
    replies = [
        (int(r["n"]), parse_term(r["u"], registry),
         parse_stack(r["pi"], registry))
        for r in data.get("replies", ())
    ]
    return leading, handle, ScriptedAbelard(replies)


### outcomes

@dataclass(frozen=True)
class MoveRecord:
    move_number: int
    entry_index: int
    m: int
    n: int
    new_entry_index: int
    thread: Optional[int] = None
    config: Optional[int] = None


@dataclass
class MatchOutcome:
    verdict: str                     # "EloiseWin" | "AbelardWin"
    reason: Optional[str]            # None | "stuck" | "budget"
    detail: str
    history: History
    moves: list[MoveRecord]
    segments: list[list[tuple[Process, Optional[str]]]]
    witness_entry: Optional[int] = None
    witness_ref: Optional[tuple[int, int]] = None
    total_steps: int = 0

    @property
    def eloise_won(self) -> bool:
        return self.verdict == "EloiseWin"

    def rules_flat(self) -> list[Optional[str]]:
        return [rule for seg in self.segments for (_, rule) in seg]

    def configs_flat(self) -> list[Process]:
        return [p for seg in self.segments for (p, _) in seg]

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "detail": self.detail,
            "witnessEntry": self.witness_entry,
            "totalSteps": self.total_steps,
            "entries": [
                {"ms": list(e.ms), "ns": list(e.ns),
                 "u": term_to_text(e.u), "pi": stack_to_text(e.pi)}
                for e in self.history.entries
            ],
            "moves": [
                {"move": mr.move_number, "entry": mr.entry_index,
                 "m": mr.m, "n": mr.n, "newEntry": mr.new_entry_index,
                 "thread": mr.thread, "config": mr.config}
                for mr in self.moves
            ],
            "segments": [
                [{"process": process_to_text(p), "rule": rule}
                 for (p, rule) in seg]
                for seg in self.segments
            ],
        }


def _check_match_inputs(registry: Registry, realizer: Term, phi: ArithFormula,
                        handle: tuple[Term, Stack],
                        leading: Sequence[int]) -> None:
    if registry.is_instruction("fork"):
        raise LamcError("matches want a deterministic machine: fork installed")
    if not is_closed(realizer):
        raise LamcError("realizer must be closed")
    if not is_proof_like(realizer):
        raise LamcError("realizer must be proof-like")
    u0, pi0 = handle
    if not is_closed(u0):
        raise LamcError("handle term must be closed")
    if len(leading) != phi.leading_foralls:
        raise LamcError(
            f"formula {phi.name} wants {phi.leading_foralls} leading "
            f"numbers, got {len(leading)}")


def _initial_process(realizer: Term, handle: tuple[Term, Stack],
                     leading: Sequence[int]) -> Process:
    u0, pi0 = handle
    stack: Stack = Push(u0, pi0)
    for z in reversed(leading):
        stack = Push(numeral(z), stack)
    return Process(realizer, stack)


### the single-thread game

def play_g1(registry: Registry, realizer: Term, phi: ArithFormula,
            handle: tuple[Term, Stack], abelard: AbelardStrategy,
            leading: Sequence[int] = (), phase_budget: int = 10_000,
            total_budget: int = 1_000_000) -> MatchOutcome:
    """One live process; a detected play abandons its continuation."""
    _check_match_inputs(registry, realizer, phi, handle, leading)
    machine = Machine(registry)
    history = History(phi.rounds)
    history.append(HistoryEntry((), (), handle[0], handle[1]))
    zs = tuple(leading)

    p = _initial_process(realizer, handle, leading)
    moves: list[MoveRecord] = []
    segments: list[list[tuple[Process, Optional[str]]]] = [[]]
    total_steps = 0
    phase_steps = 0
    seen_this_phase: set[Process] = set()
    move_number = 0

    def outcome(verdict, reason, detail, witness=None):
        return MatchOutcome(verdict, reason, detail, history, moves, segments,
                            witness_entry=witness, total_steps=total_steps)

    rule: Optional[str] = None
    while True:
        segments[-1].append((p, rule))
        event = detect_move(p, history, phi.rounds)
        if isinstance(event, WinShape):
            for idx in history.final_matches(p):
                e = history.entries[idx]
                if phi.f_value(zs, e.ms, e.ns) == 0:
                    return outcome("EloiseWin", None,
                                   f"complete entry {idx} reached with payoff 0",
                                   witness=idx)
            event = detect_move_play_only(p, history)
        if isinstance(event, PlayShape):
            entry = history.entries[event.entry_index]
            ctx = MoveContext(phi, entry, event.entry_index, event.m, event.t,
                              move_number)
            reply = abelard(ctx)
            if reply is None:
                return outcome("AbelardWin", "budget",
                               "opponent had no further reply")
            n, u_new, pi_new = reply
            new_idx = history.append(HistoryEntry(
                (*entry.ms, event.m), (*entry.ns, n), u_new, pi_new))
            moves.append(MoveRecord(move_number, event.entry_index, event.m,
                                    n, new_idx))
            move_number += 1
            p = Process(event.t, Push(numeral(n), Push(u_new, pi_new)))
            segments.append([])
            phase_steps = 0
            seen_this_phase = set()
            rule = None
            continue
        if p in seen_this_phase:
            return outcome("AbelardWin", "stuck",
                           "the process entered a loop with no move in sight")
        seen_this_phase.add(p)
        if phase_steps >= phase_budget:
            return outcome("AbelardWin", "budget", "phase step budget exhausted")
        if total_steps >= total_budget:
            return outcome("AbelardWin", "budget", "total step budget exhausted")
        nxt, rule = machine.step_labeled(p)
        if nxt is None:
            return outcome("AbelardWin", "stuck", "the machine is stuck")
        if isinstance(nxt, tuple):
            raise LamcError("matches want a deterministic machine: fork fired")
        p = nxt
        phase_steps += 1
        total_steps += 1


def detect_move_play_only(p: Process, history: History) -> Optional[PlayShape]:
    hit = history.open_match(p)
    if hit is None:
        return None
    idx, m, t = hit
    return PlayShape(idx, m, t)


### the multi-thread game

class _Thread:
    def __init__(self, idx: int, p: Process):
        self.idx = idx
        self.trace: list[Process] = [p]
        self.rules: list[Optional[str]] = [None]
        self.alive = True
        self.death: Optional[str] = None           # "stuck" | "cycle"
        self._seen: dict[Process, int] = {p: 0}

    def advance(self, machine: Machine, quantum: int, remaining: int) -> int:
        steps = 0
        while self.alive and steps < quantum and steps < remaining:
            nxt, rule = machine.step_labeled(self.trace[-1])
            if nxt is None:
                self.alive = False
                self.death = "stuck"
                break
            if isinstance(nxt, tuple):
                raise LamcError(
                    "matches want a deterministic machine: fork fired")
            steps += 1
            if nxt in self._seen:
                self.alive = False
                self.death = "cycle"
                break
            self.trace.append(nxt)
            self.rules.append(rule)
            self._seen[nxt] = len(self.trace) - 1
        return steps


def play_g2(registry: Registry, realizer: Term, phi: ArithFormula,
            handle: tuple[Term, Stack], abelard: AbelardStrategy,
            leading: Sequence[int] = (), quantum: int = 256,
            total_budget: int = 100_000) -> MatchOutcome:
    """Every position ever reached stays alive: all traces are kept whole and
    re-examined against every new history entry, and each configuration may
    fire one play in its lifetime."""
    _check_match_inputs(registry, realizer, phi, handle, leading)
    machine = Machine(registry)
    history = History(phi.rounds)
    history.append(HistoryEntry((), (), handle[0], handle[1]))
    zs = tuple(leading)

    threads = [_Thread(0, _initial_process(realizer, handle, leading))]
    fired: set[tuple[int, int]] = set()
    moves: list[MoveRecord] = []
    total_steps = 0
    move_number = 0

    def outcome(verdict, reason, detail, witness=None, ref=None):
        segments = [list(zip(t.trace, t.rules)) for t in threads]
        return MatchOutcome(verdict, reason, detail, history, moves, segments,
                            witness_entry=witness, witness_ref=ref,
                            total_steps=total_steps)

    def find_win() -> Optional[tuple[int, int, int]]:
        for t in threads:
            for i, p in enumerate(t.trace):
                for idx in history.final_matches(p):
                    e = history.entries[idx]
                    if phi.f_value(zs, e.ms, e.ns) == 0:
                        return t.idx, i, idx
        return None

    def find_play() -> Optional[tuple[int, int, PlayShape]]:
        for t in threads:
            for i, p in enumerate(t.trace):
                if (t.idx, i) in fired:
                    continue
                hit = history.open_match(p)
                if hit is not None:
                    idx, m, handler = hit
                    return t.idx, i, PlayShape(idx, m, handler)
        return None

    while True:
        win = find_win()
        if win is not None:
            t_idx, c_idx, entry_idx = win
            return outcome("EloiseWin", None,
                           f"complete entry {entry_idx} reached with payoff 0 "
                           f"by position {t_idx} at step {c_idx}",
                           witness=entry_idx, ref=(t_idx, c_idx))
        play = find_play()
        if play is not None:
            t_idx, c_idx, shape = play
            fired.add((t_idx, c_idx))
            entry = history.entries[shape.entry_index]
            ctx = MoveContext(phi, entry, shape.entry_index, shape.m, shape.t,
                              move_number)
            reply = abelard(ctx)
            if reply is None:
                return outcome("AbelardWin", "budget",
                               "opponent had no further reply")
            n, u_new, pi_new = reply
            new_idx = history.append(HistoryEntry(
                (*entry.ms, shape.m), (*entry.ns, n), u_new, pi_new))
            moves.append(MoveRecord(move_number, shape.entry_index, shape.m,
                                    n, new_idx, thread=t_idx, config=c_idx))
            move_number += 1
            threads.append(_Thread(
                len(threads),
                Process(shape.t, Push(numeral(n), Push(u_new, pi_new)))))
            continue
        if total_steps >= total_budget:
            return outcome("AbelardWin", "budget", "total step budget exhausted")
        alive = [t for t in threads if t.alive]
        if not alive:
            return outcome("AbelardWin", "stuck",
                           "every position is stuck or looping and no move "
                           "shape remains")
        for t in alive:
            total_steps += t.advance(machine, quantum,
                                     total_budget - total_steps)


### the abstract game

@dataclass(frozen=True)
class G0Move:
    entry_index: int
    m: int
    n: int


@dataclass
class G0Outcome:
    verdict: str
    reason: Optional[str]
    detail: str
    history: list[tuple[tuple[int, ...], tuple[int, ...]]]
    moves: list[G0Move]

    @property
    def eloise_won(self) -> bool:
        return self.verdict == "EloiseWin"


G0Eloise = Callable[[list[tuple[tuple[int, ...], tuple[int, ...]]]],
                    Optional[tuple[int, int]]]
G0Abelard = Callable[[list[tuple[tuple[int, ...], tuple[int, ...]]], int, int],
                     int]


def play_g0(phi: ArithFormula, eloise: G0Eloise, abelard: G0Abelard,
            zs: Sequence[int] = (), max_moves: int = 10_000) -> G0Outcome:
    """Numbers-only game: Eloise extends a recorded position, Abelard answers,
    and a completed position with payoff zero ends it."""
    if len(zs) != phi.leading_foralls:
        raise LamcError(
            f"formula {phi.name} wants {phi.leading_foralls} leading numbers")
    h = phi.rounds
    history: list[tuple[tuple[int, ...], tuple[int, ...]]] = [((), ())]
    moves: list[G0Move] = []
    for move_number in range(max_moves):
        choice = eloise(history)
        if choice is None:
            return G0Outcome("AbelardWin", "stuck", "no move proposed",
                             history, moves)
        entry_index, m = choice
        if not 0 <= entry_index < len(history):
            raise LamcError(f"no recorded position {entry_index}")
        ms, ns = history[entry_index]
        if len(ms) >= h:
            raise LamcError("cannot extend a completed position")
        n = abelard(history, entry_index, m)
        new_pos = ((*ms, m), (*ns, n))
        history.append(new_pos)
        moves.append(G0Move(entry_index, m, n))
        if len(new_pos[0]) == h and phi.f_value(zs, *new_pos) == 0:
            return G0Outcome("EloiseWin", None,
                             f"position {new_pos[0]}/{new_pos[1]} has payoff 0",
                             history, moves)
    return G0Outcome("AbelardWin", "budget", "move budget exhausted",
                     history, moves)


def scripted_g0_eloise(moves: Sequence[tuple[tuple[int, ...], tuple[int, ...], int]]
                       ) -> G0Eloise:
    """Moves given as (position ms, position ns, m): each names the recorded
    position to extend by value, then the number to play."""
    pending = list(moves)

    def strategy(history):
        if not pending:
            return None
        ms, ns, m = pending.pop(0)
        for idx, (hms, hns) in enumerate(history):
            if hms == tuple(ms) and hns == tuple(ns):
                return idx, m
        raise LamcError(f"scripted position {(ms, ns)} not in the history")

    return strategy


def scripted_g0_abelard(answers: Sequence[int], fallback: int = 0) -> G0Abelard:
    pending = list(answers)

    def strategy(history, entry_index, m):
        if pending:
            return pending.pop(0)
        return fallback

    return strategy


def blind_box_eloise(phi: ArithFormula, bound: int) -> G0Eloise:
    """Enumerates every tuple in the box [0..bound+1]^h in enumeration order,
    walking each one down from the deepest already-recorded prefix. The box is
    one wider than the opponent's range, matching truth_oracle_g0's rule that
    the existential player may always answer a challenge with its successor."""
    h = phi.rounds
    state = {"index": 0}
    cap = bound + 1
    limit = box_max_index(cap, h)

    def strategy(history):
        while True:
            if state["index"] > limit:
                return None
            target = next_tuple(state["index"], h)
            if any(c > cap for c in target):
                state["index"] += 1
                continue
            if any(ms == target for ms, _ in history):
                state["index"] += 1
                continue
            best = None
            for idx, (ms, ns) in enumerate(history):
                if len(ms) < h and ms == target[:len(ms)]:
                    if best is None or len(ms) >= len(history[best][0]):
                        best = idx
            if best is None:
                raise LamcError("the root position vanished from the history")
            depth = len(history[best][0])
            return best, target[depth]

    return strategy


def minimax_g0_abelard(phi: ArithFormula, bound: int,
                       zs: Sequence[int] = ()) -> G0Abelard:
    """Answers with a refuting number when the bounded evaluation offers one."""

    def strategy(history, entry_index, m):
        ms, ns = history[entry_index]
        for n in range(bound + 1):
            candidate = history + [((*ms, m), (*ns, n))]
            if truth_oracle_g0(phi, bound, history=candidate, zs=zs) == "lose":
                return n
        return 0

    return strategy


### harness

def check_strategy(registry_factory: Callable[[], Registry], realizer_name: str,
                   build_realizer: Callable[[Registry], Term],
                   phi: ArithFormula,
                   adversaries: Sequence[tuple[str, Callable[[Registry], AbelardStrategy]]],
                   handles: Sequence[tuple[str, Callable[[Registry], tuple[Term, Stack]]]],
                   leading: Sequence[int] = (), phase_budget: int = 10_000,
                   total_budget: int = 1_000_000,
                   games: Sequence[str] = ("g1", "g2")) -> list[dict]:
    """Falsification harness: play every (handle, adversary) pair in the asked
    games. A loss is a definitive counterexample; wins are evidence only."""
    report = []
    for handle_name, make_handle in handles:
        for adv_name, make_adv in adversaries:
            for game in games:
                registry = registry_factory()
                realizer = build_realizer(registry)
                handle = make_handle(registry)
                adversary = make_adv(registry)
                if game == "g1":
                    out = play_g1(registry, realizer, phi, handle, adversary,
                                  leading=leading, phase_budget=phase_budget,
                                  total_budget=total_budget)
                else:
                    out = play_g2(registry, realizer, phi, handle, adversary,
                                  leading=leading, total_budget=total_budget)
                report.append({
                    "realizer": realizer_name,
                    "formula": phi.name,
                    "game": game,
                    "handle": handle_name,
                    "adversary": adv_name,
                    "verdict": out.verdict,
                    "reason": out.reason,
                    "moves": len(out.moves),
                    "steps": out.total_steps,
                })
    return report


def transcript_to_script(outcome: MatchOutcome) -> list[Reply]:
    """The opponent replies recorded in a finished match, replayable in order."""
    replies = []
    for mr in outcome.moves:
        entry = outcome.history.entries[mr.new_entry_index]
        replies.append((mr.n, entry.u, entry.pi))
    return replies
