"""Stochastic coalition-formation heuristic and the merge/split baseline.

Six routines are attempted once per timestep, in fixed order: join, exit,
pair, defect, split, individual. Each routine draws its own selections from
the run's private RNG and accepts a move only when every agent whose consent
the rule consults *strictly* gains (exact integer cross-multiplication, never
floats). Unconsulted bystanders may lose payoff; that is the rule as defined,
and it is what makes some non-core fixed points reachable.

Uniform draws use ``int(random() * k)`` on the run's `random.Random`; with
k <= 2**16 the bias is negligible and the draw sequence is deterministic for
a fixed seed, so every run is bit-reproducible from (game, config).

The baseline algorithm sweeps all agents per timestep in shuffled order; each
agent attempts a full-coalition merge and a breakaway split of a subgroup
containing it. It shares the termination rules and the strict-gain tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterator

from .game import (
    CoalitionStructure,
    GameInstance,
    Payoff,
    coalition_members,
    format_structure,
    singleton_structure,
    structure_blocks,
    structure_payoffs,
    value_table,
)

ALGORITHMS = ("six", "cf")

ROUTINES = ("join", "exit", "pair", "defect", "split", "individual")

# step number, routine name, structure after the accepted move
TraceEntry = tuple[int, str, str]


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``stability_window`` stops a run once that many consecutive timesteps
    pass without an accepted move (0 disables early stopping and the run
    always uses the full ``max_steps`` budget). ``split_conjunctive`` switches
    the split routine to require both sides of the split to gain; the default
    follows the asymmetric either-side rule.
    """

    max_steps: int = 100_000
    stability_window: int = 10_000
    seed: int = 0
    algorithm: str = "six"
    trace: bool = False
    split_conjunctive: bool = False

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not 0 <= self.stability_window <= self.max_steps:
            raise ValueError("stability_window must be in 0..max_steps")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")


@dataclass(frozen=True)
class RunResult:
    """Outcome of one simulation run."""

    final: CoalitionStructure
    steps_executed: int
    accepted_moves: int
    converged_early: bool
    final_payoffs: tuple[Payoff, ...]
    trace: tuple[TraceEntry, ...] | None = None


class SimState:
    """Mutable partition state of one run, bound to its game and RNG.

    ``blocks`` holds one bitmask per coalition; ``player_block`` maps each
    player to its index in ``blocks``. Every run starts from all singletons.
    """

    __slots__ = (
        "game",
        "n",
        "blocks",
        "player_block",
        "step",
        "last_change_step",
        "accepted_moves",
        "rng",
        "split_conjunctive",
        "_rand",
        "_vt",
        "_trace",
    )

    def __init__(
        self,
        game: GameInstance,
        seed: int,
        trace: bool = False,
        split_conjunctive: bool = False,
    ) -> None:
        self.game = game
        self.n = game.n
        self.blocks: list[int] = [1 << i for i in range(game.n)]
        self.player_block: list[int] = list(range(game.n))
        self.step = 0
        self.last_change_step = 0
        self.accepted_moves = 0
        self.rng = random.Random(seed)
        self.split_conjunctive = split_conjunctive
        self._rand = self.rng.random
        self._vt = value_table(game)
        self._trace: list[TraceEntry] | None = [] if trace else None

    @property
    def structure(self) -> CoalitionStructure:
        """Current partition in canonical restricted-growth form."""
        label_of: dict[int, int] = {}
        out = []
        for i in range(self.n):
            b = self.player_block[i]
            if b not in label_of:
                label_of[b] = len(label_of)
            out.append(label_of[b])
        return tuple(out)

    # -- structural edits; callers guarantee the move keeps a valid partition

    def _drop_block(self, idx: int) -> None:
        last = self.blocks.pop()
        if idx < len(self.blocks):
            self.blocks[idx] = last
            for p in coalition_members(last):
                self.player_block[p] = idx

    def _remove_player(self, i: int) -> None:
        b = self.player_block[i]
        rest = self.blocks[b] & ~(1 << i)
        if rest:
            self.blocks[b] = rest
        else:
            self._drop_block(b)

    def _new_block(self, mask: int) -> None:
        self.blocks.append(mask)
        idx = len(self.blocks) - 1
        for p in coalition_members(mask):
            self.player_block[p] = idx

    def _merge(self, ia: int, ib: int) -> None:
        union = self.blocks[ia] | self.blocks[ib]
        hi, lo = (ia, ib) if ia > ib else (ib, ia)
        self._drop_block(hi)
        self.blocks[lo] = union
        for p in coalition_members(union):
            self.player_block[p] = lo


def _partition_ok(state: SimState) -> bool:
    union = 0
    for mask in state.blocks:
        if mask == 0 or mask & union:
            return False
        union |= mask
    if union != (1 << state.n) - 1:
        return False
    return all(
        (state.blocks[state.player_block[i]] >> i) & 1 for i in range(state.n)
    )


# --- the six routines ---------------------------------------------------------


def try_join(state: SimState) -> bool:
    """Merge the coalitions of two randomly drawn agents when every member of
    both strictly gains; drawing two agents of the same coalition is a no-op."""
    n = state.n
    rand = state._rand
    i = int(rand() * n)
    j = int(rand() * n)
    bi = state.player_block[i]
    bj = state.player_block[j]
    if bi == bj:
        return False
    vt = state._vt
    a = state.blocks[bi]
    b = state.blocks[bj]
    u = a | b
    vu = vt[u]
    su = u.bit_count()
    if vu * a.bit_count() <= vt[a] * su or vu * b.bit_count() <= vt[b] * su:
        return False
    state._merge(bi, bj)
    return True


def try_exit(state: SimState) -> bool:
    """Eject a randomly drawn member of a non-singleton coalition when all the
    *remaining* members strictly gain; the leaver's own payoff is not consulted."""
    if len(state.blocks) == state.n:  # all singletons
        return False
    pb = state.player_block
    blocks = state.blocks
    eligible = [i for i in range(state.n) if blocks[pb[i]].bit_count() > 1]
    x = eligible[int(state._rand() * len(eligible))]
    a = blocks[pb[x]]
    rest = a & ~(1 << x)
    vt = state._vt
    sa = a.bit_count()
    if vt[rest] * sa <= vt[a] * (sa - 1):
        return False
    state._remove_player(x)
    state._new_block(1 << x)
    return True


def try_pair(state: SimState) -> bool:
    """Form the two-agent coalition of two randomly drawn distinct agents when
    both strictly gain; their old coalitions keep their other members."""
    n = state.n
    if n < 2:
        return False
    rand = state._rand
    i = int(rand() * n)
    j = int(rand() * (n - 1))
    if j >= i:
        j += 1
    p = (1 << i) | (1 << j)
    bi = state.player_block[i]
    bj = state.player_block[j]
    blocks = state.blocks
    if bi == bj and blocks[bi] == p:
        return False
    vt = state._vt
    vp = vt[p]
    a = blocks[bi]
    b = blocks[bj]
    if vp * a.bit_count() <= vt[a] * 2 or vp * b.bit_count() <= vt[b] * 2:
        return False
    state._remove_player(i)
    state._remove_player(j)
    state._new_block(p)
    return True


def try_defect(state: SimState) -> bool:
    """Move a randomly drawn agent into a randomly drawn other coalition when
    the agent and every member of the target strictly gain; the abandoned
    coalition is not consulted."""
    blocks = state.blocks
    if len(blocks) < 2:
        return False
    rand = state._rand
    i = int(rand() * state.n)
    bi = state.player_block[i]
    t = int(rand() * (len(blocks) - 1))
    if t >= bi:
        t += 1
    vt = state._vt
    a = blocks[bi]
    b = blocks[t]
    nb = b | (1 << i)
    vn = vt[nb]
    sn = nb.bit_count()
    if vn * a.bit_count() <= vt[a] * sn or vn * b.bit_count() <= vt[b] * sn:
        return False
    anchor = (b & -b).bit_length() - 1  # survives any reindexing below
    state._remove_player(i)
    t = state.player_block[anchor]
    state.blocks[t] |= 1 << i
    state.player_block[i] = t
    return True


def try_split(state: SimState) -> bool:
    """Split a randomly drawn coalition at a uniformly drawn proper subset when
    all breakaway members strictly gain OR all remaining members do (the
    either-side rule; conjunctive variant requires both sides)."""
    blocks = state.blocks
    rand = state._rand
    bidx = int(rand() * len(blocks))
    a = blocks[bidx]
    k = a.bit_count()
    if k < 2:
        return False
    code = 1 + int(rand() * ((1 << k) - 2))  # proper non-empty subset code
    s = 0
    m = a
    t = 0
    while m:
        low = m & -m
        if (code >> t) & 1:
            s |= low
        m ^= low
        t += 1
    r = a ^ s
    vt = state._vt
    va = vt[a]
    s_gains = vt[s] * k > va * s.bit_count()
    r_gains = vt[r] * k > va * r.bit_count()
    ok = (s_gains and r_gains) if state.split_conjunctive else (s_gains or r_gains)
    if not ok:
        return False
    blocks[bidx] = r
    state._new_block(s)
    return True


def try_individual(state: SimState) -> bool:
    """Send a randomly drawn agent back to a singleton when being alone
    strictly beats its current coalition (individual rationality)."""
    i = int(state._rand() * state.n)
    a = state.blocks[state.player_block[i]]
    sa = a.bit_count()
    if sa == 1:
        return False
    vt = state._vt
    if vt[1 << i] * sa <= vt[a]:
        return False
    state._remove_player(i)
    state._new_block(1 << i)
    return True


_ROUTINE_FUNCS: tuple[tuple[str, Callable[[SimState], bool]], ...] = (
    ("join", try_join),
    ("exit", try_exit),
    ("pair", try_pair),
    ("defect", try_defect),
    ("split", try_split),
    ("individual", try_individual),
)


def step(state: SimState) -> bool:
    """One timestep: attempt each routine once, in fixed order, with fresh
    independent draws. Returns True when any move was accepted."""
    applied = False
    trace = state._trace
    for name, fn in _ROUTINE_FUNCS:
        if fn(state):
            applied = True
            state.accepted_moves += 1
            assert _partition_ok(state), f"{name} broke the partition"
            if trace is not None:
                trace.append((state.step + 1, name, format_structure(state.structure)))
    state.step += 1
    if applied:
        state.last_change_step = state.step
    return applied


def _cf_step(state: SimState) -> bool:
    """One baseline timestep: every agent, in shuffled order, attempts a
    merge of its whole coalition and a breakaway subgroup containing it."""
    n = state.n
    rand = state._rand
    vt = state._vt
    blocks = state.blocks
    pb = state.player_block
    trace = state._trace
    order = list(range(n))
    state.rng.shuffle(order)
    applied = False
    for x in order:
        if len(blocks) >= 2:
            bx = pb[x]
            t = int(rand() * (len(blocks) - 1))
            if t >= bx:
                t += 1
            a = blocks[bx]
            b = blocks[t]
            u = a | b
            vu = vt[u]
            su = u.bit_count()
            if vu * a.bit_count() > vt[a] * su and vu * b.bit_count() > vt[b] * su:
                state._merge(bx, t)
                applied = True
                state.accepted_moves += 1
                assert _partition_ok(state), "merge broke the partition"
                if trace is not None:
                    trace.append(
                        (state.step + 1, "merge", format_structure(state.structure))
                    )
        a = blocks[pb[x]]
        k = a.bit_count()
        if k >= 2:
            # subgroup containing x: a proper subset, drawn uniformly
            code = int(rand() * ((1 << (k - 1)) - 1))
            s = 1 << x
            t2 = 0
            m = a & ~(1 << x)
            while m:
                low = m & -m
                if (code >> t2) & 1:
                    s |= low
                m ^= low
                t2 += 1
            if vt[s] * k > vt[a] * s.bit_count():
                bx = pb[x]
                blocks[bx] = a ^ s
                state._new_block(s)
                applied = True
                state.accepted_moves += 1
                assert _partition_ok(state), "split broke the partition"
                if trace is not None:
                    trace.append(
                        (state.step + 1, "split", format_structure(state.structure))
                    )
    state.step += 1
    if applied:
        state.last_change_step = state.step
    return applied


def _run_loop(state: SimState, config: SimConfig, stepper: Callable[[SimState], bool]) -> RunResult:
    window = config.stability_window
    while state.step < config.max_steps:
        if window and state.step - state.last_change_step >= window:
            break
        stepper(state)
    converged = bool(window) and state.step - state.last_change_step >= window
    final = state.structure
    return RunResult(
        final=final,
        steps_executed=state.step,
        accepted_moves=state.accepted_moves,
        converged_early=converged,
        final_payoffs=structure_payoffs(state.game, final),
        trace=tuple(state._trace) if state._trace is not None else None,
    )


def run(game: GameInstance, config: SimConfig) -> RunResult:
    """Run the configured algorithm from the all-singletons start."""
    if config.algorithm == "cf":
        return run_baseline(game, config)
    state = SimState(
        game, config.seed, trace=config.trace, split_conjunctive=config.split_conjunctive
    )
    return _run_loop(state, config, step)


def run_baseline(game: GameInstance, config: SimConfig) -> RunResult:
    """Run the merge/split baseline from the all-singletons start."""
    state = SimState(game, config.seed, trace=config.trace)
    return _run_loop(state, config, _cf_step)


# --- exhaustive move enumeration (fixed-point analysis) -------------------------


def accepted_moves(
    game: GameInstance, cs: CoalitionStructure, split_conjunctive: bool = False
) -> list[tuple[str, CoalitionStructure]]:
    """Every routine selection that would be accepted from ``cs``.

    Enumerates all possible random selections of all six routines and returns
    (routine, resulting structure) for each accepted one. An empty result
    means ``cs`` is a fixed point of the heuristic.
    """
    return list(_iter_accepted_moves(game, cs, split_conjunctive))


def is_fixed_point(
    game: GameInstance, cs: CoalitionStructure, split_conjunctive: bool = False
) -> bool:
    """True iff no selection of any routine can change ``cs``."""
    return next(_iter_accepted_moves(game, cs, split_conjunctive), None) is None


def _iter_accepted_moves(
    game: GameInstance, cs: CoalitionStructure, split_conjunctive: bool
) -> Iterator[tuple[str, CoalitionStructure]]:
    from .game import structure_from_blocks  # local to avoid polluting module API

    vt = value_table(game)
    masks = list(structure_blocks(cs))
    n = game.n

    def rebuilt(additions: tuple[int, ...], removed: set[int]) -> CoalitionStructure:
        new_masks = [m for idx, m in enumerate(masks) if idx not in removed]
        new_masks.extend(additions)
        return structure_from_blocks([m for m in new_masks if m], n)

    # join: any unordered pair of coalitions
    for ia in range(len(masks)):
        for ib in range(ia + 1, len(masks)):
            a, b = masks[ia], masks[ib]
            u = a | b
            su = u.bit_count()
            if vt[u] * a.bit_count() > vt[a] * su and vt[u] * b.bit_count() > vt[b] * su:
                yield "join", rebuilt((u,), {ia, ib})

    # exit: any member of any non-singleton coalition
    for ia, a in enumerate(masks):
        sa = a.bit_count()
        if sa < 2:
            continue
        for x in coalition_members(a):
            rest = a & ~(1 << x)
            if vt[rest] * sa > vt[a] * (sa - 1):
                yield "exit", rebuilt((rest, 1 << x), {ia})

    # pair: any unordered pair of distinct agents
    for i in range(n):
        for j in range(i + 1, n):
            p = (1 << i) | (1 << j)
            ai = masks[_label_of(cs, i)]
            aj = masks[_label_of(cs, j)]
            if ai == p and aj == p:
                continue
            if vt[p] * ai.bit_count() > vt[ai] * 2 and vt[p] * aj.bit_count() > vt[aj] * 2:
                stripped = [m & ~p for m in masks]
                stripped.append(p)
                yield "pair", structure_from_blocks([m for m in stripped if m], n)

    # defect: any agent into any other coalition
    for i in range(n):
        bi = _label_of(cs, i)
        a = masks[bi]
        for ib, b in enumerate(masks):
            if ib == bi:
                continue
            nb = b | (1 << i)
            sn = nb.bit_count()
            if vt[nb] * a.bit_count() > vt[a] * sn and vt[nb] * b.bit_count() > vt[b] * sn:
                new_masks = [m for idx, m in enumerate(masks) if idx not in (bi, ib)]
                new_masks.extend((a & ~(1 << i), nb))
                yield "defect", structure_from_blocks([m for m in new_masks if m], n)

    # split: any coalition at any proper non-empty subset
    for ia, a in enumerate(masks):
        k = a.bit_count()
        if k < 2:
            continue
        ms = coalition_members(a)
        for code in range(1, (1 << k) - 1):
            s = 0
            for t, p in enumerate(ms):
                if (code >> t) & 1:
                    s |= 1 << p
            r = a ^ s
            s_gains = vt[s] * k > vt[a] * s.bit_count()
            r_gains = vt[r] * k > vt[a] * r.bit_count()
            ok = (s_gains and r_gains) if split_conjunctive else (s_gains or r_gains)
            if ok:
                yield "split", rebuilt((s, r), {ia})

    # individual: any member of any non-singleton coalition
    for ia, a in enumerate(masks):
        sa = a.bit_count()
        if sa < 2:
            continue
        for x in coalition_members(a):
            if vt[1 << x] * sa > vt[a]:
                rest = a & ~(1 << x)
                yield "individual", rebuilt((rest, 1 << x), {ia})


def _label_of(cs: CoalitionStructure, player: int) -> int:
    return cs[player]


def individually_rational(game: GameInstance, cs: CoalitionStructure) -> bool:
    """True iff every player's payoff is at least its singleton payoff."""
    vt = value_table(game)
    for i, mask in enumerate(structure_blocks(cs)[l] for l in cs):
        if vt[mask] < vt[1 << i] * mask.bit_count():
            return False
    return True
