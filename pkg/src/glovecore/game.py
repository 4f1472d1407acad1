"""Glove-game model: instances, coalitions, coalition structures, exact payoffs.

Players are indexed ``0..n-1``. A coalition is a bitmask over player indices
(bit ``i`` set means player ``i`` is a member). A coalition structure is a
partition of all players, stored as a restricted-growth label tuple: player 0
always has label 0 and every later label is at most one more than the largest
label seen so far. That encoding gives each partition exactly one
representation, so equality and hashing are exact and O(n).

A coalition's value is the number of left/right glove pairs its members can
assemble, split equally, so every payoff is the exact rational
``pairs / coalition size``. Payoffs are `fractions.Fraction` values and every
comparison in the package reduces to integer cross-multiplication; no floating
point is involved, which keeps ties and strict inequalities exact.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

MAX_PLAYERS = 16

Coalition = int
CoalitionStructure = tuple[int, ...]

# Payoffs are exact rationals: numerator = glove pairs, denominator = members.
Payoff = Fraction


@dataclass(frozen=True)
class GameInstance:
    """A glove game: per-player left-glove and right-glove endowments."""

    id: str
    n: int
    left: tuple[int, ...]
    right: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", tuple(int(v) for v in self.left))
        object.__setattr__(self, "right", tuple(int(v) for v in self.right))
        if not 1 <= self.n <= MAX_PLAYERS:
            raise ValueError(f"player count must be in 1..{MAX_PLAYERS}, got {self.n}")
        if len(self.left) != self.n or len(self.right) != self.n:
            raise ValueError(
                f"game {self.id!r}: endowment lengths {len(self.left)}/{len(self.right)} "
                f"do not match n={self.n}"
            )
        if any(v < 0 for v in self.left + self.right):
            raise ValueError(f"game {self.id!r}: glove endowments must be non-negative")

    @property
    def all_players(self) -> Coalition:
        """Bitmask of the grand coalition."""
        return (1 << self.n) - 1


def coalition_of(players: Iterable[int]) -> Coalition:
    """Bitmask for an iterable of player indices."""
    mask = 0
    for p in players:
        mask |= 1 << p
    return mask


def coalition_members(c: Coalition) -> tuple[int, ...]:
    """Player indices of a coalition mask, ascending."""
    out = []
    while c:
        low = c & -c
        out.append(low.bit_length() - 1)
        c ^= low
    return tuple(out)


@lru_cache(maxsize=128)
def value_table(game: GameInstance) -> list[int]:
    """Coalition value ``min(total left, total right)`` for every mask.

    Indexed by coalition bitmask; entry 0 is 0. Built once per game and
    shared by the solver and the simulator.
    """
    n = game.n
    left, right = game.left, game.right
    size = 1 << n
    ls = [0] * size
    rs = [0] * size
    vt = [0] * size
    for mask in range(1, size):
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        l = ls[rest] + left[i]
        r = rs[rest] + right[i]
        ls[mask] = l
        rs[mask] = r
        vt[mask] = l if l < r else r
    return vt


def _check_coalition(game: GameInstance, c: Coalition) -> None:
    if c == 0:
        raise ValueError("coalition must be non-empty")
    if c < 0 or c > game.all_players:
        raise ValueError(f"coalition {c:#b} is outside the game's {game.n} players")


def coalition_value(game: GameInstance, c: Coalition) -> int:
    """Glove pairs coalition ``c`` assembles: min of its left and right totals."""
    _check_coalition(game, c)
    return value_table(game)[c]


def payoff(game: GameInstance, c: Coalition, i: int) -> Payoff:
    """Player ``i``'s payoff in coalition ``c``: value split equally."""
    _check_coalition(game, c)
    if not 0 <= i < game.n or not (c >> i) & 1:
        raise ValueError(f"player {i} is not a member of coalition {c:#b}")
    return Fraction(value_table(game)[c], c.bit_count())


def prefers(game: GameInstance, i: int, a: Coalition, b: Coalition) -> int:
    """Exact preference of player ``i`` between coalitions ``a`` and ``b``.

    Returns 1 if ``i`` strictly prefers ``a``, -1 if strictly ``b``,
    0 if indifferent. Comparison is integer cross-multiplication.
    """
    _check_coalition(game, a)
    _check_coalition(game, b)
    if not (a >> i) & 1 or not (b >> i) & 1:
        raise ValueError(f"player {i} must belong to both coalitions")
    vt = value_table(game)
    lhs = vt[a] * b.bit_count()
    rhs = vt[b] * a.bit_count()
    return (lhs > rhs) - (lhs < rhs)


# --- coalition structures ---------------------------------------------------


def singleton_structure(n: int) -> CoalitionStructure:
    """The all-singletons partition (every simulation run starts here)."""
    return tuple(range(n))


def is_restricted_growth(labels: Sequence[int]) -> bool:
    """True iff ``labels`` is a canonical restricted-growth string."""
    top = -1
    for v in labels:
        if v < 0 or v > top + 1:
            return False
        if v > top:
            top = v
    return len(labels) > 0


def canonical_structure(labels: Sequence[int]) -> CoalitionStructure:
    """Relabel an arbitrary block labelling into restricted-growth form."""
    seen: dict[int, int] = {}
    out = []
    for v in labels:
        if v not in seen:
            seen[v] = len(seen)
        out.append(seen[v])
    return tuple(out)


def structure_blocks(cs: CoalitionStructure) -> tuple[Coalition, ...]:
    """Coalition bitmasks of a structure, ordered by block label."""
    nblocks = max(cs) + 1
    masks = [0] * nblocks
    for player, label in enumerate(cs):
        masks[label] |= 1 << player
    return tuple(masks)


def structure_from_blocks(blocks: Iterable[Coalition], n: int) -> CoalitionStructure:
    """Canonical structure for a collection of disjoint coalition masks.

    Raises ValueError if the masks are not a partition of ``0..n-1``.
    """
    labels = [-1] * n
    union = 0
    for idx, mask in enumerate(blocks):
        if mask == 0:
            raise ValueError("partition blocks must be non-empty")
        if mask & union:
            raise ValueError("partition blocks must be disjoint")
        union |= mask
        m = mask
        while m:
            low = m & -m
            p = low.bit_length() - 1
            if p >= n:
                raise ValueError(f"player {p} is outside 0..{n - 1}")
            labels[p] = idx
            m ^= low
    if union != (1 << n) - 1:
        missing = [p for p in range(n) if labels[p] < 0]
        raise ValueError(f"players {missing} are not covered by the partition")
    return canonical_structure(labels)


def structure_payoffs(game: GameInstance, cs: CoalitionStructure) -> tuple[Payoff, ...]:
    """Each player's payoff in its own coalition of ``cs``."""
    if len(cs) != game.n or not is_restricted_growth(cs):
        raise ValueError(f"not a valid structure for {game.n} players: {cs}")
    vt = value_table(game)
    masks = structure_blocks(cs)
    per_block = [Fraction(vt[m], m.bit_count()) for m in masks]
    return tuple(per_block[label] for label in cs)


def format_structure(cs: CoalitionStructure) -> str:
    """Block notation, zero-based, e.g. ``(0,5)(1)(2,3,4)(6)(7)``."""
    return "".join(
        "(" + ",".join(str(p) for p in coalition_members(mask)) + ")"
        for mask in structure_blocks(cs)
    )


_BLOCK_RE = re.compile(r"\(([^()]*)\)")


def parse_structure(text: str, n: int) -> CoalitionStructure:
    """Parse block notation like ``(0,5)(1)(2,3,4)`` into a canonical structure.

    Raises ValueError on malformed text or when the blocks are not a
    partition of ``0..n-1``.
    """
    compact = "".join(text.split())
    pieces = _BLOCK_RE.findall(compact)
    if not pieces or "".join(f"({p})" for p in pieces) != compact:
        raise ValueError(f"malformed partition string: {text!r}")
    blocks = []
    for piece in pieces:
        if not piece:
            raise ValueError(f"empty block in partition string: {text!r}")
        try:
            players = [int(tok) for tok in piece.split(",")]
        except ValueError:
            raise ValueError(f"malformed block {piece!r} in {text!r}") from None
        if len(set(players)) != len(players):
            raise ValueError(f"repeated player inside block ({piece})")
        blocks.append(coalition_of(players))
    return structure_from_blocks(blocks, n)


def random_game(
    n: int,
    max_gloves: int = 9,
    seed: int = 0,
    id: str | None = None,
) -> GameInstance:
    """A game with endowments drawn uniformly from ``0..max_gloves``.

    Deterministic for fixed arguments.
    """
    if n < 1:
        raise ValueError(f"player count must be at least 1, got {n}")
    if max_gloves < 0:
        raise ValueError("max_gloves must be non-negative")
    rng = random.Random(seed)
    left = tuple(rng.randint(0, max_gloves) for _ in range(n))
    right = tuple(rng.randint(0, max_gloves) for _ in range(n))
    return GameInstance(id or f"rand{n}.{seed}", n, left, right)
