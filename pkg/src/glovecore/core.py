"""Exhaustive ground truth: blocking tests and full core computation.

A coalition blocks a structure when *every* one of its members strictly
prefers it to their own coalition in the structure. The core is the set of
structures no coalition blocks. ``core_set`` walks coalitions in the outer
loop and partitions in the inner loop, OR-merging blocked flags; the inner
loop runs as exact int64 array arithmetic (all products are tiny relative to
64 bits, and a pure-Python path takes over for absurdly large endowments).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import (
    Coalition,
    CoalitionStructure,
    GameInstance,
    coalition_members,
    format_structure,
    is_restricted_growth,
    parse_structure,
    structure_blocks,
    structure_payoffs,
    value_table,
)
from .partitions import all_partitions

# Keep int64 products far from overflow; beyond this the scalar path is used.
_INT64_SAFE_VALUE = 1 << 40

_CHUNK = 100_000  # partitions per vectorized batch, bounds memory for n >= 12


@dataclass(frozen=True)
class CoreSet:
    """All core partitions of one game, plus brute-force effort counters."""

    game_id: str
    members: tuple[CoalitionStructure, ...]
    partitions_examined: int
    coalitions_examined: int

    @property
    def is_empty(self) -> bool:
        return not self.members


def _check_structure(game: GameInstance, cs: CoalitionStructure) -> None:
    if len(cs) != game.n or not is_restricted_growth(cs):
        raise ValueError(f"not a valid structure for {game.n} players: {cs}")


def blocks(game: GameInstance, c: Coalition, cs: CoalitionStructure) -> bool:
    """True iff every member of ``c`` strictly prefers ``c`` to its coalition in ``cs``."""
    if c == 0:
        raise ValueError("a blocking candidate must be non-empty")
    if c < 0 or c > game.all_players:
        raise ValueError(f"coalition {c:#b} is outside the game's {game.n} players")
    _check_structure(game, cs)
    vt = value_table(game)
    vc = vt[c]
    sc = c.bit_count()
    for mask in structure_blocks(cs):
        if mask & c and vc * mask.bit_count() <= vt[mask] * sc:
            return False
    return True


def blocking_witness(game: GameInstance, cs: CoalitionStructure) -> Coalition | None:
    """Lowest-bitmask coalition that blocks ``cs``, or None for a core member."""
    _check_structure(game, cs)
    n = game.n
    vt = value_table(game)
    masks = structure_blocks(cs)
    own_value = [0] * n
    own_size = [0] * n
    for mask in masks:
        v = vt[mask]
        s = mask.bit_count()
        for p in coalition_members(mask):
            own_value[p] = v
            own_size[p] = s
    for c in range(1, 1 << n):
        vc = vt[c]
        sc = c.bit_count()
        m = c
        while m:
            low = m & -m
            p = low.bit_length() - 1
            if vc * own_size[p] <= own_value[p] * sc:
                break
            m ^= low
        else:
            return c
    return None


def is_core_member(game: GameInstance, cs: CoalitionStructure) -> bool:
    """True iff no coalition blocks ``cs``."""
    return blocking_witness(game, cs) is None


def core_set(game: GameInstance) -> CoreSet:
    """Brute-force core: every partition tested against every coalition."""
    n = game.n
    vt = value_table(game)
    total = vt[game.all_players]
    scan = _scan_chunk_scalar if total * n >= _INT64_SAFE_VALUE else _scan_chunk
    members: list[CoalitionStructure] = []
    examined = 0
    chunk: list[CoalitionStructure] = []
    for cs in all_partitions(n):
        chunk.append(cs)
        if len(chunk) == _CHUNK:
            members.extend(scan(game, chunk))
            examined += len(chunk)
            chunk = []
    if chunk:
        members.extend(scan(game, chunk))
        examined += len(chunk)
    return CoreSet(
        game_id=game.id,
        members=tuple(members),
        partitions_examined=examined,
        coalitions_examined=(1 << n) - 1,
    )


def _scan_chunk(game: GameInstance, chunk: list[CoalitionStructure]) -> list[CoalitionStructure]:
    """Unblocked structures of ``chunk``, via exact int64 array comparisons."""
    n = game.n
    vt = value_table(game)
    rows = len(chunk)
    own_value = np.empty((rows, n), dtype=np.int64)
    own_size = np.empty((rows, n), dtype=np.int64)
    for r, cs in enumerate(chunk):
        for mask in structure_blocks(cs):
            v = vt[mask]
            s = mask.bit_count()
            for p in coalition_members(mask):
                own_value[r, p] = v
                own_size[r, p] = s
    blocked = np.zeros(rows, dtype=bool)
    for c in range(1, 1 << n):
        vc = vt[c]
        sc = c.bit_count()
        m = list(coalition_members(c))
        # every member strictly gains <=> vc/sc > own_value/own_size, cross-multiplied
        blocked |= (vc * own_size[:, m] > sc * own_value[:, m]).all(axis=1)
    return [cs for r, cs in enumerate(chunk) if not blocked[r]]


def _scan_chunk_scalar(
    game: GameInstance, chunk: list[CoalitionStructure]
) -> list[CoalitionStructure]:
    """Pure-Python fallback for endowments too large for int64 products."""
    return [cs for cs in chunk if is_core_member(game, cs)]


# --- core-set file ------------------------------------------------------------


def write_core_set(game: GameInstance, core: CoreSet, path: str | Path) -> None:
    """Write a core set as structured text (JSON): structures plus exact payoffs."""
    doc = {
        "game_id": core.game_id,
        "n": game.n,
        "left": list(game.left),
        "right": list(game.right),
        "partitions_examined": core.partitions_examined,
        "coalitions_examined": core.coalitions_examined,
        "core": [
            {
                "structure": format_structure(cs),
                "payoffs": [str(p) for p in structure_payoffs(game, cs)],
            }
            for cs in core.members
        ],
    }
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write core-set file {path}: {exc}") from exc


def read_core_set(path: str | Path) -> CoreSet:
    """Read a core-set file written by :func:`write_core_set`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read core-set file {path}: {exc}") from exc
    n = int(doc["n"])
    members = tuple(parse_structure(entry["structure"], n) for entry in doc["core"])
    return CoreSet(
        game_id=doc["game_id"],
        members=members,
        partitions_examined=int(doc["partitions_examined"]),
        coalitions_examined=int(doc["coalitions_examined"]),
    )
