"""Pebble-sequence model of an aligned bandwidth allocation.

The bandwidth of a height-``n`` code tree is the leaf interval
``[0, 2**n)``.  A *place* of level ``l`` is an aligned interval
``[i*2**l, (i+1)*2**l)``; a *pebble* is an allocated code occupying one
place.  A :class:`Situation` is the full allocator state: the tree height
plus a set of pairwise disjoint, aligned pebbles.

Colors are never stored.  A pebble is *black* when no strictly bigger
pebble starts before it, otherwise *white*.  A situation is *valid* when

* P1: the free bandwidth before any pebble is strictly smaller than the
  pebble,
* P2: two white pebbles never sit next to each other in position order,
* P3: no white pebble has black left and right neighbors of equal size.

``validate`` re-checks all of this (plus alignment and disjointness) from
scratch; the query methods rely on index structures that are maintained
incrementally and answer in O(n) or O(log k) time.

A Situation is a self-contained value: instances share no state, may be
moved freely between threads, and a single instance must not be mutated
concurrently.
"""

from __future__ import annotations

import bisect
from array import array
from dataclasses import dataclass
from typing import Iterator, NamedTuple

#: Hard cap on the tree height; the dense index structures need O(2**n) words.
MAX_HEIGHT = 20

BLACK = "black"
WHITE = "white"


class AllocationError(Exception):
    """Base class for all allocator errors."""


class BandwidthError(AllocationError):
    """Request does not fit into the remaining free bandwidth."""


class RequestError(AllocationError):
    """Malformed or inapplicable request (bad level, unknown id, ...)."""


class InvariantError(AllocationError):
    """An internal expectation failed; the input situation was not valid."""


class SnapshotError(AllocationError):
    """Snapshot text could not be parsed."""


class Place(NamedTuple):
    """Aligned interval ``[start, start + 2**level)``."""

    level: int
    start: int

    @property
    def size(self) -> int:
        return 1 << self.level

    @property
    def end(self) -> int:
        return self.start + (1 << self.level)

    def __str__(self) -> str:
        return f"{self.size}@{self.start}"


@dataclass(slots=True)
class Pebble:
    """One allocated code: stable id, level and starting position."""

    id: int
    level: int
    start: int

    @property
    def size(self) -> int:
        return 1 << self.level

    @property
    def end(self) -> int:
        return self.start + (1 << self.level)

    @property
    def place(self) -> Place:
        return Place(self.level, self.start)


@dataclass(frozen=True, slots=True)
class Violation:
    """One independently re-checkable breach of a structural constraint.

    ``kind`` is one of ``P1 P2 P3 P4 alignment overlap``; ``pebbles`` holds
    the witness ids and ``place`` the witness place where one applies.
    """

    kind: str
    pebbles: tuple[int, ...] = ()
    place: Place | None = None
    detail: str = ""

    def __str__(self) -> str:
        bits = [self.kind]
        if self.pebbles:
            bits.append("pebbles=" + ",".join(map(str, self.pebbles)))
        if self.place is not None:
            bits.append(f"place={self.place}")
        if self.detail:
            bits.append(self.detail)
        return " ".join(bits)


class Situation:
    """Mutable allocator state over ``2**n`` leaf positions.

    Pebbles are kept in three synchronized indexes: a start-ordered list
    (neighbor queries), per-level start lists (rightmost-of-level queries)
    and two flat segment trees over the leaves:

    * a free-block tree answering "first free aligned place of level l"
      and "is this place entirely free",
    * a start-keyed max-level tree answering prefix-maximum queries, which
      is all that rule C needs to color a pebble.
    """

    def __init__(self, n: int):
        if not 0 <= n <= MAX_HEIGHT:
            raise ValueError(f"tree height must be in [0, {MAX_HEIGHT}], got {n}")
        self.n = n
        self.leaves = 1 << n
        self._peb: dict[int, Pebble] = {}
        self._at: dict[int, int] = {}  # start -> pebble id
        self._starts: list[int] = []
        self._levels: list[list[int]] = [[] for _ in range(n + 1)]
        self._occupied = 0
        self._next_id = 1
        lv = self.leaves
        # free-block tree: mf[v] = largest fully free aligned block inside v
        self._mf = array("q", bytes(16 * lv))
        self._recompute_mf_full()
        self._occ = bytearray(2 * lv)
        # start-keyed tree: ml[leaf] = pebble level + 1 at that start, else 0
        self._ml = array("q", bytes(16 * lv))
        # Fenwick over starts holding pebble sizes (prefix-occupancy sums)
        self._fen = array("q", bytes(8 * (lv + 1)))

    # ------------------------------------------------------------------
    # low-level index maintenance

    def _recompute_mf_full(self) -> None:
        mf = self._mf
        lv = self.leaves
        for i in range(lv, 2 * lv):
            mf[i] = 1
        size = 2
        start = lv >> 1
        while start >= 1:
            for v in range(start, start * 2):
                mf[v] = size
            size <<= 1
            start >>= 1

    def _node(self, level: int, start: int) -> int:
        return (self.leaves >> level) + (start >> level)

    def _mf_pull(self, v: int) -> None:
        mf = self._mf
        leaves = self.leaves
        v >>= 1
        while v >= 1:
            size = leaves >> (v.bit_length() - 1)
            left = mf[2 * v]
            right = mf[2 * v + 1]
            half = size >> 1
            mf[v] = size if (left == half and right == half) else max(left, right)
            v >>= 1

    def _occupy(self, level: int, start: int) -> None:
        v = self._node(level, start)
        if self._mf[v] != (1 << level):
            raise InvariantError(f"place {Place(level, start)} is not free")
        self._occ[v] = 1
        self._mf[v] = 0
        self._mf_pull(v)

    def _release(self, level: int, start: int) -> None:
        v = self._node(level, start)
        self._occ[v] = 0
        self._mf[v] = 1 << level
        self._mf_pull(v)

    def block_free(self, level: int, start: int) -> bool:
        """True iff the aligned place ``[start, start + 2**level)`` holds no
        pebble and no part of one."""
        if start % (1 << level) or start + (1 << level) > self.leaves:
            return False
        v = self._node(level, start)
        if self._mf[v] != (1 << level):
            return False
        v >>= 1
        while v >= 1:  # stale mf values hide under occupied ancestors
            if self._occ[v]:
                return False
            v >>= 1
        return True

    def _ml_set(self, pos: int, value: int) -> None:
        ml = self._ml
        v = self.leaves + pos
        ml[v] = value
        v >>= 1
        while v >= 1:
            ml[v] = max(ml[2 * v], ml[2 * v + 1])
            v >>= 1

    def _prefix_max(self, p: int) -> int:
        """Max of ``level + 1`` over pebbles starting at positions < p."""
        if p <= 0:
            return 0
        ml = self._ml
        lo = self.leaves
        hi = self.leaves + min(p, self.leaves)
        res = 0
        while lo < hi:
            if lo & 1:
                if ml[lo] > res:
                    res = ml[lo]
                lo += 1
            if hi & 1:
                hi -= 1
                if ml[hi] > res:
                    res = ml[hi]
            lo >>= 1
            hi >>= 1
        return res

    def _first_start_above(self, level: int) -> int | None:
        """Start of the leftmost pebble of level > ``level``, or None."""
        ml = self._ml
        want = level + 2
        if ml[1] < want:
            return None
        v = 1
        while v < self.leaves:
            v = 2 * v if ml[2 * v] >= want else 2 * v + 1
        return v - self.leaves

    def _fen_add(self, pos: int, delta: int) -> None:
        fen = self._fen
        i = pos + 1
        top = self.leaves
        while i <= top:
            fen[i] += delta
            i += i & (-i)

    def _fen_sum(self, count: int) -> int:
        fen = self._fen
        s = 0
        i = min(count, self.leaves)
        while i > 0:
            s += fen[i]
            i -= i & (-i)
        return s

    def _install(self, pebble: Pebble) -> None:
        self._occupy(pebble.level, pebble.start)
        self._peb[pebble.id] = pebble
        self._at[pebble.start] = pebble.id
        bisect.insort(self._starts, pebble.start)
        bisect.insort(self._levels[pebble.level], pebble.start)
        self._ml_set(pebble.start, pebble.level + 1)
        self._fen_add(pebble.start, pebble.size)
        self._occupied += pebble.size

    def _uninstall(self, pid: int) -> Pebble:
        pebble = self._peb.pop(pid)
        del self._at[pebble.start]
        self._starts.pop(bisect.bisect_left(self._starts, pebble.start))
        lst = self._levels[pebble.level]
        lst.pop(bisect.bisect_left(lst, pebble.start))
        self._ml_set(pebble.start, 0)
        self._fen_add(pebble.start, -pebble.size)
        self._release(pebble.level, pebble.start)
        self._occupied -= pebble.size
        return pebble

    # ------------------------------------------------------------------
    # construction and bookkeeping

    def place_pebble(self, level: int, start: int, pid: int | None = None) -> Pebble:
        """Install a new pebble; raises :class:`RequestError` on misuse."""
        if not 0 <= level <= self.n:
            raise RequestError(f"level {level} out of [0, {self.n}]")
        if start % (1 << level):
            raise RequestError(f"start {start} not aligned to size {1 << level}")
        if start < 0 or start + (1 << level) > self.leaves:
            raise RequestError(f"place {Place(level, start)} outside the tree")
        if not self.block_free(level, start):
            raise RequestError(f"place {Place(level, start)} is not free")
        if pid is None:
            pid = self._next_id
        if pid in self._peb:
            raise RequestError(f"pebble id {pid} already present")
        self._next_id = max(self._next_id, pid + 1)
        pebble = Pebble(pid, level, start)
        self._install(pebble)
        return pebble

    def remove_pebble(self, pid: int) -> Pebble:
        if pid not in self._peb:
            raise RequestError(f"unknown pebble id {pid}")
        return self._uninstall(pid)

    def move_pebble(self, pid: int, new_start: int) -> None:
        """Reassign an existing pebble to a new aligned free place."""
        pebble = self._uninstall(pid)
        old_start = pebble.start
        if (
            new_start % pebble.size
            or new_start < 0
            or new_start + pebble.size > self.leaves
        ):
            self._install(pebble)
            raise InvariantError(f"misaligned move of {pid} to {new_start}")
        try:
            pebble.start = new_start
            self._install(pebble)
        except InvariantError:
            pebble.start = old_start
            self._install(pebble)
            raise

    def relabel_pebble(self, old_id: int, new_id: int) -> None:
        """Hand ``old_id``'s pebble the identity ``new_id`` (code handover)."""
        if old_id not in self._peb:
            raise RequestError(f"unknown pebble id {old_id}")
        if new_id in self._peb:
            raise RequestError(f"pebble id {new_id} already present")
        pebble = self._peb.pop(old_id)
        pebble.id = new_id
        self._peb[new_id] = pebble
        self._at[pebble.start] = new_id

    def copy(self) -> "Situation":
        other = Situation.__new__(Situation)
        other.n = self.n
        other.leaves = self.leaves
        other._peb = {pid: Pebble(p.id, p.level, p.start) for pid, p in self._peb.items()}
        other._at = dict(self._at)
        other._starts = list(self._starts)
        other._levels = [list(l) for l in self._levels]
        other._occupied = self._occupied
        other._next_id = self._next_id
        other._mf = array("q", self._mf)
        other._occ = bytearray(self._occ)
        other._ml = array("q", self._ml)
        other._fen = array("q", self._fen)
        return other

    # ------------------------------------------------------------------
    # basic queries

    def __len__(self) -> int:
        return len(self._peb)

    def __contains__(self, pid: int) -> bool:
        return pid in self._peb

    def pebble(self, pid: int) -> Pebble:
        try:
            return self._peb[pid]
        except KeyError:
            raise RequestError(f"unknown pebble id {pid}") from None

    def pebbles(self) -> Iterator[Pebble]:
        """Pebbles in position order."""
        at = self._at
        peb = self._peb
        for start in self._starts:
            yield peb[at[start]]

    def to_pairs(self) -> tuple[tuple[int, int], ...]:
        """Canonical ``(start, level)`` view, position ordered."""
        at = self._at
        peb = self._peb
        return tuple((s, peb[at[s]].level) for s in self._starts)

    def level_count(self, level: int) -> int:
        return len(self._levels[level])

    def level_starts(self, level: int) -> tuple[int, ...]:
        return tuple(self._levels[level])

    def pebble_at(self, start: int) -> Pebble | None:
        pid = self._at.get(start)
        return None if pid is None else self._peb[pid]

    def pebble_before(self, pos: int) -> Pebble | None:
        """Nearest pebble starting strictly left of ``pos``."""
        i = bisect.bisect_left(self._starts, pos)
        if i == 0:
            return None
        return self._peb[self._at[self._starts[i - 1]]]

    def pebble_after(self, pos: int) -> Pebble | None:
        """Nearest pebble starting strictly right of ``pos``."""
        i = bisect.bisect_right(self._starts, pos)
        if i == len(self._starts):
            return None
        return self._peb[self._at[self._starts[i]]]

    def rightmost_of_level(self, level: int) -> Pebble | None:
        lst = self._levels[level]
        if not lst:
            return None
        return self._peb[self._at[lst[-1]]]

    def smallest_level_right(self, pos: int) -> int | None:
        """Level of the smallest pebble starting strictly right of ``pos``."""
        for level, lst in enumerate(self._levels):
            if lst and lst[-1] > pos:
                return level
        return None

    # ------------------------------------------------------------------
    # spec operations

    def is_black(self, pid: int) -> bool:
        pebble = self.pebble(pid)
        return self._prefix_max(pebble.start) <= pebble.level + 1

    def color_of(self, pid: int) -> str:
        """Rule C: black iff no strictly bigger pebble starts earlier."""
        return BLACK if self.is_black(pid) else WHITE

    def free_bandwidth_before(self, pos: int) -> int:
        """Number of free leaf positions strictly before ``pos``."""
        if not 0 <= pos <= self.leaves:
            raise RequestError(f"position {pos} out of [0, {self.leaves}]")
        occupied = self._fen_sum(pos)
        prev = self.pebble_before(pos)
        if prev is not None and prev.end > pos:
            occupied -= prev.end - pos
        return pos - occupied

    def total_free_bandwidth(self) -> int:
        return self.leaves - self._occupied

    def first_free_place(self, level: int) -> Place | None:
        """Free aligned place of ``level`` with minimal start, or None."""
        if not 0 <= level <= self.n:
            raise RequestError(f"level {level} out of [0, {self.n}]")
        target = 1 << level
        mf = self._mf
        if mf[1] < target:
            return None
        v = 1
        size = self.leaves
        while size > target:
            v = 2 * v if mf[2 * v] >= target else 2 * v + 1
            size >>= 1
        return Place(level, (v - (self.leaves >> level)) << level)

    def closing_position(self, level: int) -> int | None:
        """Position after the last black pebble of ``level``; if there is
        none, the start of the first pebble of a bigger level; else None."""
        if not 0 <= level <= self.n:
            raise RequestError(f"level {level} out of [0, {self.n}]")
        lst = self._levels[level]
        lo, hi = 0, len(lst)
        while lo < hi:  # black pebbles of a level form a prefix of its list
            mid = (lo + hi) // 2
            if self._prefix_max(lst[mid]) <= level + 1:
                lo = mid + 1
            else:
                hi = mid
        if lo > 0:
            return lst[lo - 1] + (1 << level)
        return self._first_start_above(level)

    def validate(self) -> list[Violation]:
        """All P1/P2/P3, alignment and overlap breaches, position ordered."""
        out: list[Violation] = []
        seq = list(self.pebbles())
        colors: list[bool] = []  # parallel: True = black
        running_max = 0
        covered = 0  # leaves covered so far, overlap-clamped
        prev_end = 0
        prev: Pebble | None = None
        for pebble in seq:
            if pebble.start % pebble.size:
                out.append(Violation("alignment", (pebble.id,), pebble.place))
            if prev is not None and pebble.start < prev_end:
                out.append(Violation("overlap", (prev.id, pebble.id), pebble.place))
            black = running_max <= pebble.level + 1
            colors.append(black)
            free_before = pebble.start - min(covered, pebble.start)
            if free_before >= pebble.size:
                out.append(
                    Violation(
                        "P1",
                        (pebble.id,),
                        pebble.place,
                        f"free bandwidth {free_before} >= {pebble.size}",
                    )
                )
            covered += max(0, min(pebble.end, self.leaves) - max(pebble.start, prev_end))
            prev_end = max(prev_end, pebble.end)
            running_max = max(running_max, pebble.level + 1)
            prev = pebble
        for i in range(1, len(seq)):
            if not colors[i - 1] and not colors[i]:
                out.append(Violation("P2", (seq[i - 1].id, seq[i].id), seq[i].place))
        for i, pebble in enumerate(seq):
            if colors[i]:
                continue
            if 0 < i < len(seq) - 1:
                left, right = seq[i - 1], seq[i + 1]
                if colors[i - 1] and colors[i + 1] and left.level == right.level:
                    out.append(
                        Violation("P3", (left.id, pebble.id, right.id), pebble.place)
                    )
        out.sort(key=lambda v: (v.place.start if v.place else 0))
        return out

    # ------------------------------------------------------------------
    # snapshot text format

    def serialize(self) -> str:
        lines = [f"n={self.n}"]
        lines.extend(f"{p.size}@{p.start}" for p in self.pebbles())
        return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> Situation:
    """Parse the ``n=<height>`` / ``<size>@<start>`` snapshot format."""
    lines = text.splitlines()
    header = None
    situation = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            if not line.startswith("n="):
                raise SnapshotError(f"line {lineno}: expected 'n=<height>' header")
            try:
                header = int(line[2:])
            except ValueError:
                raise SnapshotError(f"line {lineno}: bad height {line[2:]!r}") from None
            situation = Situation(header)
            continue
        try:
            size_s, start_s = line.split("@")
            size, start = int(size_s), int(start_s)
        except ValueError:
            raise SnapshotError(f"line {lineno}: expected '<size>@<start>'") from None
        if size <= 0 or size & (size - 1):
            raise SnapshotError(f"line {lineno}: size {size} is not a power of two")
        try:
            situation.place_pebble(size.bit_length() - 1, start)
        except AllocationError as exc:
            raise SnapshotError(f"line {lineno}: {exc}") from None
    if situation is None:
        raise SnapshotError("empty snapshot: missing 'n=<height>' header")
    return situation
