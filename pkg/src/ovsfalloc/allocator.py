"""Insert and delete procedures with O(1)-amortized reallocations.

Both procedures mutate the situation in place and return a
:class:`MoveLog` describing the request: the newly placed pebble, every
reassignment as (id, old place, new place), the removed pebble and the
number of compaction iterations a deletion performed.

Admissibility errors (bad level, insufficient bandwidth, missing pebble)
are raised before anything is mutated, so a rejected request leaves the
situation bit-identical.  Both procedures assume the input situation is
valid; replaying through :mod:`ovsfalloc.replay` re-validates after every
request unless explicitly disabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    BandwidthError,
    InvariantError,
    Place,
    RequestError,
    Situation,
)

INSERT = "insert"
DELETE_LEVEL = "delete_level"
DELETE_ID = "delete_id"

# insert branch labels (which arm of the case analysis ran)
PLACE_DIRECT = "place-direct"  # left neighbor absent or black
PLACE_OVER_SMALL = "place-over-small"  # white neighbor backed by smaller black
ROTATE_PAIR = "rotate-pair"  # backing black has the requested size
SHUFFLE_WHITE = "shuffle-white"  # bigger backing black, closing pebble white
SHUFFLE_BLACK = "shuffle-black"  # bigger backing black, closing pebble black

# delete exit labels
EXIT_END = "delete-end-of-tree"  # nothing remains right of the gap
EXIT_NO_FIT = "delete-no-fit"  # smallest right pebble does not fit the gap


@dataclass(frozen=True, slots=True)
class Request:
    """One trace step: insert at a level, or delete by level / by id."""

    kind: str
    level: int | None = None
    id: int | None = None


@dataclass(slots=True)
class AllocatorOptions:
    """Testing hooks that disable individual algorithm steps.

    Used by the verification harness to prove the test suite notices the
    subtle steps; production callers keep the defaults.
    """

    skip_delete_swap: bool = False
    skip_insert_rename: bool = False


_DEFAULTS = AllocatorOptions()


@dataclass(slots=True)
class MoveLog:
    """Everything one request did, in deterministic order.

    ``moved`` holds net reassignments (original place before the request,
    final place after it); its length is the reassignment cost.  A code
    handover performed for a delete-by-id is reported in ``relabel`` and
    costs zero moves unless the caller opts into counting it.
    """

    kind: str
    level: int | None = None
    placed: tuple[int, Place] | None = None
    moved: list[tuple[int, Place, Place]] = field(default_factory=list)
    removed: int | None = None
    removed_place: Place | None = None
    relabel: tuple[int, int] | None = None
    iterations: int = 0
    swaps: int = 0
    branch: str = ""
    renamed: bool = False

    def cost(self, count_relabel: bool = False) -> int:
        extra = 1 if (count_relabel and self.relabel is not None) else 0
        return len(self.moved) + extra

    def freed_places(self) -> list[Place]:
        """Places vacated by this request (for the coin auditor)."""
        out = [old for _, old, _ in self.moved]
        if self.removed_place is not None:
            out.append(self.removed_place)
        return out

    def taken_places(self) -> list[Place]:
        """Places newly covered by this request."""
        out = [new for _, _, new in self.moved]
        if self.placed is not None:
            out.append(self.placed[1])
        return out

    def op_token(self) -> str:
        if self.kind == INSERT:
            return f"I{self.level}"
        if self.kind == DELETE_LEVEL:
            return f"D{self.level}"
        return f"DID{self.removed}"

    def serialize(self, index: int) -> str:
        placed = f"{self.placed[0]}:{self.placed[1]}" if self.placed else "-"
        moved = (
            ",".join(f"{pid}:{old}->{new}" for pid, old, new in self.moved)
            if self.moved
            else "-"
        )
        removed = str(self.removed) if self.removed is not None else "-"
        return (
            f"req={index} op={self.op_token()} placed={placed} "
            f"moved={moved} removed={removed} iters={self.iterations}"
        )


def insert(s: Situation, level: int, options: AllocatorOptions | None = None) -> MoveLog:
    """Insert a pebble of ``level`` into a valid situation.

    The new pebble lands on the first free place of its size; if that
    breaks an invariant, at most three existing pebbles are reassigned to
    repair it.
    """
    options = options or _DEFAULTS
    if not 0 <= level <= s.n:
        raise RequestError(f"level {level} out of [0, {s.n}]")
    a = 1 << level
    if a > s.total_free_bandwidth():
        raise BandwidthError(
            f"size {a} exceeds free bandwidth {s.total_free_bandwidth()}"
        )
    place = s.first_free_place(level)
    if place is None:
        raise InvariantError(
            "no free place despite sufficient bandwidth; input situation invalid"
        )
    log = MoveLog(INSERT, level=level)
    left = s.pebble_before(place.start)
    if left is None or s.is_black(left.id):
        new = s.place_pebble(level, place.start)
        log.placed = (new.id, new.place)
        log.branch = PLACE_DIRECT
        return log

    b = left  # white neighbor of the target place
    c = s.pebble_before(b.start)
    if c is None:
        raise InvariantError("white pebble without left neighbor; input invalid")

    if c.size < a:
        new = s.place_pebble(level, place.start)
        log.placed = (new.id, new.place)
        log.branch = PLACE_OVER_SMALL
        return log

    if c.size == a:
        # rotate: new pebble right after the backing black, old white after it
        old_b = b.place
        s.remove_pebble(b.id)
        new = s.place_pebble(level, c.end)
        s.place_pebble(b.level, new.end, pid=b.id)
        log.placed = (new.id, new.place)
        log.moved.append((b.id, old_b, Place(b.level, new.end)))
        log.branch = ROTATE_PAIR
        return log

    # c > a: shuffle around the closing position
    old_b = b.place
    s.remove_pebble(b.id)
    renamed = a < b.size and not options.skip_insert_rename
    big_level = b.level if renamed else level
    small_level = level if renamed else b.level
    big = 1 << big_level
    cp = s.closing_position(big_level)
    if cp is None:
        raise InvariantError("no closing position; input situation invalid")
    d = s.pebble_at(cp)
    if d is None:
        raise InvariantError(f"no pebble at closing position {cp}; input invalid")

    if not s.is_black(d.id):
        e = s.pebble_after(d.start)
        if e is None:
            raise InvariantError("white closing pebble without right neighbor")
        old_d, old_e = d.place, e.place
        s.remove_pebble(d.id)
        s.remove_pebble(e.id)
        if renamed:
            s.place_pebble(big_level, cp, pid=b.id)
            new = s.place_pebble(small_level, cp + big)
        else:
            new = s.place_pebble(big_level, cp)
            s.place_pebble(small_level, cp + big, pid=b.id)
        s.place_pebble(d.level, cp + big + (1 << small_level), pid=d.id)
        s.place_pebble(e.level, old_b.start, pid=e.id)
        log.placed = (new.id, new.place)
        b_new = Place(b.level, cp if renamed else cp + big)
        log.moved.append((b.id, old_b, b_new))
        log.moved.append((d.id, old_d, Place(d.level, cp + big + (1 << small_level))))
        log.moved.append((e.id, old_e, Place(e.level, old_b.start)))
        log.branch = SHUFFLE_WHITE
    else:
        old_d = d.place
        s.remove_pebble(d.id)
        if renamed:
            s.place_pebble(big_level, cp, pid=b.id)
            new = s.place_pebble(small_level, cp + big)
        else:
            new = s.place_pebble(big_level, cp)
            s.place_pebble(small_level, cp + big, pid=b.id)
        # the appendix placement: the displaced closing pebble takes the
        # white pebble's original slot (== the place right after its backer)
        s.place_pebble(d.level, old_b.start, pid=d.id)
        log.placed = (new.id, new.place)
        b_new = Place(b.level, cp if renamed else cp + big)
        log.moved.append((b.id, old_b, b_new))
        log.moved.append((d.id, old_d, Place(d.level, old_b.start)))
        log.branch = SHUFFLE_BLACK
    log.renamed = renamed
    return log


def delete_last(
    s: Situation, level: int, options: AllocatorOptions | None = None
) -> MoveLog:
    """Remove the rightmost pebble of ``level`` and repair the situation.

    The gap is repeatedly filled with the rightmost smallest pebble found
    to its right; each iteration pushes the gap rightward until nothing
    remains to its right or the candidate no longer fits.
    """
    options = options or _DEFAULTS
    if not 0 <= level <= s.n:
        raise RequestError(f"level {level} out of [0, {s.n}]")
    victim = s.rightmost_of_level(level)
    if victim is None:
        raise RequestError(f"no pebble of level {level}")
    log = MoveLog(DELETE_LEVEL, level=level)
    log.removed = victim.id
    log.removed_place = victim.place
    s.remove_pebble(victim.id)
    gap = victim.start

    first_seen: dict[int, Place] = {}
    last_seen: dict[int, Place] = {}
    order: list[int] = []

    def record(pid: int, old: Place, new: Place) -> None:
        if pid not in first_seen:
            first_seen[pid] = old
            order.append(pid)
        last_seen[pid] = new

    while True:
        x_level = s.smallest_level_right(gap)
        if x_level is None:
            log.branch = EXIT_END
            break
        x = 1 << x_level
        if gap % x or not s.block_free(x_level, gap):
            log.branch = EXIT_NO_FIT
            break
        mover = s.rightmost_of_level(x_level)
        assert mover is not None and mover.start > gap
        source = mover.start
        s.move_pebble(mover.id, gap)
        record(mover.id, Place(x_level, source), Place(x_level, gap))
        log.iterations += 1
        q = s.pebble_before(gap)
        if (
            not options.skip_delete_swap
            and q is not None
            and not s.is_black(q.id)
        ):
            w = s.pebble_before(q.start)
            if w is not None and w.level == x_level:
                # swap the filler with the white pebble it would trap
                if gap - q.start != x:
                    raise InvariantError("swap geometry broken; input invalid")
                q_start = q.start
                s.remove_pebble(q.id)
                s.move_pebble(mover.id, q_start)
                s.place_pebble(q.level, gap, pid=q.id)
                record(mover.id, Place(x_level, source), Place(x_level, q_start))
                record(q.id, Place(q.level, q_start), Place(q.level, gap))
                log.swaps += 1
        gap = source

    for pid in order:
        old = first_seen[pid]
        new = last_seen[pid]
        if old != new:
            log.moved.append((pid, old, new))
    return log


def delete_by_id(
    s: Situation, pid: int, options: AllocatorOptions | None = None
) -> MoveLog:
    """Delete a specific pebble via the delete-at-level reduction.

    The rightmost pebble of the same level is physically removed; if that
    was a different pebble, its code is handed over to the requested one,
    so the requested identity disappears without an extra reassignment.
    """
    pebble = s.pebble(pid)
    log = delete_last(s, pebble.level, options)
    log.kind = DELETE_ID
    if log.removed != pid:
        survivor = log.removed
        s.relabel_pebble(pid, survivor)
        log.relabel = (pid, survivor)
        log.removed = pid
    return log


def apply(
    s: Situation,
    request: Request,
    options: AllocatorOptions | None = None,
    validate_input: bool = False,
) -> MoveLog:
    """Dispatch one request; with ``validate_input`` reject invalid states."""
    if validate_input:
        violations = s.validate()
        if violations:
            raise RequestError(f"input situation invalid: {violations[0]}")
    if request.kind == INSERT:
        if request.level is None:
            raise RequestError("insert request without level")
        return insert(s, request.level, options)
    if request.kind == DELETE_LEVEL:
        if request.level is None:
            raise RequestError("delete request without level")
        return delete_last(s, request.level, options)
    if request.kind == DELETE_ID:
        if request.id is None:
            raise RequestError("delete-by-id request without id")
        return delete_by_id(s, request.id, options)
    raise RequestError(f"unknown request kind {request.kind!r}")
