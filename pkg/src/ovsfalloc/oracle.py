"""Brute-force oracles and exhaustive small-instance verification.

Everything here recomputes answers by plain scans over the pebble list,
independent of the indexed query structures, so oracle/implementation
disagreements surface as failures.  ``exhaustive_verify`` walks every
admissible request sequence up to a depth bound, re-checking after each
request: validity, every structural property of valid situations, the
insert reassignment bound, oracle agreement and the coin accounting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .allocator import (
    AllocatorOptions,
    DELETE_LEVEL,
    INSERT,
    Request,
    apply,
)
from .coins import CoinConfig, CoinLedger
from .model import AllocationError, Place, Situation

INSERT_BRANCHES = (
    "place-direct",
    "place-over-small",
    "rotate-pair",
    "shuffle-white",
    "shuffle-black",
)
DELETE_BRANCHES = ("delete-end-of-tree", "delete-no-fit")
COVERAGE_TARGETS = INSERT_BRANCHES + DELETE_BRANCHES + (
    "insert-renamed",
    "delete-swap",
    "delete-iteration",
)


# ----------------------------------------------------------------------
# scan-based oracles


def _occupancy(s: Situation) -> bytearray:
    occ = bytearray(s.leaves)
    for pebble in s.pebbles():
        for i in range(pebble.start, min(pebble.end, s.leaves)):
            occ[i] = 1
    return occ


def _scan_colors(s: Situation) -> list[bool]:
    """True = black, by position order: no strictly bigger pebble earlier."""
    out = []
    biggest = -1
    for pebble in s.pebbles():
        out.append(biggest <= pebble.level)
        biggest = max(biggest, pebble.level)
    return out


def canput_oracle(s: Situation, level: int) -> bool:
    """Exhaustive scan: does any aligned free place of ``level`` exist?"""
    return scan_first_free_place(s, level) is not None


def scan_first_free_place(s: Situation, level: int) -> Place | None:
    size = 1 << level
    if size > s.leaves:
        return None
    occ = _occupancy(s)
    for start in range(0, s.leaves, size):
        if not any(occ[start : start + size]):
            return Place(level, start)
    return None


def scan_free_before(s: Situation, pos: int) -> int:
    occ = _occupancy(s)
    return sum(1 for i in range(pos) if not occ[i])


def scan_closing_position(s: Situation, level: int) -> int | None:
    last_black = None
    biggest = -1
    first_bigger = None
    for pebble in s.pebbles():
        if pebble.level == level and biggest <= level:
            last_black = pebble.start + pebble.size
        if pebble.level > level and first_bigger is None:
            first_bigger = pebble.start
        biggest = max(biggest, pebble.level)
    if last_black is not None:
        return last_black
    return first_bigger


# ----------------------------------------------------------------------
# structural properties of valid situations


def structural_failures(s: Situation, check_agreement: bool = True) -> list[str]:
    """Check every structural property a valid situation must satisfy.

    Assumes ``s.validate()`` already came back empty; returns human-
    readable descriptions of any failed property.
    """
    out: list[str] = []
    pebs = list(s.pebbles())
    colors = _scan_colors(s)
    occ = _occupancy(s)
    leaves = s.leaves

    if pebs and pebs[0].start != 0:
        out.append(f"first pebble at {pebs[0].start}, not 0")

    last_black = -1
    for pebble, black in zip(pebs, colors):
        if black:
            if pebble.level < last_black:
                out.append(f"black sizes decrease at {pebble.place}")
            last_black = max(last_black, pebble.level)
    last_white = -1
    for pebble, black in zip(pebs, colors):
        if not black:
            if pebble.level <= last_white:
                out.append(f"white sizes not strictly increasing at {pebble.place}")
            last_white = pebble.level

    for level in range(s.n + 1):
        slots = [p.start for p, b in zip(pebs, colors) if b and p.level == level]
        size = 1 << level
        for a, b in zip(slots, slots[1:]):
            if b != a + size:
                out.append(f"black level-{level} pebbles not contiguous: {a}, {b}")

    for i, (pebble, black) in enumerate(zip(pebs, colors)):
        nxt = pebs[i + 1] if i + 1 < len(pebs) else None
        gap = (nxt.start if nxt else leaves) - pebble.end
        if gap > 0 and gap < pebble.size:
            out.append(f"gap {gap} after {pebble.place} smaller than the pebble")
        if not black:
            if i == 0:
                out.append(f"white pebble {pebble.place} with no left neighbor")
                continue
            left = pebs[i - 1]
            if not colors[i - 1]:
                out.append(f"white pebble {pebble.place} behind a white neighbor")
            if left.level <= pebble.level:
                out.append(f"white pebble {pebble.place} not behind a bigger pebble")
            if left.end != pebble.start:
                out.append(f"free space between {left.place} and white {pebble.place}")
            if gap < left.size - pebble.size:
                out.append(
                    f"white {pebble.place}: trailing gap {gap} < "
                    f"{left.size - pebble.size}"
                )
            # no other white pebble may have a size in [a, b)
            for other, ob in zip(pebs, colors):
                if other is pebble or ob:
                    continue
                if pebble.level <= other.level and other.size < left.size:
                    out.append(
                        f"white {other.place} inside the size window of "
                        f"{pebble.place}"
                    )
            # everything between the doubled-size closing position and the
            # backing black pebble is solidly covered, with no white starts
            if pebble.level + 1 <= s.n:
                j = scan_closing_position(s, pebble.level + 1)
                if j is not None and j < left.start:
                    if any(not occ[q] for q in range(j, left.start)):
                        out.append(
                            f"free leaf between {j} and {left.start} "
                            f"(window of white {pebble.place})"
                        )
                    for other, ob in zip(pebs, colors):
                        if not ob and j <= other.start < left.start:
                            out.append(
                                f"white {other.place} starts inside "
                                f"[{j}, {left.start})"
                            )
        if gap > 0 and nxt is not None and not colors[i + 1]:
            # a pebble right after free space must be black
            out.append(f"white pebble {nxt.place} right after free space")

    free_total = s.total_free_bandwidth()
    for level in range(s.n + 1):
        place = scan_first_free_place(s, level)
        if free_total >= (1 << level) and place is None:
            out.append(f"bandwidth {free_total} fits level {level} but no free place")
        if place is not None:
            if scan_free_before(s, place.start) >= place.size:
                out.append(f"free bandwidth before first free {place} >= its size")
            idx = next(
                (i for i, p in enumerate(pebs) if p.start > place.start), None
            )
            if idx is not None:
                nxt = pebs[idx]
                if not colors[idx] or nxt.size <= place.size:
                    out.append(
                        f"right neighbor {nxt.place} of first free {place} "
                        "not a bigger black pebble"
                    )

    if pebs:
        trimmed = s.copy()
        trimmed.remove_pebble(pebs[-1].id)
        if trimmed.validate():
            out.append("removing the last pebble broke validity")

    if check_agreement:
        for pebble, black in zip(pebs, colors):
            if s.is_black(pebble.id) != black:
                out.append(f"color disagreement at {pebble.place}")
        for level in range(s.n + 1):
            if s.first_free_place(level) != scan_first_free_place(s, level):
                out.append(f"first_free_place disagreement at level {level}")
            if s.closing_position(level) != scan_closing_position(s, level):
                out.append(f"closing_position disagreement at level {level}")
        for pos in range(0, leaves + 1, max(1, leaves // 8)):
            if s.free_bandwidth_before(pos) != scan_free_before(s, pos):
                out.append(f"free_bandwidth_before disagreement at {pos}")
    return out


# ----------------------------------------------------------------------
# exhaustive verification


@dataclass(slots=True)
class VerifyFailure:
    trace: tuple[str, ...]
    stage: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.stage}] after {' '.join(self.trace) or '<empty>'}: {self.detail}"


@dataclass(slots=True)
class VerifyReport:
    n: int
    depth: int
    ok: bool = True
    states: int = 0
    transitions: int = 0
    max_insert_moves: int = 0
    max_injected: int = 0
    coverage: dict[str, int] = field(default_factory=dict)
    failures: list[VerifyFailure] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def missing_coverage(self) -> list[str]:
        return [k for k in COVERAGE_TARGETS if not self.coverage.get(k)]

    def summary(self) -> str:
        lines = [
            f"verify n={self.n} depth={self.depth}: "
            f"{'PASS' if self.ok else 'FAIL'}",
            f"states={self.states} transitions={self.transitions} "
            f"max_insert_moves={self.max_insert_moves} "
            f"max_injected={self.max_injected} time={self.seconds:.2f}s",
        ]
        covered = " ".join(
            f"{k}={self.coverage.get(k, 0)}" for k in COVERAGE_TARGETS
        )
        lines.append(f"coverage: {covered}")
        lines.extend(f"note: {n}" for n in self.notes)
        lines.extend(f"failure: {f}" for f in self.failures[:5])
        return "\n".join(lines)


def _rebuild(n: int, key, config: CoinConfig):
    pairs, coin_items = key
    s = Situation(n)
    for start, level in pairs:
        s.place_pebble(level, start)
    ledger = CoinLedger(s, config)
    ledger.load_coins({Place(lv, st): c for st, lv, c in coin_items})
    return s, ledger


def _ledger_key(ledger: CoinLedger):
    return tuple(
        sorted((p.start, p.level, c) for p, c in ledger.coins.items() if c)
    )


def _admissible(s: Situation):
    free = s.total_free_bandwidth()
    for level in range(s.n + 1):
        if (1 << level) <= free:
            yield Request(INSERT, level=level), f"I{level}"
    for level in range(s.n + 1):
        if s.level_count(level):
            yield Request(DELETE_LEVEL, level=level), f"D{level}"


def exhaustive_verify(
    n: int,
    depth: int,
    options: AllocatorOptions | None = None,
    config: CoinConfig | None = None,
    require_coverage: bool | None = None,
    max_depth_extension: int = 2,
) -> VerifyReport:
    """BFS over all admissible request sequences, checking every state.

    Deduplicates on (pebble set, coin assignment); each distinct edge is
    checked exactly once.  Stops at the first failure and reports the
    request sequence leading to it.  If some algorithm branch was never
    exercised, the depth is extended (by at most ``max_depth_extension``)
    and the walk rerun.

    ``require_coverage=None`` enforces full branch coverage exactly when
    the bounds can reach every branch (height >= 4 and depth >= 6);
    smaller instances then pass without hitting the deep branches.
    """
    config = config or CoinConfig()
    if require_coverage is None:
        require_coverage = n >= 4 and depth >= 6
    current_depth = depth
    while True:
        report = VerifyReport(n=n, depth=current_depth)
        _walk(n, current_depth, options, config, report)
        if (
            report.ok
            and require_coverage
            and report.missing_coverage()
            and current_depth < depth + max_depth_extension
        ):
            report.notes.append(
                f"branches {report.missing_coverage()} unhit at depth "
                f"{current_depth}; extending"
            )
            current_depth += 1
            continue
        if report.ok and require_coverage and report.missing_coverage():
            report.ok = False
            report.failures.append(
                VerifyFailure(
                    (), "coverage", f"unhit branches: {report.missing_coverage()}"
                )
            )
        return report


def _walk(n, depth, options, config, report: VerifyReport) -> None:
    t0 = time.perf_counter()
    root = ((), ())
    seen = {root}
    parents: dict = {root: None}
    frontier = [root]

    def trace_of(key, token=None) -> tuple[str, ...]:
        toks: list[str] = [] if token is None else [token]
        while parents[key] is not None:
            key, tok = parents[key]
            toks.append(tok)
        return tuple(reversed(toks))

    def fail(key, token, stage, detail) -> None:
        report.ok = False
        report.failures.append(VerifyFailure(trace_of(key, token), stage, detail))

    for _ in range(depth):
        if not report.ok:
            break
        nxt = []
        for key in frontier:
            if not report.ok:
                break
            base_s, base_ledger = _rebuild(n, key, config)
            for request, token in _admissible(base_s):
                s = base_s.copy()
                ledger = base_ledger.copy()
                try:
                    log = apply(s, request, options)
                except AllocationError as exc:
                    fail(key, token, "exception", f"{type(exc).__name__}: {exc}")
                    break
                report.transitions += 1
                report.coverage[log.branch] = report.coverage.get(log.branch, 0) + 1
                if log.renamed:
                    report.coverage["insert-renamed"] = (
                        report.coverage.get("insert-renamed", 0) + 1
                    )
                if log.swaps:
                    report.coverage["delete-swap"] = (
                        report.coverage.get("delete-swap", 0) + log.swaps
                    )
                if log.iterations:
                    report.coverage["delete-iteration"] = (
                        report.coverage.get("delete-iteration", 0) + 1
                    )
                if log.kind == INSERT:
                    moves = len(log.moved)
                    report.max_insert_moves = max(report.max_insert_moves, moves)
                    if moves > 3:
                        fail(key, token, "insert-bound", f"{moves} reassignments")
                        break
                violations = s.validate()
                if violations:
                    fail(key, token, "validate", "; ".join(map(str, violations[:3])))
                    break
                problems = structural_failures(s)
                if problems:
                    fail(key, token, "structure", "; ".join(problems[:3]))
                    break
                try:
                    info = ledger.settle(s, log)
                    ledger.balance_check()
                except AllocationError as exc:
                    fail(key, token, "coins", f"{type(exc).__name__}: {exc}")
                    break
                report.max_injected = max(report.max_injected, info.injected)
                if info.findings:
                    note = f"after {' '.join(trace_of(key, token))}: {info.findings}"
                    if note not in report.notes:
                        report.notes.append(note)
                p4 = ledger.audit(s)
                if p4:
                    fail(key, token, "audit", "; ".join(map(str, p4[:3])))
                    break
                key2 = (s.to_pairs(), _ledger_key(ledger))
                if key2 not in seen:
                    seen.add(key2)
                    parents[key2] = (key, token)
                    nxt.append(key2)
        frontier = nxt
    report.states = len(seen)
    report.seconds = time.perf_counter() - t0
