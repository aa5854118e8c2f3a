"""Trace replay through either allocator, with validation and coin audit.

The replay engine owns the checking policy: by default it re-validates the
situation after every request and, for the main allocator, settles the
coin ledger per request and audits P4.  Big benchmark runs can disable
per-step validation and thin out audits; the final state is always
audited.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import baseline as bl
from .allocator import (
    AllocatorOptions,
    DELETE_ID,
    DELETE_LEVEL,
    INSERT,
    MoveLog,
    apply,
)
from .coins import CoinConfig, CoinLedger
from .model import AllocationError, Situation
from .workloads import Trace

PAPER = "paper"
BASELINE = "baseline"


class ReplayError(Exception):
    def __init__(self, index: int, message: str):
        super().__init__(f"request {index}: {message}")
        self.index = index


@dataclass(slots=True)
class RunStats:
    """Aggregate statistics of one replay."""

    m: int = 0
    total_moves: int = 0
    max_moves: int = 0
    max_insert_moves: int = 0
    total_delete_iterations: int = 0
    relabels: int = 0
    max_injected: int = 0
    total_injected: int = 0
    total_consumed: int = 0
    p4_failures: int = 0
    budget_findings: int = 0
    wall_time_ms: float = 0.0

    @property
    def mean_moves(self) -> float:
        return self.total_moves / self.m if self.m else 0.0

    def stat_lines(self) -> list[str]:
        """Deterministic machine-readable lines (wall time excluded)."""
        return [
            f"stat.m={self.m}",
            f"stat.total_moves={self.total_moves}",
            f"stat.mean_moves={self.mean_moves:.6f}",
            f"stat.max_moves={self.max_moves}",
            f"stat.max_insert_moves={self.max_insert_moves}",
            f"stat.total_delete_iterations={self.total_delete_iterations}",
            f"stat.relabels={self.relabels}",
            f"stat.max_coins_injected={self.max_injected}",
            f"stat.total_coins_injected={self.total_injected}",
            f"stat.total_coins_consumed={self.total_consumed}",
            f"stat.p4_failures={self.p4_failures}",
            f"stat.budget_findings={self.budget_findings}",
        ]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "total_moves": self.total_moves,
            "mean_moves": round(self.mean_moves, 6),
            "max_moves": self.max_moves,
            "max_insert_moves": self.max_insert_moves,
            "total_delete_iterations": self.total_delete_iterations,
            "relabels": self.relabels,
            "max_coins_injected": self.max_injected,
            "total_coins_injected": self.total_injected,
            "total_coins_consumed": self.total_consumed,
            "p4_failures": self.p4_failures,
            "budget_findings": self.budget_findings,
        }


@dataclass(slots=True)
class ReplayResult:
    stats: RunStats
    situation: Situation
    ledger: CoinLedger | None
    request_lines: list[str] = field(default_factory=list)


def replay(
    trace: Trace,
    allocator: str = PAPER,
    validate_each: bool = True,
    audit: bool = True,
    audit_every: int = 1,
    count_relabel: bool = False,
    coin_config: CoinConfig | None = None,
    options: AllocatorOptions | None = None,
    collect_logs: bool = False,
    log_format: str = "text",
) -> ReplayResult:
    """Replay ``trace`` from the empty situation; raise on any failure.

    ``audit_every=k`` runs the full independent P4 audit every k-th
    request (settlement still happens on every request); the final state
    is always audited.
    """
    if allocator not in (PAPER, BASELINE):
        raise ValueError(f"unknown allocator {allocator!r}")
    t0 = time.perf_counter()
    s = Situation(trace.n)
    use_coins = audit and allocator == PAPER
    ledger = CoinLedger(s, coin_config) if use_coins else None
    stats = RunStats()
    lines: list[str] = []

    for index, request in enumerate(trace.requests, start=1):
        try:
            log = _dispatch(s, request, allocator, options)
        except AllocationError as exc:
            raise ReplayError(index, f"{type(exc).__name__}: {exc}") from exc
        stats.m += 1
        cost = log.cost(count_relabel)
        stats.total_moves += cost
        stats.max_moves = max(stats.max_moves, cost)
        if log.kind == INSERT:
            stats.max_insert_moves = max(stats.max_insert_moves, len(log.moved))
        stats.total_delete_iterations += log.iterations
        if log.relabel is not None:
            stats.relabels += 1
        if validate_each:
            violations = s.validate()
            if violations:
                raise ReplayError(index, f"invariant broken: {violations[0]}")
        p4_ok = True
        if ledger is not None:
            info = ledger.settle(s, log)
            stats.total_injected += info.injected
            stats.total_consumed += info.consumed
            stats.max_injected = max(stats.max_injected, info.injected)
            stats.budget_findings += len(info.findings)
            if index % audit_every == 0 or index == len(trace.requests):
                failures = ledger.audit(s)
                if failures:
                    stats.p4_failures += len(failures)
                    p4_ok = False
        if collect_logs:
            if log_format == "jsonl":
                entry = {
                    "req": index,
                    "op": log.op_token(),
                    "placed": f"{log.placed[0]}:{log.placed[1]}" if log.placed else None,
                    "moved": [f"{pid}:{old}->{new}" for pid, old, new in log.moved],
                    "removed": log.removed,
                    "iters": log.iterations,
                }
                if ledger is not None:
                    entry["coins"] = {
                        "injected": ledger.injected_last,
                        "consumed": ledger.consumed_last,
                        "balance": ledger.balance(),
                        "p4": "ok" if p4_ok else "fail",
                    }
                lines.append(json.dumps(entry, sort_keys=True))
            else:
                lines.append(log.serialize(index))
                if ledger is not None:
                    lines.append(ledger.report_line(p4_ok))
        if ledger is not None and not p4_ok:
            raise ReplayError(index, "P4 audit failed")

    if not validate_each:
        violations = s.validate()
        if violations:
            raise ReplayError(len(trace.requests), f"final state invalid: {violations[0]}")
    if ledger is not None:
        ledger.balance_check()
    stats.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return ReplayResult(stats, s, ledger, lines)


def _dispatch(s, request, allocator, options) -> MoveLog:
    if allocator == PAPER:
        return apply(s, request, options)
    if request.kind == INSERT:
        return bl.baseline_insert(s, request.level)
    if request.kind == DELETE_LEVEL:
        return bl.baseline_delete(s, request.level)
    if request.kind == DELETE_ID:
        return bl.baseline_delete_by_id(s, request.id)
    raise AllocationError(f"unknown request kind {request.kind!r}")
