"""Text diagram of a pebble sequence.

Each pebble prints as a bracketed run of its color letter, one letter per
leaf position it covers; free leaves print as dots.  The output is stable
and injective up to this format: sizes, order, colors and gaps are all
recoverable.

``{4@0, 1@4}`` at height 3 renders as ``[BBBB][W]...``.
"""

from __future__ import annotations

from .model import Situation


def render(s: Situation) -> str:
    parts: list[str] = []
    cursor = 0
    running_max = 0
    for pebble in s.pebbles():
        parts.append("." * (pebble.start - cursor))
        letter = "B" if running_max <= pebble.level + 1 else "W"
        parts.append("[" + letter * pebble.size + "]")
        running_max = max(running_max, pebble.level + 1)
        cursor = pebble.end
    parts.append("." * (s.leaves - cursor))
    return "".join(parts)
