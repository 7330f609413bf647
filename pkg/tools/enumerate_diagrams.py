"""Systematic enumeration of small knotoid diagrams.

Enumerates single-component knotoid diagrams with n classical crossings via
visit sequences (each crossing visited twice along the curve) together with
per-crossing over/under and chirality choices, keeping only wirings that
embed in the sphere.  Used to discover fixture diagrams matching known
target polynomials; test fixtures are frozen from its output.
"""

from __future__ import annotations

import itertools
import sys

sys.path.insert(0, "src")

from arrowpoly.diagram import Crossing, Diagram, Endpoint
from arrowpoly.errors import ArrowPolyError


def visit_sequences(n: int):
    """All sequences of 2n visits, crossings labeled by first appearance."""

    def rec(seq, counts):
        if len(seq) == 2 * n:
            yield tuple(seq)
            return
        used = len(counts)
        for c in range(min(used + 1, n + 1)):
            if c == used and used < n:
                yield from rec(seq + [c], counts + [1])
            elif c < used and counts[c] == 1:
                counts[c] += 1
                yield from rec(seq + [c], counts)
                counts[c] -= 1

    yield from rec([], [])


def build(seq, under_first, over_in3, category="spherical", bars=None, puncture=None):
    """Assemble a Diagram from a visit sequence and per-crossing choices.

    under_first[c]: the first visit to c passes under.
    over_in3[c]: the over-strand enters at slot 3 (positive crossing).
    Arc s runs from visit s-1's exit to visit s's entry; arc 0 starts at the
    tail, the last arc ends at the head.
    """
    n = max(seq) + 1
    slots = {c: [None] * 4 for c in range(n)}
    seen = [0] * n
    for visit_idx, c in enumerate(seq):
        first = seen[c] == 0
        seen[c] += 1
        a_in, a_out = f"a{visit_idx}", f"a{visit_idx + 1}"
        under = under_first[c] == first
        if under:
            slots[c][0], slots[c][2] = a_in, a_out
        elif over_in3[c]:
            slots[c][3], slots[c][1] = a_in, a_out
        else:
            slots[c][1], slots[c][3] = a_in, a_out
    crossings = {}
    for c in range(n):
        sign = 1 if over_in3[c] else -1
        crossings[f"c{c}"] = Crossing(f"c{c}", "X", sign, tuple(slots[c]))
    endpoints = {
        "t": Endpoint("t", "tail", "a0", "k0"),
        "h": Endpoint("h", "head", f"a{2 * n}", "k0"),
    }
    return Diagram(category, crossings, endpoints, bars, puncture)


def all_diagrams(n: int, category="spherical"):
    """Yield every valid n-crossing knotoid diagram of the given category."""
    for seq in visit_sequences(n):
        for uf in itertools.product([True, False], repeat=n):
            for o3 in itertools.product([True, False], repeat=n):
                try:
                    yield build(seq, uf, o3, category)
                except ArrowPolyError:
                    continue


if __name__ == "__main__":
    from arrowpoly import states

    for n in (1, 2):
        count = 0
        for d in all_diagrams(n):
            count += 1
        print(f"n={n}: {count} valid diagrams")
