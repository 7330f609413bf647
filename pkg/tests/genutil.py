"""Seeded random diagram generation for property and acceptance tests.

Diagrams are built from random visit sequences (each crossing visited twice
along the strands) with random over/under and chirality bits, keeping only
wirings that embed in the sphere.  Decorations (virtual crossings, bars,
punctures) are layered on afterwards.
"""

from __future__ import annotations

import random

from arrowpoly.diagram import Crossing, Diagram, Endpoint
from arrowpoly.errors import ArrowPolyError


def build_from_visits(seq, strand_splits, under_first, over_in3, category,
                      bars=None, puncture=None):
    """Wire a diagram from crossing-visit data.

    seq: visit sequence over crossings 0..n-1, each appearing twice.
    strand_splits: indices cutting the sequence into open strands.
    """
    n = (max(seq) + 1) if seq else 0
    bounds = [0, *strand_splits, len(seq)]
    strand_of = {}
    for s in range(len(bounds) - 1):
        for vi in range(bounds[s], bounds[s + 1]):
            strand_of[vi] = s

    def arc_in(vi):
        s = strand_of[vi]
        return f"s{s}a{vi - bounds[s]}"

    def arc_out(vi):
        s = strand_of[vi]
        return f"s{s}a{vi - bounds[s] + 1}"

    slots = {c: [None] * 4 for c in range(n)}
    seen = [0] * n
    for vi, c in enumerate(seq):
        first = seen[c] == 0
        seen[c] += 1
        a_in, a_out = arc_in(vi), arc_out(vi)
        if under_first[c] == first:
            slots[c][0], slots[c][2] = a_in, a_out
        elif over_in3[c]:
            slots[c][3], slots[c][1] = a_in, a_out
        else:
            slots[c][1], slots[c][3] = a_in, a_out
    crossings = {
        f"c{c}": Crossing(f"c{c}", "X", 1 if over_in3[c] else -1, tuple(slots[c]))
        for c in range(n)
    }
    endpoints = {}
    for s in range(len(bounds) - 1):
        length = bounds[s + 1] - bounds[s]
        endpoints[f"t{s}"] = Endpoint(f"t{s}", "tail", f"s{s}a0", f"k{s}")
        endpoints[f"h{s}"] = Endpoint(f"h{s}", "head", f"s{s}a{length}", f"k{s}")
    return Diagram(category, crossings, endpoints, bars, puncture)


def _random_visit_data(rng: random.Random, n: int, strands: int):
    seq = [c for c in range(n) for _ in range(2)]
    rng.shuffle(seq)
    # relabel by first appearance so crossing ids are canonical
    relabel, nxt = {}, 0
    for i, c in enumerate(seq):
        if c not in relabel:
            relabel[c] = nxt
            nxt += 1
        seq[i] = relabel[c]
    if strands > 1:
        splits = sorted(rng.sample(range(0, 2 * n + 1), strands - 1))
    else:
        splits = []
    uf = [rng.random() < 0.5 for _ in range(n)]
    o3 = [rng.random() < 0.5 for _ in range(n)]
    return seq, splits, uf, o3


def random_classical(rng: random.Random, n: int, category="spherical", strands=1,
                     max_tries=4000) -> Diagram:
    """A random valid classical diagram with n crossings."""
    for _ in range(max_tries):
        seq, splits, uf, o3 = _random_visit_data(rng, n, strands)
        try:
            d = build_from_visits(seq, splits, uf, o3, category)
        except ArrowPolyError:
            continue
        return d
    raise RuntimeError(f"no valid wiring found for n={n}")


def with_random_puncture(rng: random.Random, d: Diagram) -> Diagram:
    walk = rng.choice(d._face_data.walks)
    arc, fwd = rng.choice(walk)
    side = "right" if fwd else "left"
    return Diagram("planar", d.crossings, d.endpoints, d.bars, (arc, side),
                   d.orient_markers)


def random_diagram(rng: random.Random, category: str, n: int) -> Diagram:
    """A random valid diagram of the requested category with n crossings."""
    if category == "spherical":
        return random_classical(rng, n)
    if category == "planar":
        return with_random_puncture(rng, random_classical(rng, n))
    if category == "linkoid":
        # a crossing joins at most two strands, so connecting k strands
        # needs at least k-1 crossings; loop nesting needs a connected map
        strands = 2 if n < 2 else rng.choice([2, 3])
        for _ in range(400):
            d = random_classical(rng, n, "linkoid", strands=strands)
            if not d.crossings or d._count_map_components() == 1:
                return d
        raise RuntimeError("no connected linkoid wiring found")
    if category in ("virtual", "twisted"):
        base = random_classical(rng, n)
        crossings = dict(base.crossings)
        ids = sorted(crossings)
        n_virt = rng.randint(0, len(ids)) if ids else 0
        for cid in rng.sample(ids, n_virt):
            c = crossings[cid]
            crossings[cid] = Crossing(cid, "V", 0, c.slots)
        bars = {}
        if category == "twisted":
            arcs = sorted(base.arc_ends)
            for _ in range(rng.randint(0, 3)):
                a = rng.choice(arcs)
                bars.setdefault(a, []).append(len(bars.get(a, [])))
        try:
            return Diagram(category, crossings, base.endpoints,
                           {a: tuple(p) for a, p in bars.items()})
        except ArrowPolyError:
            return random_diagram(rng, category, n)
    raise ValueError(category)
