"""Decorated marked ribbon graphs and their subgraph-sum polynomials.

A vertex disk's boundary is a cyclic list of segments: attach slots (one per
incident edge end), free arcs carrying arrow/bar decorations, and at most one
marking that linearizes the cyclic order.  An edge is a band with two ends
and two long sides; a half-twist flag records how the sides connect the slot
corners.  Arrows live on free arcs, on edge ends (the attaching arcs), and on
edge sides; bars only on free arcs.

Decoration atoms: ``a+`` an arrow along the stored direction, ``a-`` against
it, ``bar``.  Stored directions: vertex cyclic order for segments and end
decorations, end0-corner to end1-corner for side decorations.

The boundary walk of a spanning subgraph traverses free arcs and inactive
slots along vertex boundaries and crosses active edges along their sides,
switching traversal direction over half-twists.  Boundary components through
a marking are cut there into arc components with endpoint roles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import poly
from .errors import (
    EdgeNotFound,
    RibbonGraphParseError,
    ValidationError,
    VariantDecorationMismatch,
)
from .errors import OddArrowLoopInClassical
from .poly import Polynomial
from .states import AGAINST, BAR, WITH, reduce_word as _reduce_word

A_FWD = "a+"
A_BWD = "a-"
DEC_BAR = "bar"

_ROLE = {"t": "tail", "h": "head"}


def reduce_word(word, **kwargs):
    """states.reduce_word, with parity violations reported as decoration
    mismatches: a boundary word of a hand-built graph may fall outside the
    reduced-component alphabet, which is a property of the input, not a bug."""
    try:
        return _reduce_word(word, **kwargs)
    except OddArrowLoopInClassical as exc:
        raise VariantDecorationMismatch(
            f"boundary word {word!r} has no reduced-component variable"
        ) from exc


def _tok(dec: str, forward: bool) -> str:
    if dec == DEC_BAR:
        return BAR
    if dec == A_FWD:
        return WITH if forward else AGAINST
    return AGAINST if forward else WITH


def _dec_of(token: str) -> str:
    return {WITH: A_FWD, AGAINST: A_BWD, BAR: DEC_BAR}[token]


def _decs(decs, forward: bool):
    return [_tok(d, forward) for d in (decs if forward else reversed(decs))]


# segments: ("slot", edge_id, end) | ("free", (dec, ...)) | ("mark", arrive, depart)


@dataclass(frozen=True)
class REdge:
    id: str
    sign: int = 1
    twist: bool = False
    weight: str | None = None
    end_dec: tuple[tuple[str, ...], tuple[str, ...]] = ((), ())
    side_dec: tuple[tuple[str, ...], tuple[str, ...]] = ((), ())

    @property
    def weight_name(self) -> str:
        return self.weight if self.weight is not None else self.id


class MarkedRibbonGraph:
    def __init__(self, vertices, edges, puncture=None, category=None):
        self.vertices = {v: tuple(tuple(s) if s[0] != "free" else ("free", tuple(s[1]))
                                  for s in segs)
                         for v, segs in vertices.items()}
        self.edges = dict(edges)
        self.puncture = puncture
        self.category = category
        self._validate()

    def _validate(self):
        self.slot_location: dict[tuple[str, int], tuple[str, int]] = {}
        for vid, segs in self.vertices.items():
            marks = 0
            for i, seg in enumerate(segs):
                if seg[0] == "slot":
                    _, eid, end = seg
                    if eid not in self.edges or end not in (0, 1):
                        raise ValidationError(f"slot for unknown edge end {eid}/{end}")
                    if (eid, end) in self.slot_location:
                        raise ValidationError(f"edge end {eid}/{end} attached twice")
                    self.slot_location[(eid, end)] = (vid, i)
                elif seg[0] == "free":
                    for d in seg[1]:
                        if d not in (A_FWD, A_BWD, DEC_BAR):
                            raise ValidationError(f"unknown decoration {d!r}")
                elif seg[0] == "mark":
                    # a partial dual can run one boundary circle through
                    # several markings, so vertices may carry more than one
                    marks += 1
                    if seg[1] not in "th" or seg[2] not in "th":
                        raise ValidationError(f"bad mark roles {seg[1:]}")
                else:
                    raise ValidationError(f"unknown segment kind {seg[0]!r}")
        for eid, e in self.edges.items():
            for end in (0, 1):
                if (eid, end) not in self.slot_location:
                    raise ValidationError(f"edge end {eid}/{end} is not attached")
            for decs in (*e.end_dec, *e.side_dec):
                for d in decs:
                    if d == DEC_BAR:
                        raise ValidationError("bars may only sit on vertex boundaries")
                    if d not in (A_FWD, A_BWD):
                        raise ValidationError(f"unknown decoration {d!r}")
        if self.puncture is not None:
            vid, idx, side = self.puncture
            if vid not in self.vertices or not (0 <= idx < len(self.vertices[vid])):
                raise ValidationError("puncture names a missing segment")
            if side not in ("left", "right"):
                raise ValidationError("puncture side must be left or right")

    # ------------------------------------------------------------------

    def edge_ids(self) -> list[str]:
        return sorted(self.edges)

    def marked_vertices(self) -> list[str]:
        return [v for v, segs in self.vertices.items()
                if any(s[0] == "mark" for s in segs)]

    def mark_count(self) -> int:
        return sum(1 for segs in self.vertices.values()
                   for s in segs if s[0] == "mark")

    def has_bars(self) -> bool:
        return any(d == DEC_BAR for segs in self.vertices.values()
                   for s in segs if s[0] == "free" for d in s[1])

    def component_count(self, subset: frozenset[str]) -> int:
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for eid in subset:
            v0 = self.slot_location[(eid, 0)][0]
            v1 = self.slot_location[(eid, 1)][0]
            r0, r1 = find(v0), find(v1)
            if r0 != r1:
                parent[r0] = r1
        return len({find(v) for v in self.vertices})


# ---------------------------------------------------------------------------
# side/corner tables


def _side_corners(edge: REdge, side: int):
    """The two (end, corner) points a side connects, (end0 corner first)."""
    c0 = (0, "a" if side == 0 else "b")
    if edge.twist:
        c1 = (1, "a" if side == 0 else "b")
    else:
        c1 = (1, "b" if side == 0 else "a")
    return c0, c1


def _enter_edge(edge: REdge, end: int, corner: str):
    for side in (0, 1):
        c0, c1 = _side_corners(edge, side)
        if (end, corner) == c0:
            return side, 1
        if (end, corner) == c1:
            return side, -1
    raise AssertionError("corner not on any side")


def _exit_corner(edge: REdge, side: int, sdir: int):
    c0, c1 = _side_corners(edge, side)
    return c1 if sdir == 1 else c0


# ---------------------------------------------------------------------------
# the boundary walk


@dataclass
class BoundaryPiece:
    kind: str  # "loop" | "arc"
    word: tuple[str, ...]
    end_roles: tuple[str, str] | None  # "tail"/"head" at traversal start/end
    footprints: tuple[tuple, ...]  # ("end", edge, end) | ("side", edge, side)


@dataclass
class SubgraphSummary:
    subset: frozenset
    k: int
    bc: int
    pieces: list[BoundaryPiece]
    bare_vertices: int


def _positions(graph: MarkedRibbonGraph, subset: frozenset):
    out = []
    for vid in graph.vertices:
        for i, seg in enumerate(graph.vertices[vid]):
            if seg[0] == "slot" and seg[1] in subset:
                continue
            out.append(("seg", vid, i, 1))
            out.append(("seg", vid, i, -1))
    for eid in sorted(subset):
        out.append(("side", eid, 0, 1))
        out.append(("side", eid, 0, -1))
        out.append(("side", eid, 1, 1))
        out.append(("side", eid, 1, -1))
    return out


def _succ(graph: MarkedRibbonGraph, subset: frozenset, pos):
    if pos[0] == "seg":
        _, vid, i, dr = pos
        segs = graph.vertices[vid]
        j = (i + dr) % len(segs)
        seg = segs[j]
        if seg[0] == "slot" and seg[1] in subset:
            side, sdir = _enter_edge(graph.edges[seg[1]], seg[2], "a" if dr == 1 else "b")
            return ("side", seg[1], side, sdir)
        return ("seg", vid, j, dr)
    _, eid, side, sdir = pos
    end, corner = _exit_corner(graph.edges[eid], side, sdir)
    vid, i = graph.slot_location[(eid, end)]
    segs = graph.vertices[vid]
    dr = 1 if corner == "b" else -1
    j = (i + dr) % len(segs)
    seg = segs[j]
    if seg[0] == "slot" and seg[1] in subset:
        side2, sdir2 = _enter_edge(graph.edges[seg[1]], seg[2], "a" if dr == 1 else "b")
        return ("side", seg[1], side2, sdir2)
    return ("seg", vid, j, dr)


def _rev(pos):
    return (*pos[:3], -pos[3])


def _orbit_events(graph: MarkedRibbonGraph, pos):
    """Events along one directed traversal step."""
    if pos[0] == "seg":
        _, vid, i, dr = pos
        seg = graph.vertices[vid][i]
        if seg[0] == "free":
            return [("foot", ("seg", vid, i))] + [("tok", t) for t in _decs(seg[1], dr == 1)]
        if seg[0] == "mark":
            if dr == 1:
                return [("mark", seg[1], seg[2], pos)]
            return [("mark", seg[2], seg[1], pos)]
        _, eid, end = seg
        ev = [("foot", ("end", eid, end))]
        ev += [("tok", t) for t in _decs(graph.edges[eid].end_dec[end], dr == 1)]
        return ev
    _, eid, side, sdir = pos
    ev = [("foot", ("side", eid, side))]
    ev += [("tok", t) for t in _decs(graph.edges[eid].side_dec[side], sdir == 1)]
    return ev


def boundary_components(graph: MarkedRibbonGraph, subset, cut_at_marks=True):
    """Boundary pieces of the spanning subgraph with the given edge subset."""
    subset = frozenset(subset)
    seen = set()
    pieces: list[BoundaryPiece] = []
    orbits: list[list] = []
    all_positions = sorted(_positions(graph, subset))
    bound = len(all_positions) + 1
    for start in all_positions:
        if start in seen:
            continue
        orbit = []
        pos = start
        while True:
            if len(orbit) > bound:
                raise AssertionError("boundary walk failed to close")
            orbit.append(pos)
            seen.add(pos)
            seen.add(_rev(pos))
            pos = _succ(graph, subset, pos)
            if pos == start:
                break
        orbits.append(orbit)
        events = []
        for p in orbit:
            events.extend(_orbit_events(graph, p))
        marks = [k for k, ev in enumerate(events) if ev[0] == "mark"]
        if not marks or not cut_at_marks:
            word = tuple(ev[1] for ev in events if ev[0] == "tok")
            feet = tuple(ev[1] for ev in events if ev[0] == "foot")
            pieces.append(BoundaryPiece("loop", word, None, feet))
            continue
        for a, b in zip(marks, marks[1:] + [marks[0]]):
            chunk = (events[a:] + events[:b + 1]) if b <= a else events[a:b + 1]
            start_role = chunk[0][2]
            end_role = chunk[-1][1]
            word = tuple(ev[1] for ev in chunk if ev[0] == "tok")
            feet = tuple(ev[1] for ev in chunk if ev[0] == "foot")
            pieces.append(
                BoundaryPiece("arc", word, (_ROLE[start_role], _ROLE[end_role]), feet)
            )
    return pieces, orbits


def boundary(graph: MarkedRibbonGraph, subset) -> SubgraphSummary:
    subset = frozenset(subset)
    unknown = subset - set(graph.edges)
    if unknown:
        raise EdgeNotFound(f"unknown edges {sorted(unknown)}")
    pieces, _ = boundary_components(graph, subset)
    bare = sum(1 for segs in graph.vertices.values() if not segs)
    return SubgraphSummary(
        subset=subset,
        k=graph.component_count(subset),
        bc=len(pieces) + bare,
        pieces=pieces,
        bare_vertices=bare,
    )


# ---------------------------------------------------------------------------
# subgraph-sum polynomials


def _subsets(graph: MarkedRibbonGraph):
    ids = graph.edge_ids()
    for mask in range(1 << len(ids)):
        yield frozenset(e for k, e in enumerate(ids) if (mask >> k) & 1)


def _base_term(graph: MarkedRibbonGraph, summary: SubgraphSummary) -> Polynomial:
    term = Polynomial.var(poly.VAR_a, summary.k)
    for eid in sorted(summary.subset):
        term = term * Polynomial.var(poly.edge_weight(graph.edges[eid].weight_name))
    return term


def Z_poly(graph: MarkedRibbonGraph) -> Polynomial:
    """Plain subgraph sum: a^k(F) (prod b_e) c^bc(F); decorations ignored."""
    total = Polynomial.zero()
    for subset in _subsets(graph):
        summary = boundary(graph, subset)
        total = total + _base_term(graph, summary) * Polynomial.var(poly.VAR_c, summary.bc)
    return total


def _arc_factor(label, primed_ok=True) -> Polynomial:
    if label.kind == "one":
        return poly.ONE
    if label.kind == "lam":
        return Polynomial.var(poly.lam(label.index, label.primed and primed_ok))
    if label.kind == "lamodd":
        var = poly.lam_tail if label.odd_type == "t" else poly.lam_head
        return Polynomial.var(var(label.index))
    raise ValidationError(f"unexpected arc label {label}")


def _require_marks(graph: MarkedRibbonGraph, count: int | None, variant: str):
    marks = graph.mark_count()
    if count is not None and marks != count:
        raise VariantDecorationMismatch(
            f"{variant} needs exactly {count} marking, found {marks}"
        )
    if count is None and not marks:
        raise VariantDecorationMismatch(f"{variant} needs at least one marking")


def R_poly(graph: MarkedRibbonGraph) -> Polynomial:
    """Arrow subgraph sum for single-marked graphs decorated with arrows."""
    _require_marks(graph, 1, "the arrow subgraph sum")
    if graph.has_bars():
        raise VariantDecorationMismatch("bars need the twisted subgraph sum")
    total = Polynomial.zero()
    for subset in _subsets(graph):
        summary = boundary(graph, subset)
        term = _base_term(graph, summary) * Polynomial.var(poly.VAR_c, summary.bc)
        for piece in summary.pieces:
            if piece.kind == "loop":
                label = reduce_word(piece.word, cyclic=True)
                if label.kind == "kcirc":
                    term = term * Polynomial.var(poly.K(label.index))
            else:
                label = reduce_word(piece.word, cyclic=False, end_roles=piece.end_roles)
                term = term * _arc_factor(label)
        total = total + term
    return total


def R_t_poly(graph: MarkedRibbonGraph) -> Polynomial:
    """Twisted variant: bars allowed, K_1/2 loops, primes collapsed."""
    _require_marks(graph, 1, "the twisted subgraph sum")
    total = Polynomial.zero()
    for subset in _subsets(graph):
        summary = boundary(graph, subset)
        term = _base_term(graph, summary) * Polynomial.var(poly.VAR_c, summary.bc)
        for piece in summary.pieces:
            if piece.kind == "loop":
                label = reduce_word(piece.word, cyclic=True, twisted=True)
                if label.kind == "kcirc":
                    term = term * Polynomial.var(poly.K(label.index))
                elif label.kind == "khalf":
                    term = term * Polynomial.var(poly.K_HALF)
            else:
                label = reduce_word(piece.word, cyclic=False, twisted=True,
                                    end_roles=piece.end_roles)
                term = term * _arc_factor(label, primed_ok=False)
        total = total + term
    return total


def R_l_poly(graph: MarkedRibbonGraph, realization=None) -> Polynomial:
    """Punctured variant: c^(bc - nesting) and a nested arc variable.

    The nesting of the marked boundary component is read off the planar
    realization of the subgraph boundary.  Graphs built from a diagram carry
    it; anything else must be recoverable into a diagram, otherwise the
    variant is rejected.
    """
    _require_marks(graph, 1, "the punctured subgraph sum")
    if graph.has_bars():
        raise VariantDecorationMismatch("bars have no punctured subgraph sum")
    if realization is None:
        from .thistlethwaite import realize_graph

        realization = realize_graph(graph, need_puncture=True)
    elif set(realization.graph.edges) != set(graph.edges):
        raise ValidationError("realization does not belong to this graph")
    graph = realization.graph  # gap-normalized twin with aligned coordinates
    total = Polynomial.zero()
    for subset in _subsets(graph):
        summary = boundary(graph, subset)
        ell = realization.arc_nesting(subset)
        term = _base_term(graph, summary) * Polynomial.var(poly.VAR_c, summary.bc - ell)
        for piece in summary.pieces:
            if piece.kind == "loop":
                label = reduce_word(piece.word, cyclic=True)
                if label.kind != "one":
                    raise VariantDecorationMismatch(
                        "punctured subgraph sum needs arrow-free circular boundaries"
                    )
            else:
                label = reduce_word(piece.word, cyclic=False, end_roles=piece.end_roles)
                if label.kind == "lamodd":
                    raise VariantDecorationMismatch("odd arc in a punctured subgraph sum")
                i = label.index if label.kind == "lam" else 0
                primed = label.kind == "lam" and label.primed
                if ell > 0:
                    term = term * Polynomial.var(poly.lam_loop(i, primed and i > 0, ell))
                elif i > 0:
                    term = term * Polynomial.var(poly.lam(i, primed))
        total = total + term
    return total


def R_m_poly(graph: MarkedRibbonGraph, realization=None) -> Polynomial:
    """Multi-marked variant with indexed loop variables K_i^l."""
    _require_marks(graph, None, "the multi-marked subgraph sum")
    if graph.has_bars():
        raise VariantDecorationMismatch("bars have no multi-marked subgraph sum")
    if realization is None:
        from .thistlethwaite import realize_graph

        realization = realize_graph(graph, need_puncture=False)
    elif set(realization.graph.edges) != set(graph.edges):
        raise ValidationError("realization does not belong to this graph")
    graph = realization.graph  # gap-normalized twin with aligned coordinates
    total = Polynomial.zero()
    for subset in _subsets(graph):
        summary = boundary(graph, subset)
        term = _base_term(graph, summary) * Polynomial.var(poly.VAR_c, summary.bc)
        for piece in summary.pieces:
            if piece.kind == "loop":
                label = reduce_word(piece.word, cyclic=True)
                idx = label.index if label.kind == "kcirc" else 0
                ell = realization.loop_index(subset, piece)
                if (idx, ell) != (0, 0):
                    term = term * Polynomial.var(poly.K_loop(idx, ell))
            else:
                label = reduce_word(piece.word, cyclic=False, end_roles=piece.end_roles)
                term = term * _arc_factor(label)
        total = total + term
    return total


VARIANT_POLYS = {
    "arrow": R_poly,
    "twisted": R_t_poly,
    "loop": R_l_poly,
    "linkoid": R_m_poly,
}


# ---------------------------------------------------------------------------
# deletion, contraction, partial duality


def _merge_frees(segs):
    out = []
    for seg in segs:
        if seg[0] == "free" and out and out[-1][0] == "free":
            out[-1] = ("free", out[-1][1] + seg[1])
        else:
            out.append(("free", tuple(seg[1])) if seg[0] == "free" else seg)
    if len(out) > 1 and out[0][0] == "free" and out[-1][0] == "free":
        out[0] = ("free", out[-1][1] + out[0][1])
        out.pop()
    return [s for s in out if s[0] != "free" or s[1] or len(out) == 1]


def delete(graph: MarkedRibbonGraph, eid: str) -> MarkedRibbonGraph:
    """Remove an edge; its attaching-arc arrows stay on the vertices."""
    if eid not in graph.edges:
        raise EdgeNotFound(eid)
    edge = graph.edges[eid]
    vertices = {}
    punct = graph.puncture
    for vid, segs in graph.vertices.items():
        new = []
        remap = {}
        for i, seg in enumerate(segs):
            if seg[0] == "slot" and seg[1] == eid:
                new.append(("free", tuple(edge.end_dec[seg[2]])))
            else:
                new.append(seg)
            remap[i] = len(new) - 1
        if punct is not None and punct[0] == vid:
            punct = (vid, remap[punct[1]], punct[2])
        vertices[vid] = new
    edges = {k: v for k, v in graph.edges.items() if k != eid}
    return MarkedRibbonGraph(vertices, edges, punct, graph.category)


def partial_dual(graph: MarkedRibbonGraph, subset) -> MarkedRibbonGraph:
    """Swap attaching arcs and long sides for every edge in the subset.

    The vertices of the dual are the boundary components of the spanning
    subgraph carrying exactly the subset; walking them reads off the new
    cyclic orders, decorations, markings, and half-twists.  Dualized edges
    flip their smoothing sign.
    """
    subset = frozenset(subset)
    unknown = subset - set(graph.edges)
    if unknown:
        raise EdgeNotFound(f"unknown edges {sorted(unknown)}")
    if not subset:
        return MarkedRibbonGraph(graph.vertices, graph.edges, graph.puncture,
                                 graph.category)
    _, orbits = boundary_components(graph, subset, cut_at_marks=False)

    vertices: dict[str, list] = {}
    slot_dir: dict[tuple[str, int], int] = {}  # walk direction over inactive slots
    side_dir: dict[tuple[str, int], int] = {}  # walk direction over active sides
    walk_dec: dict[tuple, tuple] = {}  # decorations re-expressed along the walk
    punct = None

    for orbit in orbits:
        vid = f"v{len(vertices)}"
        segs: list = []
        for pos in orbit:
            if pos[0] == "seg":
                _, old_v, i, dr = pos
                seg = graph.vertices[old_v][i]
                if seg[0] == "free":
                    decs = tuple(_dec_of(t) for t in _decs(seg[1], dr == 1))
                    segs.append(("free", decs))
                    if graph.puncture is not None and graph.puncture[:2] == (old_v, i):
                        side = graph.puncture[2]
                        if dr == -1:
                            side = "left" if side == "right" else "right"
                        punct = (vid, len(segs) - 1, side)
                elif seg[0] == "mark":
                    segs.append(seg if dr == 1 else ("mark", seg[2], seg[1]))
                else:
                    _, eid, end = seg
                    segs.append(("slot", eid, end))
                    slot_dir[(eid, end)] = dr
                    walk_dec[("end", eid, end)] = tuple(
                        _dec_of(t) for t in _decs(graph.edges[eid].end_dec[end], dr == 1)
                    )
            else:
                _, eid, side, sdir = pos
                segs.append(("slot", eid, side))  # old side index = new end index
                side_dir[(eid, side)] = sdir
                walk_dec[("side", eid, side)] = tuple(
                    _dec_of(t) for t in _decs(graph.edges[eid].side_dec[side], sdir == 1)
                )
        vertices[vid] = segs
    for old_v, segs in graph.vertices.items():
        if not segs:  # bare vertices are their own boundary circles
            vertices[f"v{len(vertices)}"] = []

    edges = {}
    for eid, edge in graph.edges.items():
        if eid not in subset:
            # slot orientations now follow the walk; a reversed end swaps its
            # corners, toggling the twist and (for end 0) the side indexing
            flip0 = slot_dir[(eid, 0)] == -1
            flip1 = slot_dir[(eid, 1)] == -1
            end_dec = (walk_dec[("end", eid, 0)], walk_dec[("end", eid, 1)])
            side_dec = (edge.side_dec[1], edge.side_dec[0]) if flip0 else edge.side_dec
            edges[eid] = REdge(eid, edge.sign, edge.twist != (flip0 != flip1),
                               edge.weight, end_dec, side_dec)
            continue
        # dualized edge: old side s becomes new end s, its walked stretch the
        # new slot; the old attach arcs become the new sides
        new_a = {}
        new_b = {}
        for s in (0, 1):
            c0, c1 = _side_corners(edge, s)
            new_a[s], new_b[s] = (c0, c1) if side_dir[(eid, s)] == 1 else (c1, c0)
        # new side index convention: side 0 is incident to new end 0's a-corner
        k0 = new_a[0][0]  # the old end whose attach arc carries new_a(0)
        other_corner = (k0, "b" if new_a[0][1] == "a" else "a")
        twist = other_corner == new_a[1]

        def reexpress(end_idx, start_corner):
            decs = edge.end_dec[end_idx]
            if start_corner == "a":
                return tuple(decs)
            return tuple(_dec_of(t) for t in _decs(decs, False))

        side0 = reexpress(k0, new_a[0][1])
        # new side 1 starts at new end 0's b-corner
        k1 = new_b[0][0]
        side1 = reexpress(k1, new_b[0][1])
        end_dec = (walk_dec[("side", eid, 0)], walk_dec[("side", eid, 1)])
        edges[eid] = REdge(eid, -edge.sign, twist, edge.weight, end_dec,
                           (side0, side1))
    return MarkedRibbonGraph(vertices, edges, punct, graph.category)


def contract(graph: MarkedRibbonGraph, eid: str) -> MarkedRibbonGraph:
    """Contract an edge: dualize it, then delete it."""
    if eid not in graph.edges:
        raise EdgeNotFound(eid)
    return delete(partial_dual(graph, {eid}), eid)


def edge_class(graph: MarkedRibbonGraph, eid: str) -> str:
    """'nonloop' | 'twisted_loop' | 'trivial_loop' | 'nontrivial_loop'."""
    v0 = graph.slot_location[(eid, 0)][0]
    v1 = graph.slot_location[(eid, 1)][0]
    if v0 != v1:
        return "nonloop"
    if graph.edges[eid].twist:
        return "twisted_loop"
    segs = graph.vertices[v0]
    i0 = graph.slot_location[(eid, 0)][1]
    i1 = graph.slot_location[(eid, 1)][1]
    lo, hi = min(i0, i1), max(i0, i1)
    inner = [segs[k] for k in range(lo + 1, hi)]
    outer = [segs[k] for k in list(range(hi + 1, len(segs))) + list(range(0, lo))]
    for stretch in (inner, outer):
        if not any(s[0] == "slot" for s in stretch):
            return "trivial_loop"
    return "nontrivial_loop"


def pointed_product(g1: MarkedRibbonGraph, g2: MarkedRibbonGraph) -> MarkedRibbonGraph:
    """Glue two single-marked graphs along their marked segments."""
    m1, = g1.marked_vertices()
    m2, = g2.marked_vertices()

    def renamed(g, tag):
        vs = {f"{tag}{v}": [
            ("slot", f"{tag}{s[1]}", s[2]) if s[0] == "slot" else s for s in segs
        ] for v, segs in g.vertices.items()}
        es = {f"{tag}{e}": REdge(f"{tag}{e}", d.sign, d.twist, f"{tag}{d.weight_name}",
                                 d.end_dec, d.side_dec)
              for e, d in g.edges.items()}
        return vs, es

    vs1, es1 = renamed(g1, "L")
    vs2, es2 = renamed(g2, "R")

    def rotate_to_mark(segs):
        k = next(i for i, s in enumerate(segs) if s[0] == "mark")
        return segs[k + 1:] + segs[:k]

    segs1 = rotate_to_mark(vs1.pop(f"L{m1}"))
    segs2 = rotate_to_mark(vs2.pop(f"R{m2}"))
    fused = [("mark", "h", "t")] + segs1 + segs2
    vertices = {**vs1, **vs2, "fused": fused}
    return MarkedRibbonGraph(vertices, {**es1, **es2})


# ---------------------------------------------------------------------------
# structural equality


def _gauge_views(graph: MarkedRibbonGraph, vid: str):
    """All (rotation, orientation) readings of one vertex boundary.

    A reversed reading is the usual local switch: segment order reverses,
    free decorations flip, mark roles swap, and every incident edge twist is
    implicitly toggled (the caller accounts for that).
    """
    segs = list(_merge_frees(list(graph.vertices[vid])))
    views = []
    m = len(segs)
    for flip in (False, True):
        base = segs if not flip else [_flip_seg(s) for s in reversed(segs)]
        for r in range(max(m, 1)):
            views.append((tuple(base[r:] + base[:r]), flip))
        if m == 0:
            views.append(((), flip))
    return views


def _flip_seg(seg):
    if seg[0] == "free":
        return ("free", tuple(_dec_of(t) for t in _decs(seg[1], False)))
    if seg[0] == "mark":
        return ("mark", seg[2], seg[1])
    return seg


def _seg_shape(seg):
    return seg[0] if seg[0] != "slot" else "slot"


def same_up_to_relabeling(g1: MarkedRibbonGraph, g2: MarkedRibbonGraph) -> bool:
    """Equality up to vertex/edge relabeling, rotations, end swaps, and local
    switches (reversing a vertex while toggling incident half-twists)."""
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return False
    if (g1.puncture is None) != (g2.puncture is None):
        return False
    verts1 = sorted(g1.vertices)
    verts2 = sorted(g2.vertices)
    segs1 = {v: _merge_frees(list(g1.vertices[v])) for v in verts1}

    def verify(v1, view, emap):
        mine = segs1[v1]
        if len(mine) != len(view):
            return False
        for s1, s2 in zip(mine, view):
            if _seg_shape(s1) != _seg_shape(s2):
                return False
            if s1[0] in ("free", "mark"):
                if s1 != s2:
                    return False
                continue
            e1, end1 = s1[1], s1[2]
            e2, end2 = s2[1], s2[2]
            swap = end1 != end2
            if e1 in emap:
                if emap[e1] != (e2, swap):
                    return False
            else:
                if g1.edges[e1].sign != g2.edges[e2].sign:
                    return False
                emap[e1] = (e2, swap)
        return True

    def solve(vmap, emap, used2, flips):
        if len(vmap) == len(verts1):
            for e1, (e2, swap) in emap.items():
                if not _edges_equal_under_gauge(g1.edges[e1], g2.edges[e2], swap,
                                                flips, g2):
                    return False
            return len(emap) == len(g1.edges)
        v1 = target = None
        for u1 in verts1:
            if u1 in vmap:
                continue
            for seg in segs1[u1]:
                if seg[0] == "slot" and seg[1] in emap:
                    e2, swap = emap[seg[1]]
                    target = g2.slot_location[(e2, seg[2] ^ swap)][0]
                    v1 = u1
                    break
            if v1:
                break
        if v1 is None:
            v1 = next(u for u in verts1 if u not in vmap)
            candidates = [w for w in verts2 if w not in used2]
        else:
            if target in used2:
                return False
            candidates = [target]
        for w2 in candidates:
            for view, flip in _gauge_views(g2, w2):
                emap2 = dict(emap)
                if not verify(v1, view, emap2):
                    continue
                vmap[v1] = w2
                used2.add(w2)
                flips[w2] = flip
                if solve(vmap, emap2, used2, flips):
                    return True
                del vmap[v1]
                used2.discard(w2)
                flips.pop(w2, None)
        return False

    if not verts1:
        return True
    return solve({}, {}, set(), {})


def _edges_equal_under_gauge(d1: REdge, d2: REdge, swap: bool, flips, g2) -> bool:
    v0 = g2.slot_location[(d2.id, 0)][0]
    v1 = g2.slot_location[(d2.id, 1)][0]
    f0, f1 = flips.get(v0, False), flips.get(v1, False)
    twist2 = d2.twist != (f0 != f1)
    end_dec2 = list(d2.end_dec)
    side_dec2 = list(d2.side_dec)
    for end in (0, 1):
        if flips.get(g2.slot_location[(d2.id, end)][0], False):
            end_dec2[end] = tuple(_dec_of(t) for t in _decs(end_dec2[end], False))
    if f0:
        side_dec2 = [side_dec2[1], side_dec2[0]]
    if swap:
        end_dec2 = [end_dec2[1], end_dec2[0]]
        # re-anchoring sides at the other end reverses their storage direction
        new0 = tuple(_dec_of(t) for t in _decs(side_dec2[0 if twist2 else 1], False))
        new1 = tuple(_dec_of(t) for t in _decs(side_dec2[1 if twist2 else 0], False))
        side_dec2 = [new0, new1]
    return (d1.sign == d2.sign and d1.twist == twist2
            and tuple(d1.end_dec) == tuple(end_dec2)
            and tuple(d1.side_dec) == tuple(side_dec2))


# ---------------------------------------------------------------------------
# serialization


def serialize(graph: MarkedRibbonGraph) -> str:
    lines = ["rgraph", f"category {graph.category or 'none'}"]
    for vid in graph.vertices:
        lines.append(f"vertex {vid}")
        for seg in graph.vertices[vid]:
            if seg[0] == "slot":
                lines.append(f"  slot {seg[1]} {seg[2]}")
            elif seg[0] == "free":
                lines.append("  free " + " ".join(seg[1]) if seg[1] else "  free")
            else:
                lines.append(f"  mark {seg[1]} {seg[2]}")
    for eid in sorted(graph.edges):
        e = graph.edges[eid]
        sign = "+" if e.sign > 0 else "-"
        lines.append(
            f"edge {eid} {sign} twist={1 if e.twist else 0} weight={e.weight_name}"
        )
        for tag, decs in (("end0", e.end_dec[0]), ("end1", e.end_dec[1]),
                          ("side0", e.side_dec[0]), ("side1", e.side_dec[1])):
            if decs:
                lines.append(f"  {tag} " + " ".join(decs))
    if graph.puncture:
        lines.append("puncture {} {} {}".format(*graph.puncture))
    return "\n".join(lines) + "\n"


def parse(text: str) -> MarkedRibbonGraph:
    vertices: dict[str, list] = {}
    edges: dict[str, REdge] = {}
    edge_raw: dict[str, dict] = {}
    puncture = None
    category = None
    cur_vertex = None
    cur_edge = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0]
        try:
            if kw == "rgraph":
                continue
            if kw == "category":
                category = None if parts[1] == "none" else parts[1]
            elif kw == "vertex":
                cur_vertex, cur_edge = parts[1], None
                if cur_vertex in vertices:
                    raise RibbonGraphParseError(f"line {lineno}: duplicate vertex")
                vertices[cur_vertex] = []
            elif kw == "slot":
                vertices[cur_vertex].append(("slot", parts[1], int(parts[2])))
            elif kw == "free":
                vertices[cur_vertex].append(("free", tuple(parts[1:])))
            elif kw == "mark":
                vertices[cur_vertex].append(("mark", parts[1], parts[2]))
            elif kw == "edge":
                cur_edge, cur_vertex = parts[1], None
                info = {"sign": 1 if parts[2] == "+" else -1}
                for p in parts[3:]:
                    key, _, val = p.partition("=")
                    if key == "twist":
                        info["twist"] = val == "1"
                    elif key == "weight":
                        info["weight"] = val
                edge_raw[cur_edge] = info
            elif kw in ("end0", "end1", "side0", "side1"):
                edge_raw[cur_edge][kw] = tuple(parts[1:])
            elif kw == "puncture":
                puncture = (parts[1], int(parts[2]), parts[3])
            else:
                raise RibbonGraphParseError(f"line {lineno}: unknown keyword {kw!r}")
        except (IndexError, ValueError, KeyError, TypeError) as exc:
            raise RibbonGraphParseError(f"line {lineno}: {exc}") from exc
    for eid, info in edge_raw.items():
        edges[eid] = REdge(
            eid,
            info.get("sign", 1),
            info.get("twist", False),
            info.get("weight"),
            (info.get("end0", ()), info.get("end1", ())),
            (info.get("side0", ()), info.get("side1", ())),
        )
    return MarkedRibbonGraph(vertices, edges, puncture, category)


def load(path) -> MarkedRibbonGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())
