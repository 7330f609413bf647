"""Local Reidemeister-style rewrites and a seeded perturbation generator.

Classical moves R1, R2, R3; virtual moves V1, V2, V3 and the mixed slide MV;
endpoint slides V0 (across a strand, through a fresh virtual crossing) and T0
(across a bar); bar moves T1 (a bar pair slides through a virtual crossing),
T2 (an adjacent bar pair cancels), and T3 (a bar pair slides through a
classical crossing along its strand).  Endpoints never move across classical
crossings.

Where a rewrite admits mirror wirings, the candidates are tried in a fixed
order and the first one that yields a valid spherical diagram is kept; an
illegal anchor surfaces as PatternMismatch instead of a corrupt diagram.
Since bars on one arc are interchangeable marks, bar moves reduce to moving
counts between arcs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .diagram import Crossing, Diagram, Endpoint, LINKOID, PLANAR, SPHERICAL, TWISTED, VIRTUAL
from .errors import (
    ArrowPolyError,
    ForbiddenMove,
    IllegalForCategory,
    PatternMismatch,
)

CLASSICAL_MOVES = ("R1", "R2", "R3")
VIRTUAL_MOVES = ("V1", "V2", "V3", "MV", "V0")
TWISTED_MOVES = ("T0", "T1", "T2", "T3")

MOVES_FOR = {
    SPHERICAL: CLASSICAL_MOVES,
    PLANAR: CLASSICAL_MOVES,
    LINKOID: CLASSICAL_MOVES,
    VIRTUAL: CLASSICAL_MOVES + VIRTUAL_MOVES,
    TWISTED: CLASSICAL_MOVES + VIRTUAL_MOVES + TWISTED_MOVES,
}


@dataclass(frozen=True)
class MoveSite:
    move: str
    params: tuple
    unapply: bool = False


def _fresh(prefix: str, taken) -> str:
    i = 0
    while f"{prefix}{i}" in taken:
        i += 1
    return f"{prefix}{i}"


class _Editor:
    """Mutable copy of a diagram's raw structure."""

    def __init__(self, d: Diagram):
        self.category = d.category
        self.crossings = dict(d.crossings)
        self.endpoints = dict(d.endpoints)
        self.bars = {a: len(ps) for a, ps in d.bars.items()}
        self.puncture = d.puncture
        self.markers = list(d.orient_markers)
        self._arc_names = set(d.arc_ends)

    def new_arc(self) -> str:
        name = _fresh("m", self._arc_names)
        self._arc_names.add(name)
        return name

    def new_node(self) -> str:
        name = _fresh("n", set(self.crossings) | set(self.endpoints))
        self.crossings[name] = Crossing(name, "V", 0, ("", "", "", ""))
        return name

    def set_crossing(self, node, kind, sign, slots):
        self.crossings[node] = Crossing(node, kind, sign, tuple(slots))

    def move_bars(self, src: str, dst: str, count: int) -> None:
        have = self.bars.get(src, 0)
        if have < count:
            raise PatternMismatch(f"arc {src!r} carries {have} bars, need {count}")
        self.bars[src] = have - count
        self.bars[dst] = self.bars.get(dst, 0) + count

    def rename_arc_everywhere(self, old: str, new: str):
        for cid, c in list(self.crossings.items()):
            if old in c.slots:
                self.crossings[cid] = Crossing(
                    c.id, c.kind, c.sign, tuple(new if a == old else a for a in c.slots)
                )
        for eid, e in list(self.endpoints.items()):
            if e.arc == old:
                self.endpoints[eid] = Endpoint(eid, e.role, new, e.component)
        if old in self.bars:
            self.bars[new] = self.bars.get(new, 0) + self.bars.pop(old)
        if self.puncture and self.puncture[0] == old:
            self.puncture = (new, self.puncture[1])
        self.markers = [(new if a == old else a, n, s) for a, n, s in self.markers]

    def build(self) -> Diagram:
        return Diagram(
            self.category,
            self.crossings,
            self.endpoints,
            {a: tuple(range(n)) for a, n in self.bars.items() if n},
            self.puncture,
            tuple(self.markers),
        )

    def try_build(self) -> Diagram | None:
        try:
            return self.build()
        except ArrowPolyError:
            return None


def _split_arc(ed: _Editor, d: Diagram, arc: str, pieces: int) -> list[str]:
    """Replace one arc with fresh names from its tail end onward.

    Bars and a puncture anchor ride on the first piece, an orientation
    marker on the last; the caller wires the new interior.
    """
    names = [ed.new_arc() for _ in range(pieces)]
    src, dst = d.arc_dir[arc]
    for node, slot in (src, dst):
        repl = names[0] if (node, slot) == src else names[-1]
        if node in ed.endpoints:
            e = ed.endpoints[node]
            ed.endpoints[node] = Endpoint(node, e.role, repl, e.component)
        else:
            c = ed.crossings[node]
            slots = list(c.slots)
            slots[slot] = repl
            ed.set_crossing(node, c.kind, c.sign, slots)
    if arc in ed.bars:
        ed.bars[names[0]] = ed.bars.pop(arc)
    if ed.puncture and ed.puncture[0] == arc:
        ed.puncture = (names[0], ed.puncture[1])
    ed.markers = [(names[-1] if a == arc else a, n, s) for a, n, s in ed.markers]
    return names


def _forced_slots(under: tuple[str, str], over: tuple[str, str], sign: int):
    """Slot tuple from strand arcs: under (in, out), over (in, out)."""
    u_in, u_out = under
    o_in, o_out = over
    return (u_in, o_out, u_out, o_in) if sign > 0 else (u_in, o_in, u_out, o_out)


# ---------------------------------------------------------------------------
# R1 / V1 kinks


_KINK_MENU = {
    ("r", -1): lambda a1, a2, m: (a1, m, m, a2),
    ("r", 1): lambda a1, a2, m: (a1, a2, m, m),
    ("l", -1): lambda a1, a2, m: (m, a1, m, a2),
    ("l", 1): lambda a1, a2, m: (m, a2, m, a1),
}


def _kink_apply(d: Diagram, arc: str, side: str, sign: int, virtual: bool) -> Diagram:
    if arc not in d.arc_ends:
        raise PatternMismatch(f"no arc {arc!r}")
    wiring = _KINK_MENU.get((side, sign))
    if wiring is None:
        raise PatternMismatch(f"bad kink parameters {side!r}/{sign:+d}")
    ed = _Editor(d)
    a1, a2 = _split_arc(ed, d, arc, 2)
    m = ed.new_arc()
    k = ed.new_node()
    ed.set_crossing(k, "V" if virtual else "X", 0 if virtual else sign,
                    wiring(a1, a2, m))
    out = ed.try_build()
    if out is None:
        raise PatternMismatch("kink insertion failed to validate")
    return out


def _kink_unapply_sites(d: Diagram, virtual: bool) -> list[MoveSite]:
    out = []
    kind = "V" if virtual else "X"
    for cid in sorted(d.crossings):
        c = d.crossings[cid]
        if c.kind != kind:
            continue
        for arc in set(c.slots):
            if c.slots.count(arc) == 2 and not d.bars.get(arc) \
                    and not any(a == arc for a, _, _ in d.orient_markers):
                outer = [a for a in c.slots if a != arc]
                if len(outer) == 2 and outer[0] != outer[1]:
                    out.append(MoveSite("V1" if virtual else "R1", (cid,), True))
                    break
    return out


def _kink_unapply(d: Diagram, cid: str, virtual: bool) -> Diagram:
    c = d.crossings.get(cid)
    if c is None or c.kind != ("V" if virtual else "X"):
        raise PatternMismatch(f"no matching crossing {cid!r}")
    loops = [a for a in set(c.slots) if c.slots.count(a) == 2]
    if not loops:
        raise PatternMismatch(f"crossing {cid!r} carries no kink")
    m = loops[0]
    if d.bars.get(m) or any(a == m for a, _, _ in d.orient_markers):
        raise PatternMismatch("kink loop is decorated")
    outer = [a for a in c.slots if a != m]
    if len(outer) != 2 or outer[0] == outer[1]:
        raise PatternMismatch(f"crossing {cid!r} is not a kink")
    if d.puncture:
        punct_face = d.face_of_arc_side(*d.puncture)
        walk = d._face_data.walks[punct_face]
        if len(walk) == 1 and walk[0][0] == m:
            raise PatternMismatch("puncture sits inside the kink")
    a_in = next(a for a in outer if d.arc_dir[a][1][0] == cid)
    a_out = next(a for a in outer if a != a_in)
    ed = _Editor(d)
    del ed.crossings[cid]
    ed.bars.pop(m, None)
    ed.rename_arc_everywhere(a_out, a_in)
    out = ed.try_build()
    if out is None:
        raise PatternMismatch("kink removal failed to validate")
    return out


# ---------------------------------------------------------------------------
# R2 / V2 slides


def _cofacial_pairs(d: Diagram) -> list[tuple[str, str]]:
    pairs = set()
    for walk in d._face_data.walks:
        arcs = sorted({a for a, _ in walk})
        for i in range(len(arcs)):
            for j in range(i + 1, len(arcs)):
                pairs.add((arcs[i], arcs[j]))
    return sorted(pairs)


def _slide_apply(d: Diagram, over_arc: str, under_arc: str, virtual: bool) -> Diagram:
    if over_arc == under_arc:
        raise PatternMismatch("slide needs two distinct arcs")
    for a in (over_arc, under_arc):
        if a not in d.arc_ends:
            raise PatternMismatch(f"no arc {a!r}")
    key = tuple(sorted((over_arc, under_arc)))
    if key not in _cofacial_pairs(d):
        raise PatternMismatch("arcs do not border a common face")
    for y_rev in (False, True):
        for s in ((0,) if virtual else (1, -1)):
            ed = _Editor(d)
            x1, x2, x3 = _split_arc(ed, d, over_arc, 3)
            y1, y2, y3 = _split_arc(ed, d, under_arc, 3)
            ya, yb, yc = (y3, y2, y1) if y_rev else (y1, y2, y3)
            p = ed.new_node()
            q = ed.new_node()
            if virtual:
                ed.set_crossing(p, "V", 0, (ya, x2, yb, x1))
                ed.set_crossing(q, "V", 0, (yb, x3, yc, x2))
            else:
                ed.set_crossing(p, "X", s, _forced_slots((ya, yb), (x1, x2), s))
                ed.set_crossing(q, "X", -s, _forced_slots((yb, yc), (x2, x3), -s))
            out = ed.try_build()
            if out is not None:
                return out
    raise PatternMismatch("no valid slide wiring at this site")


def _bigon_sites(d: Diagram, virtual: bool) -> list[MoveSite]:
    out = []
    kind = "V" if virtual else "X"
    seen = set()
    for walk in d._face_data.walks:
        if len(walk) != 2:
            continue
        u, v = walk[0][0], walk[1][0]
        if u == v or d.bars.get(u) or d.bars.get(v):
            continue
        nodes = {n for n, _ in d.arc_ends[u]} | {n for n, _ in d.arc_ends[v]}
        if len(nodes) != 2:
            continue
        if not all(n in d.crossings and d.crossings[n].kind == kind for n in nodes):
            continue
        p, q = sorted(nodes)
        if (p, q) in seen:
            continue
        if not virtual:
            cp, cq = d.crossings[p], d.crossings[q]
            if cp.sign + cq.sign != 0:
                continue
            over_p = {cp.slots[1], cp.slots[3]}
            over_q = {cq.slots[1], cq.slots[3]}
            if (u in over_p) != (u in over_q):
                continue
        seen.add((p, q))
        out.append(MoveSite("V2" if virtual else "R2", (p, q), unapply=True))
    return out


def _slide_unapply(d: Diagram, p: str, q: str, virtual: bool) -> Diagram:
    kind = "V" if virtual else "X"
    for node in (p, q):
        c = d.crossings.get(node)
        if c is None or c.kind != kind:
            raise PatternMismatch(f"no {kind} crossing {node!r}")
    shared = [a for a in d.arc_ends if {n for n, _ in d.arc_ends[a]} == {p, q}]
    if len(shared) != 2:
        raise PatternMismatch("crossings do not bound a bigon")
    u, v = shared
    if d.bars.get(u) or d.bars.get(v):
        raise PatternMismatch("bigon arcs carry bars")
    bigon_faces = [
        f for f, walk in enumerate(d._face_data.walks)
        if len(walk) == 2 and {walk[0][0], walk[1][0]} == {u, v}
    ]
    if not bigon_faces:
        raise PatternMismatch("no bigon face between the crossings")
    if d.puncture and d.face_of_arc_side(*d.puncture) in bigon_faces:
        raise PatternMismatch("puncture sits inside the bigon")
    ed = _Editor(d)
    for node in (p, q):
        c = ed.crossings.pop(node)
        for pair in ((0, 2), (1, 3)):
            a, b = c.slots[pair[0]], c.slots[pair[1]]
            if a == b:
                continue
            a_in = a if d.arc_dir[a][1] == (node, pair[0]) else b
            a_out = b if a_in == a else a
            ed.rename_arc_everywhere(a_out, a_in)
    out = ed.try_build()
    if out is None:
        raise PatternMismatch("bigon removal failed to validate")
    return out


# ---------------------------------------------------------------------------
# triangle slides (R3, V3, MV)


def _triangles(d: Diagram) -> list[tuple]:
    out = []
    seen = set()
    for walk in d._face_data.walks:
        if len(walk) != 3:
            continue
        arcs = tuple(a for a, _ in walk)
        if len(set(arcs)) != 3 or any(d.bars.get(a) for a in arcs):
            continue
        nodes = set()
        for a in arcs:
            nodes.update(n for n, _ in d.arc_ends[a])
        if len(nodes) != 3 or not all(n in d.crossings for n in nodes):
            continue
        key = tuple(sorted(nodes))
        if key in seen:
            continue
        seen.add(key)
        out.append((key, arcs))
    return out


def _is_over(d: Diagram, cid: str, arc: str) -> bool:
    return any(d.crossings[cid].slots[k] == arc for k in (1, 3))


def _strand_arcs(d: Diagram, cid: str, arc: str) -> tuple[str, str]:
    """(in, out) arcs of the strand containing `arc` at the crossing."""
    c = d.crossings[cid]
    slot = next(k for k in range(4) if c.slots[k] == arc)
    mate = (slot + 2) % 4
    a, b = c.slots[slot], c.slots[mate]
    if d.arc_dir[a][1] == (cid, slot):
        return a, b
    if d.arc_dir[b][1] == (cid, mate):
        return b, a
    raise PatternMismatch("strand direction is ambiguous here")


def _coherent_arcs(d: Diagram, nodes: tuple, arcs: tuple) -> list[str]:
    """Triangle arcs whose strand may slide across the opposite crossing."""
    out = []
    for a in arcs:
        n1, n2 = (n for n, _ in d.arc_ends[a])
        k1, k2 = d.crossings[n1].kind, d.crossings[n2].kind
        if {k1, k2} == {"V"} or (
            k1 == k2 == "X" and _is_over(d, n1, a) == _is_over(d, n2, a)
        ):
            out.append(a)
    return out


def _triangle_slide(d: Diagram, nodes: tuple, arcs: tuple, x_t: str) -> Diagram:
    """Slide the strand of x_t across the opposite triangle crossing.

    Exactly the crossing order along the two fixed strands flips through the
    far corner; every crossing keeps its sign, its over strand, and the
    strand directions, which forces the new slot tuples.
    """
    if x_t not in _coherent_arcs(d, nodes, arcs):
        raise PatternMismatch("strand is not coherent across the triangle")
    ends = {a: tuple(n for n, _ in d.arc_ends[a]) for a in arcs}
    P, R = ends[x_t]
    Q = next(n for n in nodes if n not in (P, R))
    b_t = next(a for a in arcs if a != x_t and P in ends[a])
    c_t = next(a for a in arcs if a != x_t and R in ends[a])

    def strand_data(cid, tri_arc):
        s_in, s_out = _strand_arcs(d, cid, tri_arc)
        far_arc = s_in if s_in != tri_arc else s_out
        return (s_in, s_out), far_arc

    (x_at_p, x_p), (x_at_r, x_r) = strand_data(P, x_t), strand_data(R, x_t)
    (b_at_p, b_p), (b_at_q, b_q) = strand_data(P, b_t), strand_data(Q, b_t)
    (c_at_r, c_r), (c_at_q, c_q) = strand_data(R, c_t), strand_data(Q, c_t)

    def reroute(pair, old_far, new_far):
        # the moved corner now sits on the other side of the far crossing,
        # so the strand runs through it in the opposite arc order
        return tuple(reversed([new_far if a == old_far else a for a in pair]))

    ed = _Editor(d)
    for cid, strand1, strand2 in (
        # the slid strand meets the two others in the opposite order, so its
        # in/out pairs exchange between the two corners
        (P, (x_at_r, x_t), (reroute(b_at_p, b_p, b_q), b_t)),
        (Q, (reroute(b_at_q, b_q, b_p), b_t), (reroute(c_at_q, c_q, c_r), c_t)),
        (R, (x_at_p, x_t), (reroute(c_at_r, c_r, c_q), c_t)),
    ):
        cr = d.crossings[cid]
        if cr.kind == "V":
            ed.set_crossing(cid, "V", 0, (strand1[0][0], strand2[0][0],
                                          strand1[0][1], strand2[0][1]))
        else:
            over_first = _is_over(d, cid, strand1[1])
            over, under = (strand1[0], strand2[0]) if over_first else (strand2[0], strand1[0])
            ed.set_crossing(cid, "X", cr.sign, _forced_slots(under, over, cr.sign))
    out = ed.try_build()
    if out is None:
        raise PatternMismatch("triangle slide failed to validate")
    return out


# ---------------------------------------------------------------------------
# endpoint slides


def _v0_apply(d: Diagram, endpoint: str, target_arc: str) -> Diagram:
    ep = d.endpoints.get(endpoint)
    if ep is None:
        raise PatternMismatch(f"no endpoint {endpoint!r}")
    if target_arc not in d.arc_ends:
        raise PatternMismatch(f"no arc {target_arc!r}")
    if target_arc == ep.arc:
        raise PatternMismatch("cannot slide an endpoint across its own arc")
    ed = _Editor(d)
    a0, a1 = _split_arc(ed, d, ep.arc, 2)
    y1, y2 = _split_arc(ed, d, target_arc, 2)
    w = ed.new_node()
    near, far = (a0, a1) if d.arc_dir[ep.arc][0] == (ep.id, 0) else (a1, a0)
    for ya, yb in ((y1, y2), (y2, y1)):
        ed.set_crossing(w, "V", 0, (near, ya, far, yb))
        out = ed.try_build()
        if out is not None:
            return out
    raise PatternMismatch("endpoint slide failed to validate")


def _v0_unapply(d: Diagram, endpoint: str) -> Diagram:
    ep = d.endpoints.get(endpoint)
    if ep is None:
        raise PatternMismatch(f"no endpoint {endpoint!r}")
    if d.bars.get(ep.arc):
        raise PatternMismatch("a bar blocks the endpoint slide")
    node, slot = d._other_end(ep.arc, (ep.id, 0))
    if node in d.endpoints:
        raise PatternMismatch("endpoint arc leads to another endpoint")
    c = d.crossings[node]
    if c.kind != "V":
        raise ForbiddenMove("endpoints may not slide across classical crossings")
    ext = c.slots[(slot + 2) % 4]
    ya, yb = c.slots[(slot + 1) % 4], c.slots[(slot + 3) % 4]
    if ext == ep.arc or ya == yb:
        raise PatternMismatch("degenerate endpoint slide")
    ed = _Editor(d)
    del ed.crossings[node]
    ed.rename_arc_everywhere(ext, ep.arc)
    ed.rename_arc_everywhere(yb, ya)
    out = ed.try_build()
    if out is None:
        raise PatternMismatch("endpoint slide removal failed to validate")
    return out


# ---------------------------------------------------------------------------
# bar moves


def _t0(d: Diagram, endpoint: str, unapply: bool) -> Diagram:
    ep = d.endpoints.get(endpoint)
    if ep is None:
        raise PatternMismatch(f"no endpoint {endpoint!r}")
    ed = _Editor(d)
    if unapply:
        if not ed.bars.get(ep.arc):
            raise PatternMismatch("no bar next to this endpoint")
        ed.bars[ep.arc] -= 1
    else:
        ed.bars[ep.arc] = ed.bars.get(ep.arc, 0) + 1
    return ed.build()


def _t2(d: Diagram, arc: str, unapply: bool) -> Diagram:
    if arc not in d.arc_ends:
        raise PatternMismatch(f"no arc {arc!r}")
    ed = _Editor(d)
    if unapply:
        if ed.bars.get(arc, 0) < 2:
            raise PatternMismatch("no adjacent bar pair on this arc")
        ed.bars[arc] -= 2
    else:
        ed.bars[arc] = ed.bars.get(arc, 0) + 2
    return ed.build()


def _bar_pair_slide(d: Diagram, cid: str, kind: str) -> Diagram:
    """Move an adjacent bar pair across a crossing along one of its strands."""
    c = d.crossings.get(cid)
    if c is None or c.kind != kind:
        raise PatternMismatch(f"no {kind} crossing {cid!r}")
    for slot in range(4):
        arc = c.slots[slot]
        mate = c.slots[(slot + 2) % 4]
        if arc != mate and d.bars.get(arc, ()) and len(d.bars[arc]) >= 2:
            ed = _Editor(d)
            ed.move_bars(arc, mate, 2)
            return ed.build()
    raise PatternMismatch("no bar pair adjacent to this crossing")


# ---------------------------------------------------------------------------
# dispatcher, site discovery, perturbation


def apply(d: Diagram, site: MoveSite) -> Diagram:
    """Apply one move at a fully specified anchor."""
    if site.move not in MOVES_FOR[d.category]:
        raise IllegalForCategory(f"{site.move} is not a {d.category} move")
    m, p, un = site.move, site.params, site.unapply
    if m == "R1":
        return _kink_unapply(d, *p, virtual=False) if un else _kink_apply(d, *p, virtual=False)
    if m == "V1":
        return _kink_unapply(d, *p, virtual=True) if un else _kink_apply(d, *p, virtual=True)
    if m == "R2":
        return _slide_unapply(d, *p, virtual=False) if un else _slide_apply(d, *p, virtual=False)
    if m == "V2":
        return _slide_unapply(d, *p, virtual=True) if un else _slide_apply(d, *p, virtual=True)
    if m in ("R3", "V3", "MV"):
        return _triangle_slide(d, *p)
    if m == "V0":
        return _v0_unapply(d, *p) if un else _v0_apply(d, *p)
    if m == "T0":
        return _t0(d, *p, unapply=un)
    if m == "T1":
        return _bar_pair_slide(d, *p, kind="V")
    if m == "T2":
        return _t2(d, *p, unapply=un)
    if m == "T3":
        return _bar_pair_slide(d, *p, kind="X")
    raise PatternMismatch(f"unknown move {m!r}")


def find_sites(d: Diagram, move: str, unapply: bool) -> list[MoveSite]:
    """All anchors where the move's pattern matches."""
    arcs = sorted(d.arc_ends)
    if move == "R1" and not unapply:
        return [MoveSite("R1", (a, s, sg))
                for a in arcs for s in ("l", "r") for sg in (1, -1)]
    if move == "R1":
        return _kink_unapply_sites(d, virtual=False)
    if move == "V1" and not unapply:
        return [MoveSite("V1", (a, s, 0)) for a in arcs for s in ("l", "r")]
    if move == "V1":
        return _kink_unapply_sites(d, virtual=True)
    if move in ("R2", "V2") and not unapply:
        return [MoveSite(move, pair) for pair in _cofacial_pairs(d)]
    if move in ("R2", "V2"):
        return _bigon_sites(d, virtual=move == "V2")
    if move in ("R3", "V3", "MV"):
        sites = []
        for nodes, tri_arcs in _triangles(d):
            kinds = {d.crossings[n].kind for n in nodes}
            want = {"R3": kinds == {"X"}, "V3": kinds == {"V"},
                    "MV": len(kinds) == 2}[move]
            if not want:
                continue
            for x_t in _coherent_arcs(d, nodes, tri_arcs):
                sites.append(MoveSite(move, (nodes, tri_arcs, x_t), unapply))
        return sites
    if move == "V0" and not unapply:
        return [MoveSite("V0", (e, a))
                for e in sorted(d.endpoints) for a in arcs
                if a != d.endpoints[e].arc]
    if move == "V0":
        return [MoveSite("V0", (ep.id,), True)
                for ep in d.endpoints.values()
                if not d.bars.get(ep.arc)
                and d._other_end(ep.arc, (ep.id, 0))[0] in d.crossings
                and d.crossings[d._other_end(ep.arc, (ep.id, 0))[0]].kind == "V"]
    if move == "T0" and not unapply:
        return [MoveSite("T0", (e,)) for e in sorted(d.endpoints)]
    if move == "T0":
        return [MoveSite("T0", (e,), True) for e in sorted(d.endpoints)
                if d.bars.get(d.endpoints[e].arc)]
    if move == "T1" or move == "T3":
        kind = "V" if move == "T1" else "X"
        out = []
        for cid in sorted(d.crossings):
            c = d.crossings[cid]
            if c.kind != kind:
                continue
            if any(len(d.bars.get(c.slots[k], ())) >= 2
                   and c.slots[k] != c.slots[(k + 2) % 4] for k in range(4)):
                out.append(MoveSite(move, (cid,), unapply))
        return out
    if move == "T2" and not unapply:
        return [MoveSite("T2", (a,)) for a in arcs]
    if move == "T2":
        return [MoveSite("T2", (a,), True) for a in arcs
                if len(d.bars.get(a, ())) >= 2]
    return []


def random_perturb(d: Diagram, steps: int, seed: int, crossing_cap: int = 9) -> Diagram:
    """A deterministic-in-seed chain of legal moves, crossing count capped."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    rng = random.Random(seed)
    grows = {"R1", "R2", "V1", "V2", "V0"}
    for _ in range(steps):
        menu = [(m, un) for m in MOVES_FOR[d.category] for un in (False, True)]
        rng.shuffle(menu)
        for m, un in menu:
            if not un and m in grows and len(d.crossings) >= crossing_cap:
                continue
            sites = find_sites(d, m, un)
            if not sites:
                continue
            site = rng.choice(sites)
            try:
                d = apply(d, site)
                break
            except ArrowPolyError:
                continue
    return d
