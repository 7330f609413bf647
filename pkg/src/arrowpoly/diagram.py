"""Combinatorial-map model of knotoid, twisted-knotoid, planar and linkoid diagrams.

A diagram is a 4-valent map drawn on the sphere.  Crossings store their four
arc labels counterclockwise with slot 0 the incoming under-strand; virtual
crossings are ordinary map vertices flagged virtual.  Bars sit on arcs with a
position index ordering them along the arc's direction.  A planar diagram
additionally names a puncture face by an (arc, side) incidence.

Sign convention (fixed once, inherited by every module): with slot 0 the
incoming under-strand and slots listed counterclockwise, a crossing is
positive when the over-strand runs slot 3 -> slot 1.  Equivalently the frame
(over-direction, under-direction) is positively oriented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ArcLabelCountMismatch,
    BarInClassicalCategory,
    CategoryMismatch,
    DiagramSyntaxError,
    InconsistentOrientation,
    MissingPuncture,
    NonSphericalMap,
    NotAKnotoid,
    ValidationError,
)

SPHERICAL = "spherical"
PLANAR = "planar"
VIRTUAL = "virtual"
TWISTED = "twisted"
LINKOID = "linkoid"

CATEGORIES = (SPHERICAL, PLANAR, VIRTUAL, TWISTED, LINKOID)


@dataclass(frozen=True)
class Crossing:
    id: str
    kind: str  # "X" classical, "V" virtual
    sign: int  # +1 / -1 classical, 0 virtual
    slots: tuple[str, str, str, str]


@dataclass(frozen=True)
class Endpoint:
    id: str
    role: str  # "tail" | "head"
    arc: str
    component: str


@dataclass(frozen=True)
class Component:
    """One traced strand: open (tail -> head) or closed."""

    kind: str  # "open" | "closed"
    comp_id: str
    steps: tuple[tuple[str, bool], ...]  # (arc, traversed forward?)
    tail: str | None = None  # endpoint node ids for open components
    head: str | None = None


@dataclass(frozen=True)
class FaceData:
    n_faces: int
    corner_face: dict  # (node_id, slot) -> face index, corner between slot and slot+1
    arc_faces: dict  # arc -> (left_face, right_face) relative to arc direction
    walks: list  # face index -> list of (arc, forward) traversals


class Diagram:
    """A validated diagram.  Immutable after construction; queries are pure."""

    def __init__(
        self,
        category: str,
        crossings: dict[str, Crossing],
        endpoints: dict[str, Endpoint],
        bars: dict[str, tuple[int, ...]] | None = None,
        puncture: tuple[str, str] | None = None,
        orient_markers: tuple[tuple[str, str, int], ...] = (),
    ):
        if category not in CATEGORIES:
            raise ValidationError(f"unknown category {category!r}")
        self.category = category
        self.crossings = dict(crossings)
        self.endpoints = dict(endpoints)
        self.bars = {a: tuple(sorted(ps)) for a, ps in (bars or {}).items() if ps}
        self.puncture = puncture
        self.orient_markers = tuple(orient_markers)
        self._validate()

    # ------------------------------------------------------------------
    # structure helpers

    def node_slots(self, node_id: str) -> tuple[str, ...]:
        n = self.crossings.get(node_id)
        if n is not None:
            return n.slots
        return (self.endpoints[node_id].arc,)

    def _build_arc_ends(self) -> dict[str, list[tuple[str, int]]]:
        ends: dict[str, list[tuple[str, int]]] = {}
        for c in self.crossings.values():
            for k, a in enumerate(c.slots):
                ends.setdefault(a, []).append((c.id, k))
        for e in self.endpoints.values():
            ends.setdefault(e.arc, []).append((e.id, 0))
        return ends

    # ------------------------------------------------------------------
    # validation

    def _validate(self) -> None:
        ids = set(self.crossings) & set(self.endpoints)
        if ids:
            raise ValidationError(f"node ids reused: {sorted(ids)}")
        ends = self._build_arc_ends()
        for a, es in ends.items():
            if len(es) != 2:
                raise ArcLabelCountMismatch(
                    f"arc {a!r} has {len(es)} ends, expected 2"
                )
        self.arc_ends = {a: tuple(es) for a, es in ends.items()}
        for a in self.bars:
            if a not in self.arc_ends:
                raise ValidationError(f"bar on unknown arc {a!r}")
        if self.puncture and self.puncture[0] not in self.arc_ends:
            raise ValidationError(f"puncture on unknown arc {self.puncture[0]!r}")

        self._trace()
        self._check_crossing_orientations()
        self._face_data = self._trace_faces()
        v = len(self.crossings) + len(self.endpoints)
        e = len(self.arc_ends)
        f = self._face_data.n_faces
        c = self._count_map_components()
        # every connected piece must embed in a sphere of its own (face walks
        # are per piece, so each piece contributes a full V-E+F = 2)
        if v - e + f != 2 * c:
            raise NonSphericalMap(
                f"V-E+F = {v}-{e}+{f} = {v - e + f}, expected {2 * c}"
            )
        self._check_category()

    def _other_end(self, arc: str, end: tuple[str, int]) -> tuple[str, int]:
        e1, e2 = self.arc_ends[arc]
        return e2 if end == e1 else e1

    def _trace(self) -> None:
        """Direct every arc: open components tail -> head, closed per marker."""
        arc_dir: dict[str, tuple[tuple[str, int], tuple[str, int]]] = {}
        components: list[Component] = []

        def walk(start_arc: str, into: tuple[str, int]):
            """Follow the strand, arc by arc, starting along start_arc toward `into`."""
            steps = []
            arc, dest = start_arc, into
            while True:
                if steps and arc == start_arc and dest == into:
                    return steps, None  # closed up
                if arc in arc_dir:
                    raise InconsistentOrientation(f"arc {arc!r} traversed twice")
                arc_dir[arc] = (self._other_end(arc, dest), dest)
                steps.append(arc)
                node, slot = dest
                if node in self.endpoints:
                    return steps, node
                deg = len(self.node_slots(node))
                out_slot = (slot + 2) % deg
                arc = self.node_slots(node)[out_slot]
                dest = self._other_end(arc, (node, out_slot))

        tails = sorted(
            (e for e in self.endpoints.values() if e.role == "tail"),
            key=lambda e: (e.component, e.id),
        )
        heads = {e.id: e for e in self.endpoints.values() if e.role == "head"}
        if len(tails) + len(heads) != len(self.endpoints):
            raise ValidationError("endpoint roles must be tail or head")
        for t in tails:
            dest = self._other_end(t.arc, (t.id, 0))
            if dest == (t.id, 0):
                raise ValidationError(f"arc {t.arc!r} has both ends on one endpoint")
            steps, end_node = walk(t.arc, dest)
            if end_node is None:
                raise InconsistentOrientation(
                    f"component from tail {t.id!r} closed on itself"
                )
            h = self.endpoints[end_node]
            if h.role != "head":
                raise InconsistentOrientation(
                    f"trace from tail {t.id!r} reached {h.role} {h.id!r}"
                )
            if h.component != t.component:
                raise InconsistentOrientation(
                    f"tail {t.id!r} and head {h.id!r} have different component ids"
                )
            components.append(
                Component(
                    kind="open",
                    comp_id=t.component,
                    steps=tuple((a, True) for a in steps),
                    tail=t.id,
                    head=h.id,
                )
            )
        seen_heads = {c.head for c in components}
        if seen_heads != set(heads):
            raise InconsistentOrientation("some heads were never reached from a tail")

        for arc, node, slot in self.orient_markers:
            if arc in arc_dir:
                raise InconsistentOrientation(
                    f"orientation marker on already-oriented arc {arc!r}"
                )
            if node not in self.crossings or self.node_slots(node)[slot] != arc:
                raise ValidationError(f"orientation marker does not match arc {arc!r}")
            steps, end_node = walk(arc, (node, slot))
            if end_node is not None:
                raise InconsistentOrientation("orientation marker on an open strand")
            components.append(
                Component(kind="closed", comp_id="", steps=tuple((a, True) for a in steps))
            )

        leftover = set(self.arc_ends) - set(arc_dir)
        if leftover:
            raise InconsistentOrientation(
                f"closed component without an orientation marker: arcs {sorted(leftover)}"
            )
        self.components = components
        self.arc_dir = arc_dir

    def _check_crossing_orientations(self) -> None:
        self._incoming: dict[tuple[str, int], bool] = {}
        for a, (src, dst) in self.arc_dir.items():
            self._incoming[dst] = True
            self._incoming[src] = False
        for c in self.crossings.values():
            flows = [self._incoming[(c.id, k)] for k in range(4)]
            if flows[0] == flows[2] or flows[1] == flows[3]:
                raise InconsistentOrientation(
                    f"strands do not pass through crossing {c.id!r}"
                )
            if c.kind == "X":
                if not flows[0]:
                    raise InconsistentOrientation(
                        f"slot 0 of crossing {c.id!r} must be the incoming under-strand"
                    )
                computed = 1 if flows[3] else -1
                if computed != c.sign:
                    raise InconsistentOrientation(
                        f"crossing {c.id!r} declared {c.sign:+d} but trace gives {computed:+d}"
                    )

    def incoming(self, node_id: str, slot: int) -> bool:
        """True if the arc in this slot is directed into the node."""
        return self._incoming[(node_id, slot)]

    def _trace_faces(self) -> FaceData:
        # darts are (node, slot) outgoing; next dart after crossing the arc at
        # (node, slot) and arriving at (n2, s2) is (n2, s2 + 1).
        darts = []
        for c in self.crossings.values():
            darts.extend((c.id, k) for k in range(4))
        for e in self.endpoints.values():
            darts.append((e.id, 0))
        next_of = {}
        for n, s in darts:
            arc = self.node_slots(n)[s]
            n2, s2 = self._other_end(arc, (n, s))
            deg2 = len(self.node_slots(n2))
            next_of[(n, s)] = (n2, (s2 + 1) % deg2)
        corner_face: dict[tuple[str, int], int] = {}
        arc_faces: dict[str, list[int | None]] = {a: [None, None] for a in self.arc_ends}
        walks: list[list[tuple[str, bool]]] = []
        seen = set()
        for start in sorted(darts):
            if start in seen:
                continue
            fid = len(walks)
            walk = []
            cur = start
            while cur not in seen:
                seen.add(cur)
                n, s = cur
                arc = self.node_slots(n)[s]
                forward = self.arc_dir[arc][0] == (n, s)
                walk.append((arc, forward))
                # face holding the forward traversal is the arc's right face
                arc_faces[arc][1 if forward else 0] = fid
                n2, s2 = self._other_end(arc, (n, s))
                corner_face[(n2, s2)] = fid
                cur = next_of[cur]
            walks.append(walk)
        return FaceData(
            n_faces=len(walks),
            corner_face=corner_face,
            arc_faces={a: (lr[0], lr[1]) for a, lr in arc_faces.items()},
            walks=walks,
        )

    def _count_map_components(self) -> int:
        parent: dict[str, str] = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        nodes = list(self.crossings) + list(self.endpoints)
        for n in nodes:
            parent[n] = n
        for a, ((n1, _), (n2, _)) in self.arc_ends.items():
            r1, r2 = find(n1), find(n2)
            if r1 != r2:
                parent[r1] = r2
        return len({find(n) for n in nodes})

    def _check_category(self) -> None:
        has_virtual = any(c.kind == "V" for c in self.crossings.values())
        has_bars = bool(self.bars)
        n_open = sum(1 for c in self.components if c.kind == "open")
        n_closed = len(self.components) - n_open
        cat = self.category
        if cat != TWISTED and has_bars:
            raise BarInClassicalCategory(f"bars are not allowed in {cat} diagrams")
        if cat in (SPHERICAL, PLANAR, LINKOID) and has_virtual:
            raise ValidationError(f"virtual crossings are not allowed in {cat} diagrams")
        if cat == PLANAR and self.puncture is None:
            raise MissingPuncture("planar diagrams must declare a puncture")
        if cat != PLANAR and self.puncture is not None:
            raise ValidationError(f"puncture is not allowed in {cat} diagrams")
        if cat == LINKOID:
            if n_open < 1:
                raise ValidationError("a linkoid needs at least one knotoidal component")
        else:
            if n_open != 1 or n_closed != 0:
                raise ValidationError(
                    f"{cat} diagrams must have exactly one open component and no closed ones"
                )

    # ------------------------------------------------------------------
    # public queries

    @property
    def kappa(self) -> int:
        return sum(1 for c in self.components if c.kind == "open")

    def writhe(self) -> int:
        return sum(c.sign for c in self.crossings.values() if c.kind == "X")

    def classical_ids(self) -> list[str]:
        return sorted(c.id for c in self.crossings.values() if c.kind == "X")

    def faces(self) -> list[list[tuple[str, str]]]:
        """Faces as cyclic lists of arc-sides ('l'/'r' relative to arc direction)."""
        out = []
        for walk in self._face_data.walks:
            out.append([(a, "r" if fwd else "l") for a, fwd in walk])
        return out

    def face_of_arc_side(self, arc: str, side: str) -> int:
        left, right = self._face_data.arc_faces[arc]
        return left if side in ("l", "left") else right

    def orientation_trace(self) -> dict[str, tuple[tuple[str, int], tuple[str, int]]]:
        """Per-arc direction as ((from node, slot), (to node, slot))."""
        return dict(self.arc_dir)

    # ------------------------------------------------------------------
    # concatenation

    def concatenate(self, other: "Diagram") -> "Diagram":
        """Attach this diagram's head to the other's tail."""
        if self.category != other.category:
            raise CategoryMismatch(
                f"cannot concatenate {self.category} with {other.category}"
            )
        if self.category not in (SPHERICAL, VIRTUAL):
            raise CategoryMismatch(f"concatenation undefined for {self.category}")
        if self.kappa != 1 or other.kappa != 1:
            raise NotAKnotoid("concatenation needs single-component knotoids")

        def rn(label: str, tag: str) -> str:
            return f"{tag}{label}"

        crossings = {
            rn(c.id, "L"): Crossing(rn(c.id, "L"), c.kind, c.sign, tuple(rn(a, "L") for a in c.slots))
            for c in self.crossings.values()
        }
        crossings.update(
            {
                rn(c.id, "R"): Crossing(rn(c.id, "R"), c.kind, c.sign, tuple(rn(a, "R") for a in c.slots))
                for c in other.crossings.values()
            }
        )
        head = next(e for e in self.endpoints.values() if e.role == "head")
        tail2 = next(e for e in other.endpoints.values() if e.role == "tail")
        fused = "afuse"
        arc_map_l = {head.arc: fused}
        arc_map_r = {tail2.arc: fused}

        def fix(cr: Crossing, amap, tag):
            return Crossing(
                cr.id, cr.kind, cr.sign, tuple(amap.get(a[1:], a) if a.startswith(tag) else a for a in cr.slots)
            )

        crossings = {
            cid: (fix(cr, arc_map_l, "L") if cid.startswith("L") else fix(cr, arc_map_r, "R"))
            for cid, cr in crossings.items()
        }
        endpoints = {}
        tail1 = next(e for e in self.endpoints.values() if e.role == "tail")
        head2 = next(e for e in other.endpoints.values() if e.role == "head")
        t_arc = rn(tail1.arc, "L") if tail1.arc != head.arc else fused
        h_arc = rn(head2.arc, "R") if head2.arc != tail2.arc else fused
        endpoints["t"] = Endpoint("t", "tail", t_arc, "k0")
        endpoints["h"] = Endpoint("h", "head", h_arc, "k0")
        return Diagram(self.category, crossings, endpoints)

    # ------------------------------------------------------------------
    # serialization

    def serialize(self) -> str:
        lines = [f"type: {self.category}"]
        for cid in sorted(self.crossings):
            c = self.crossings[cid]
            if c.kind == "X":
                tag = "X+" if c.sign > 0 else "X-"
            else:
                tag = "V"
            lines.append(f"crossing {cid} {tag} {' '.join(c.slots)}")
        for eid in sorted(self.endpoints):
            e = self.endpoints[eid]
            lines.append(f"endpoint {eid} {e.role} {e.arc} {e.component}")
        for arc in sorted(self.bars):
            for p in self.bars[arc]:
                lines.append(f"bar {arc} {p}")
        for arc, node, slot in self.orient_markers:
            lines.append(f"orient {arc} {node} {slot}")
        if self.puncture:
            lines.append(f"puncture {self.puncture[0]} {self.puncture[1]}")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # canonical relabeling

    def canonical(self) -> "Diagram":
        """Relabel nodes/arcs/components by traversal order.

        Open components are visited sorted by component id, then closed
        components by an invariant of their crossing visits.  Two diagrams
        that differ only by labels map to equal canonical forms.
        """
        order: list[Component] = [c for c in self.components if c.kind == "open"]
        order.sort(key=lambda c: c.comp_id)
        closed = [c for c in self.components if c.kind == "closed"]

        arc_names: dict[str, str] = {}
        node_names: dict[str, str] = {}
        comp_names: dict[str, str] = {}

        def visit(comp: Component):
            for arc, _ in comp.steps:
                if arc not in arc_names:
                    arc_names[arc] = f"a{len(arc_names)}"
                dst = self.arc_dir[arc][1]
                node = dst[0]
                if node in self.crossings and node not in node_names:
                    node_names[node] = f"c{len(node_names)}"

        for comp in order:
            if comp.comp_id not in comp_names:
                comp_names[comp.comp_id] = f"k{len(comp_names)}"
            visit(comp)
        # closed components: visit those touching already-named crossings first
        remaining = list(closed)
        while remaining:
            def key(comp):
                names = [
                    node_names.get(self.arc_dir[a][1][0], "~")
                    for a, _ in comp.steps
                ]
                return (min(names), len(comp.steps), names)

            remaining.sort(key=key)
            comp = remaining.pop(0)
            order.append(comp)
            visit(comp)

        crossings = {}
        for cid, c in self.crossings.items():
            nid = node_names[cid]
            crossings[nid] = Crossing(nid, c.kind, c.sign, tuple(arc_names[a] for a in c.slots))
        endpoints = {}
        for comp in order:
            if comp.kind != "open":
                continue
            t = self.endpoints[comp.tail]
            h = self.endpoints[comp.head]
            kn = comp_names[comp.comp_id]
            endpoints[f"t_{kn}"] = Endpoint(f"t_{kn}", "tail", arc_names[t.arc], kn)
            endpoints[f"h_{kn}"] = Endpoint(f"h_{kn}", "head", arc_names[h.arc], kn)
        bars = {}
        for arc, ps in self.bars.items():
            bars[arc_names[arc]] = tuple(range(len(ps)))
        markers = []
        for comp in order:
            if comp.kind != "closed":
                continue
            arc = comp.steps[0][0]
            node, slot = self.arc_dir[arc][1]
            markers.append((arc_names[arc], node_names[node], slot))
        puncture = None
        if self.puncture:
            puncture = (arc_names[self.puncture[0]], self.puncture[1])
        return Diagram(self.category, crossings, endpoints, bars, puncture, tuple(markers))

    def same_up_to_relabeling(self, other: "Diagram") -> bool:
        return self.canonical().serialize() == other.canonical().serialize()


# ---------------------------------------------------------------------------
# parsing


def parse(text: str) -> Diagram:
    """Parse the line-oriented diagram format; '#' starts a comment."""
    category = None
    crossings: dict[str, Crossing] = {}
    endpoints: dict[str, Endpoint] = {}
    bars: dict[str, list[int]] = {}
    puncture = None
    markers: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw = parts[0].rstrip(":")
        try:
            if kw == "type":
                category = parts[1]
            elif kw == "crossing":
                cid, tag, *slots = parts[1:]
                if len(slots) != 4:
                    raise DiagramSyntaxError("crossing needs four arc labels", lineno)
                if cid in crossings:
                    raise DiagramSyntaxError(f"duplicate crossing id {cid!r}", lineno)
                if tag == "X+":
                    crossings[cid] = Crossing(cid, "X", 1, tuple(slots))
                elif tag == "X-":
                    crossings[cid] = Crossing(cid, "X", -1, tuple(slots))
                elif tag == "V":
                    crossings[cid] = Crossing(cid, "V", 0, tuple(slots))
                else:
                    raise DiagramSyntaxError(f"unknown crossing tag {tag!r}", lineno)
            elif kw == "endpoint":
                eid, role, arc, comp = parts[1:]
                if role not in ("tail", "head"):
                    raise DiagramSyntaxError(f"unknown endpoint role {role!r}", lineno)
                if eid in endpoints:
                    raise DiagramSyntaxError(f"duplicate endpoint id {eid!r}", lineno)
                endpoints[eid] = Endpoint(eid, role, arc, comp)
            elif kw == "bar":
                arc, pos = parts[1], int(parts[2])
                bars.setdefault(arc, []).append(pos)
            elif kw == "orient":
                arc, node, slot = parts[1], parts[2], int(parts[3])
                markers.append((arc, node, slot))
            elif kw == "puncture":
                arc, side = parts[1], parts[2]
                if side not in ("left", "right"):
                    raise DiagramSyntaxError(f"puncture side must be left/right", lineno)
                puncture = (arc, side)
            else:
                raise DiagramSyntaxError(f"unknown keyword {kw!r}", lineno)
        except (IndexError, ValueError) as exc:
            raise DiagramSyntaxError(str(exc), lineno) from exc
    if category is None:
        raise DiagramSyntaxError("missing 'type:' line")
    return Diagram(category, crossings, endpoints, {a: tuple(p) for a, p in bars.items()}, puncture, tuple(markers))


def load(path) -> Diagram:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())
