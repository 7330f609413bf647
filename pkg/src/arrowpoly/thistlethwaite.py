"""State graphs of diagrams and the bracket / subgraph-sum identities.

For a diagram K and smoothing choice s, the state graph has one vertex per
state component (the open components marked), one signed edge per classical
crossing, and two arrows per edge: on the long sides when the smoothing at
that site respects the orientation, on the attaching arcs when it is
disoriented.  Evaluating the matching subgraph-sum polynomial of that graph
at a = 1, b_e = B/A (positive edges) or A/B (negative), c = d recovers the
bracket after multiplying by A^e+ B^e- and dividing by d once per marked
vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import poly, ribbon, states
from .diagram import Crossing, Diagram, Endpoint, LINKOID, PLANAR, TWISTED
from .errors import (
    InappropriateArrowStructure,
    NonDivisibleByD,
    ValidationError,
    VariantDecorationMismatch,
    VariantMismatch,
)
from .poly import Polynomial
from .ribbon import A_FWD, A_BWD, DEC_BAR, MarkedRibbonGraph, REdge
from .states import ARROW_DIR, JOINS, State, StateRegions, join_partner


def _flip(smoothing: str) -> str:
    return "B" if smoothing == "A" else "A"


def _pair_of(smoothing: str, stub: int):
    for p in JOINS[smoothing]:
        if stub in p:
            return tuple(sorted(p))
    raise ValueError(stub)


@dataclass(frozen=True)
class EdgeGeometry:
    """Combinatorics of one state-graph edge at a smoothing site.

    entry/exit are the crossing stubs (slot numbers) through which the state
    traversal enters and leaves each attaching arc.
    """

    smoothing: str
    entry: tuple[int, int]
    exit: tuple[int, int]
    twist: bool
    end_dec: tuple[tuple[str, ...], tuple[str, ...]]
    side_dec: tuple[tuple[str, ...], tuple[str, ...]]


def edge_geometry(smoothing: str, disoriented: bool,
                  entry0: int, exit0: int, entry1: int, exit1: int) -> EdgeGeometry:
    """Derive twist and arrow decorations from the traversal stubs.

    Side 0 leaves end 0 at its entry corner toward the flipped-smoothing
    partner stub; the edge is half-twisted exactly when that partner is the
    entry stub of end 1.
    """
    flipped = _flip(smoothing)

    def corner(end, stub):
        return "a" if stub == (entry0, entry1)[end] else "b"

    p_entry = join_partner(flipped, entry0)
    p_exit = join_partner(flipped, exit0)
    if {p_entry, p_exit} != {entry1, exit1}:
        raise AssertionError("flipped smoothing does not reach the other end")
    twist = corner(1, p_entry) == "a"

    end_dec: list[tuple[str, ...]] = [(), ()]
    side_dec: list[tuple[str, ...]] = [(), ()]
    if disoriented:
        for end, (en, ex) in enumerate(((entry0, exit0), (entry1, exit1))):
            direction = ARROW_DIR[(smoothing, _pair_of(smoothing, en))]
            end_dec[end] = (A_FWD if direction == (en, ex) else A_BWD,)
    else:
        for s, stub in enumerate((entry0, exit0)):
            partner = join_partner(flipped, stub)
            direction = ARROW_DIR[(flipped, _pair_of(flipped, stub))]
            side_dec[s] = (A_FWD if direction == (stub, partner) else A_BWD,)
    return EdgeGeometry(smoothing, (entry0, entry1), (exit0, exit1), twist,
                        tuple(end_dec), tuple(side_dec))


def _edge_geometry_candidates(edge: REdge) -> list[EdgeGeometry]:
    """All stub assignments reproducing the stored edge data.

    The decorations cannot distinguish a site from its half-turn relabeling,
    so two candidates usually survive; only one is globally consistent with
    the strand flow, which the caller resolves.
    """
    smoothing = "A" if edge.sign > 0 else "B"
    has_end = tuple(len(d) for d in edge.end_dec)
    has_side = tuple(len(d) for d in edge.side_dec)
    if has_end == (1, 1) and has_side == (0, 0):
        disoriented = True
    elif has_end == (0, 0) and has_side == (1, 1):
        disoriented = False
    else:
        raise InappropriateArrowStructure(
            f"edge {edge.id}: arrows must sit on both ends or on both sides"
        )
    out = []
    pairs = JOINS[smoothing]
    for swap_pairs in (False, True):
        pair0 = pairs[1] if swap_pairs else pairs[0]
        pair1 = pairs[0] if swap_pairs else pairs[1]
        for entry0 in pair0:
            for entry1 in pair1:
                exit0 = pair0[0] if pair0[1] == entry0 else pair0[1]
                exit1 = pair1[0] if pair1[1] == entry1 else pair1[1]
                geo = edge_geometry(smoothing, disoriented,
                                    entry0, exit0, entry1, exit1)
                if (geo.twist == edge.twist and geo.end_dec == edge.end_dec
                        and geo.side_dec == edge.side_dec):
                    out.append(geo)
    if not out:
        raise InappropriateArrowStructure(
            f"edge {edge.id}: decorations match no smoothing-site geometry"
        )
    return out


# ---------------------------------------------------------------------------
# building the state graph


@dataclass
class Realization:
    """Planar realization backing the nesting-indexed subgraph sums."""

    graph: MarkedRibbonGraph
    diagram: Diagram
    base_choice: dict[str, str]
    arc_of: dict[tuple[str, int], str]  # (vertex, free-seg index) -> diagram arc
    _cache: dict = field(default_factory=dict)

    def _state(self, subset: frozenset):
        if subset not in self._cache:
            choice = {
                c: (_flip(sm) if c in subset else sm)
                for c, sm in self.base_choice.items()
            }
            st = states.resolve(self.diagram, choice)
            self._cache[subset] = (st, StateRegions(st) if st.components else None)
        return self._cache[subset]

    def arc_nesting(self, subset: frozenset) -> int:
        st, regions = self._state(frozenset(subset))
        return len(states._separating_loops(st, regions))

    def loop_index(self, subset: frozenset, piece: ribbon.BoundaryPiece) -> int:
        st, regions = self._state(frozenset(subset))
        anchor = next(f for f in piece.footprints if f[0] == "seg")
        arc = self.arc_of[(anchor[1], anchor[2])]
        for i, comp in enumerate(st.components):
            if any(s[0] == "arc" and s[1] == arc for s in comp.steps):
                return regions.arc_side_counts(i)[0]
        raise AssertionError(f"no state component traverses arc {arc!r}")


@dataclass
class StateGraphBundle:
    diagram: Diagram
    choice: dict[str, str]
    graph: MarkedRibbonGraph
    e_plus: int
    e_minus: int
    realization: Realization


def build_graph(diagram: Diagram, choice: dict[str, str]) -> StateGraphBundle:
    """The marked ribbon graph of one Kauffman state."""
    state = states.resolve(diagram, choice)
    occurrences: dict[str, list] = {}
    vertices: dict[str, list] = {}
    arc_of: dict[tuple[str, int], str] = {}

    arc_seg: dict[str, tuple[str, int, bool]] = {}  # arc -> (vertex, seg, fwd)
    for ci, comp in enumerate(state.components):
        vid = f"v{ci}"
        segs: list = []
        if comp.kind == "arc":
            # crossing the mark forward arrives at the traversal's end role
            # and departs at its start role
            segs.append(("mark", comp.end_roles[1][0], comp.end_roles[0][0]))
        pending: list[str] = []
        stretch_arcs: list[tuple[str, bool]] = []

        def close_stretch():
            nonlocal pending, stretch_arcs
            segs.append(("free", tuple(pending)))
            if stretch_arcs:
                arc_of[(vid, len(segs) - 1)] = stretch_arcs[0][0]
            for arc, fwd in stretch_arcs:
                arc_seg[arc] = (vid, len(segs) - 1, fwd)
            pending, stretch_arcs = [], []

        for step in comp.steps:
            if step[0] == "arc":
                _, arc, fwd = step
                stretch_arcs.append((arc, fwd))
                bars = diagram.bars.get(arc, ())
                pending.extend(DEC_BAR for _ in (bars if fwd else reversed(bars)))
            elif step[0] == "join":
                _, cid, k_in, k_out = step
                close_stretch()
                end = len(occurrences.setdefault(cid, []))
                occurrences[cid].append((vid, k_in, k_out))
                segs.append(("slot", cid, end))
        close_stretch()
        vertices[vid] = segs

    edges: dict[str, REdge] = {}
    for cid in diagram.classical_ids():
        (v0, en0, ex0), (v1, en1, ex1) = occurrences[cid]
        sm = choice[cid]
        disoriented = states._disoriented(diagram, cid, sm)
        geo = edge_geometry(sm, disoriented, en0, ex0, en1, ex1)
        edges[cid] = REdge(cid, 1 if sm == "A" else -1, geo.twist, None,
                           geo.end_dec, geo.side_dec)

    punct = None
    if diagram.category == PLANAR:
        arc, side = diagram.puncture
        target = diagram.face_of_arc_side(arc, side)
        punct = _find_puncture_seg(diagram, arc_seg, target)

    graph = MarkedRibbonGraph(vertices, edges, punct, diagram.category)
    e_plus = sum(1 for v in choice.values() if v == "A")
    realization = Realization(graph, diagram, dict(choice), arc_of)
    return StateGraphBundle(diagram, dict(choice), graph, e_plus,
                            len(choice) - e_plus, realization)


def _find_puncture_seg(diagram, arc_seg, target):
    """Locate a free segment bordering the puncture face, with its side.

    The exact diagram face is matched, not the merged state region: faces
    that merge in one state are still distinguished by other states, so the
    graph must pin the face itself.
    """
    for arc in sorted(arc_seg):
        vid, seg_idx, fwd = arc_seg[arc]
        lf, rf = diagram._face_data.arc_faces[arc]
        left, right = (lf, rf) if fwd else (rf, lf)
        if left == target:
            return (vid, seg_idx, "left")
        if right == target:
            return (vid, seg_idx, "right")
    raise AssertionError("puncture face borders no arc")


# ---------------------------------------------------------------------------
# evaluation


def thistlethwaite_eval(bundle: StateGraphBundle, variant: str | None = None):
    """Both bracket forms recovered from the state graph.

    Returns (bracket, specialized): the subgraph sum at a=1, b_e = B/A or
    A/B, c = d, times A^e+ B^e-, divided by d once per marked vertex; and
    its evaluation at B = A^-1, d = -A^2 - A^-2.
    """
    expected = states.variant_for(bundle.diagram)
    if variant is None:
        variant = expected
    if variant != expected:
        raise VariantMismatch(f"{bundle.diagram.category} diagrams use the "
                              f"{expected} variant, not {variant}")
    graph = bundle.graph
    if variant in ("loop", "linkoid"):
        r = ribbon.VARIANT_POLYS[variant](graph, realization=bundle.realization)
    else:
        r = ribbon.VARIANT_POLYS[variant](graph)
    r = r.substitute(poly.VAR_a, poly.ONE)
    r = r.substitute(poly.VAR_c, poly.P_d)
    for eid in graph.edge_ids():
        edge = graph.edges[eid]
        value = (Polynomial.monomial(1, [(poly.B, 1), (poly.A, -1)])
                 if edge.sign > 0 else
                 Polynomial.monomial(1, [(poly.A, 1), (poly.B, -1)]))
        r = r.substitute(poly.edge_weight(edge.weight_name), value)
    r = r * Polynomial.monomial(1, [(poly.A, bundle.e_plus), (poly.B, bundle.e_minus)])
    kappa = graph.mark_count()
    try:
        bracket = r.divide_exact(poly.d, kappa)
    except poly.NonDivisible as exc:
        raise NonDivisibleByD(str(exc)) from exc
    return bracket, poly.specialize(bracket)


@dataclass
class VerifyLine:
    bits: str
    ok: bool
    expected: Polynomial
    got: Polynomial


@dataclass
class VerifyReport:
    diagram: Diagram
    variant: str
    lines: list[VerifyLine]

    @property
    def all_ok(self) -> bool:
        return all(line.ok for line in self.lines)

    def text(self) -> str:
        out = [f"variant {self.variant}  states {len(self.lines)}"]
        for line in self.lines:
            if line.ok:
                out.append(f"state {line.bits or '-'} ok")
            else:
                out.append(f"state {line.bits or '-'} FAIL")
                out.append(f"  direct: {line.expected.text()}")
                out.append(f"  graph:  {line.got.text()}")
        out.append("all states agree" if self.all_ok else "DISAGREEMENT found")
        return "\n".join(out)


def verify(diagram: Diagram, bits: str | None = None, workers: int = 1) -> VerifyReport:
    """Check the state-graph identity for every state (or one given state)."""
    variant = states.variant_for(diagram)
    direct = states.BRACKETS[variant](diagram, workers=workers)
    if bits is None:
        choices = list(states.all_choices(diagram))
    else:
        choices = [states.choice_from_bits(diagram, bits)]
    lines = []
    for choice in choices:
        bundle = build_graph(diagram, choice)
        got, _ = thistlethwaite_eval(bundle)
        lines.append(VerifyLine(states.sorted_choice_bits(diagram, choice),
                                got == direct, direct, got))
    return VerifyReport(diagram, variant, lines)


# ---------------------------------------------------------------------------
# diagram recovery


def _normalize_gaps(graph: MarkedRibbonGraph) -> MarkedRibbonGraph:
    """Exactly one free segment after every slot/mark (cyclically).

    The puncture, if any, is remapped onto the merged free segment it lands
    in; sides are unaffected because merging preserves direction.
    """
    vertices = {}
    punct = graph.puncture
    for vid, segs in graph.vertices.items():
        solid_idx = [i for i, s in enumerate(segs) if s[0] != "free"]
        punct_free = punct[1] if punct is not None and punct[0] == vid else None
        if not solid_idx:
            merged = tuple(d for s in segs if s[0] == "free" for d in s[1])
            vertices[vid] = [("free", merged)]
            if punct_free is not None:
                punct = (vid, 0, punct[2])
            continue
        new: list = []
        punct_new = None
        m = len(solid_idx)
        for j, si in enumerate(solid_idx):
            new.append(segs[si])
            nxt = solid_idx[(j + 1) % m]
            gap: tuple = ()
            k = (si + 1) % len(segs)
            while k != nxt:
                if punct_free is not None and k == punct_free:
                    punct_new = (vid, len(new), punct[2])
                gap = gap + segs[k][1]
                k = (k + 1) % len(segs)
            new.append(("free", gap))
        if punct_new is not None:
            punct = punct_new
        vertices[vid] = new
    return MarkedRibbonGraph(vertices, graph.edges, punct, graph.category)


def recover_diagram(graph: MarkedRibbonGraph) -> Diagram:
    """Rebuild a diagram realizing the graph as one of its state graphs."""
    return realize_graph(graph, need_puncture=graph.puncture is not None).diagram


def realize_graph(graph: MarkedRibbonGraph, need_puncture: bool) -> Realization:
    import itertools

    norm = _normalize_gaps(graph)
    if need_puncture and norm.puncture is None:
        raise VariantDecorationMismatch("a puncture is required for this variant")
    candidates = {eid: _edge_geometry_candidates(edge)
                  for eid, edge in norm.edges.items()}
    ids = sorted(candidates)
    total = 1
    for eid in ids:
        total *= len(candidates[eid])
    if total > 4096:
        raise InappropriateArrowStructure("too many ambiguous smoothing sites")
    last_error: Exception | None = None
    for combo in itertools.product(*(candidates[eid] for eid in ids)):
        geos = dict(zip(ids, combo))
        try:
            return _attempt_realize(norm, geos)
        except (InappropriateArrowStructure, ValidationError) as exc:
            last_error = exc
    raise InappropriateArrowStructure(
        f"no consistent diagram realizes this graph ({last_error})"
    )


def _attempt_realize(norm: MarkedRibbonGraph, geos: dict) -> Realization:
    for vid, segs in norm.vertices.items():
        if not any(s[0] != "free" for s in segs):
            if any(s[0] == "free" and s[1] for s in segs) or len(norm.vertices) > 1:
                raise InappropriateArrowStructure(
                    "crossingless closed components cannot be rebuilt"
                )

    # gap arcs: one per free segment; stubs resolved through edge geometries
    arc_name = {}
    for vid, segs in norm.vertices.items():
        for i, seg in enumerate(segs):
            if seg[0] == "free":
                arc_name[(vid, i)] = f"g{len(arc_name)}"

    # strand direction of each stub: under enters slot 0, leaves 2; the over
    # strand enters slot 3 on positive crossings, slot 1 on negative ones
    def edge_sign(eid: str) -> int:
        oriented = not norm.edges[eid].end_dec[0]
        return 1 if (geos[eid].smoothing == "A") == oriented else -1

    def stub_incoming(eid: str, stub: int) -> bool:
        if stub in (0, 2):
            return stub == 0
        return stub == (3 if edge_sign(eid) > 0 else 1)

    crossing_slots = {eid: [None] * 4 for eid in norm.edges}
    endpoints: dict[str, Endpoint] = {}
    markers: list[tuple[str, str, int]] = []
    bars: dict[str, tuple[int, ...]] = {}
    arc_dirs: dict[str, bool] = {}  # True: arc directed along the stretch traversal
    punct = None

    for vid, segs in norm.vertices.items():
        n = len(segs)
        if not any(s[0] != "free" for s in segs):
            continue
        for i, seg in enumerate(segs):
            if seg[0] != "free":
                continue
            arc = arc_name[(vid, i)]
            before = segs[(i - 1) % n]
            after = segs[(i + 1) % n]

            def attach(side_seg, incoming_side):
                """Resolve one end of the gap arc.

                incoming_side is True for the segment after the gap (the
                traversal enters it), False for the one before (it exits
                into the gap).  Returns (label kind, strand flows out of the
                gap here?).
                """
                if side_seg[0] == "mark":
                    role = side_seg[1] if incoming_side else side_seg[2]
                    return ("endpoint", role), role == "h"
                eid, end = side_seg[1], side_seg[2]
                geo = geos[eid]
                stub = geo.entry[end] if incoming_side else geo.exit[end]
                crossing_slots[eid][stub] = arc
                return ("stub", eid, stub), stub_incoming(eid, stub)

            (kind_b, *rest_b), flows_in_b = attach(before, False)
            (kind_a, *rest_a), flows_out_a = attach(after, True)
            # strand direction along the arc: from its out-stub to its in-stub
            if flows_in_b == flows_out_a:
                raise InappropriateArrowStructure(
                    f"inconsistent strand flow along gap {arc}"
                )
            forward = not flows_in_b  # stretch start emits the strand
            arc_dirs[arc] = forward
            if kind_b == "endpoint":
                role = rest_b[0]
                eid_name = f"ep{len(endpoints)}"
                endpoints[eid_name] = Endpoint(eid_name, _role_name(role), arc, "")
            if kind_a == "endpoint":
                role = rest_a[0]
                eid_name = f"ep{len(endpoints)}"
                endpoints[eid_name] = Endpoint(eid_name, _role_name(role), arc, "")
            decs = seg[1]
            nbars = sum(1 for d in decs if d == DEC_BAR)
            if any(d != DEC_BAR for d in decs):
                raise InappropriateArrowStructure(
                    "free arcs of a recoverable graph carry only bars"
                )
            if nbars:
                bars[arc] = tuple(range(nbars))
            if norm.puncture is not None and norm.puncture[:2] == (vid, i):
                side = norm.puncture[2]
                if not forward:
                    side = "left" if side == "right" else "right"
                punct = (arc, side)

    crossings = {}
    for eid, slots in crossing_slots.items():
        if any(s is None for s in slots):
            raise InappropriateArrowStructure(f"edge {eid}: unattached stub")
        crossings[eid] = Crossing(eid, "X", edge_sign(eid), tuple(slots))

    # component ids pair endpoints along the rebuilt strands; closed strands
    # get orientation markers
    diagram = _assemble(norm, crossings, endpoints, bars, punct, arc_dirs,
                        crossing_slots, arc_name)
    base_choice = {eid: geos[eid].smoothing for eid in norm.edges}
    rebuilt = build_graph(diagram, base_choice)
    if not ribbon.same_up_to_relabeling(rebuilt.graph, norm):
        raise InappropriateArrowStructure(
            "rebuilt state graph does not reproduce the input graph"
        )
    arc_of = {key: arc_name[key] for key in arc_name}
    return Realization(norm, diagram, base_choice, arc_of)


def _role_name(role: str) -> str:
    return "tail" if role == "t" else "head"


def _assemble(norm, crossings, endpoints, bars, punct, arc_dirs,
              crossing_slots, arc_name):
    """Trace strand components, assign component ids and closed markers."""
    arc_ends: dict[str, list] = {}
    for eid, slots in crossing_slots.items():
        for k, a in enumerate(slots):
            arc_ends.setdefault(a, []).append((eid, k))
    for ep in endpoints.values():
        arc_ends.setdefault(ep.arc, []).append((ep.id, 0))

    # direction of each arc: toward its strand-in end
    def strand_head(arc):
        ends = arc_ends.get(arc, [])
        if len(ends) != 2:
            raise InappropriateArrowStructure(f"arc {arc} has {len(ends)} ends")
        for node, slot in ends:
            if node in crossings:
                if _stub_in(crossings[node], slot):
                    return (node, slot)
            else:
                if endpoints[node].role == "head":
                    return (node, slot)
        raise InappropriateArrowStructure(f"arc {arc} has no strand-in end")

    def _stub_in(crossing, stub):
        if stub in (0, 2):
            return stub == 0
        return stub == (3 if crossing.sign > 0 else 1)

    visited: set[str] = set()
    comp_count = 0
    new_endpoints = {}
    tails = sorted((e for e in endpoints.values() if e.role == "tail"),
                   key=lambda e: e.id)

    def follow(arc):
        seen = []
        cur = arc
        while cur not in visited:
            visited.add(cur)
            seen.append(cur)
            node, slot = strand_head(cur)
            if node in endpoints:
                return seen, node
            cur = crossings[node].slots[(slot + 2) % 4]
        return seen, None

    for t in tails:
        comp = f"k{comp_count}"
        comp_count += 1
        chain, end_node = follow(t.arc)
        if end_node is None:
            raise InappropriateArrowStructure("open strand closed on itself")
        new_endpoints[t.id] = Endpoint(t.id, "tail", t.arc, comp)
        h = endpoints[end_node]
        new_endpoints[h.id] = Endpoint(h.id, "head", h.arc, comp)
    markers = []
    for arc in sorted(arc_ends):
        if arc in visited:
            continue
        chain, end_node = follow(arc)
        if end_node is not None:
            raise InappropriateArrowStructure("strand reaches a lone endpoint")
        node, slot = strand_head(arc)
        markers.append((arc, node, slot))

    has_bars = bool(bars)
    kappa = sum(1 for e in new_endpoints.values() if e.role == "tail")
    if kappa == 0:
        raise InappropriateArrowStructure("a recoverable graph needs a marking")
    if kappa > 1 or markers:
        category = LINKOID
    elif has_bars:
        category = TWISTED
    elif punct is not None:
        category = PLANAR
    else:
        category = "spherical"
    if category == LINKOID and (has_bars or punct is not None):
        raise VariantDecorationMismatch(
            "multi-marked graphs cannot carry bars or a puncture"
        )
    return Diagram(category, crossings, new_endpoints, bars, punct, tuple(markers))
