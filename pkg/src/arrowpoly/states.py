"""Oriented state expansion, word reduction, nesting, and the bracket family.

Tokens: ``'>'`` arrow along the traversal, ``'<'`` arrow against it, ``'|'``
a bar.  A smoothing joins slot pairs of a crossing: the A-smoothing joins
(0,1) and (2,3), the B-smoothing (0,3) and (1,2), with slot 0 the incoming
under-strand.  A smoothing is disoriented when the strand flow conflicts on
its joining arcs; the two arrows it creates both run counterclockwise around
the old crossing point.  Of the two mirror-image conventions this is the one
that reproduces the worked invariant values with unprimed L variables.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import poly
from .diagram import Diagram, LINKOID, PLANAR, SPHERICAL, TWISTED, VIRTUAL
from .errors import (
    CategoryMismatch,
    NoEmbedding,
    OddArrowLoopInClassical,
    ValidationError,
)
from .poly import Polynomial

WITH = ">"
AGAINST = "<"
BAR = "|"

JOINS = {"A": ((0, 1), (2, 3)), "B": ((0, 3), (1, 2))}

# arrow direction per joining arc, as (from_slot, to_slot); every arrow runs
# counterclockwise around the old crossing point
ARROW_DIR = {
    ("A", (0, 1)): (0, 1),
    ("A", (2, 3)): (2, 3),
    ("B", (0, 3)): (3, 0),
    ("B", (1, 2)): (1, 2),
}


def join_partner(smoothing: str, slot: int) -> int:
    for p, q in JOINS[smoothing]:
        if slot == p:
            return q
        if slot == q:
            return p
    raise ValueError(slot)


# ---------------------------------------------------------------------------
# smoothing choices


def sorted_choice_bits(diagram: Diagram, choice: dict[str, str]) -> str:
    return "".join(
        "0" if choice[c] == "A" else "1" for c in diagram.classical_ids()
    )


def choice_from_bits(diagram: Diagram, bits: str) -> dict[str, str]:
    ids = diagram.classical_ids()
    if len(bits) != len(ids) or any(b not in "01" for b in bits):
        raise ValidationError(f"state bitstring {bits!r} does not match {len(ids)} crossings")
    return {c: ("A" if b == "0" else "B") for c, b in zip(ids, bits)}


def all_choices(diagram: Diagram):
    ids = diagram.classical_ids()
    for mask in range(1 << len(ids)):
        yield {c: ("B" if (mask >> k) & 1 else "A") for k, c in enumerate(ids)}


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class StateComponent:
    kind: str  # "loop" | "arc"
    word: tuple[str, ...]
    steps: tuple[tuple, ...]  # ("arc", a, fwd) | ("join", c, k, j) | ("virt", c, k, j)
    end_roles: tuple[str, str] | None = None  # roles at traversal start/end
    comp_id: str | None = None


@dataclass
class State:
    diagram: Diagram
    choice: dict[str, str]
    components: list[StateComponent]
    sigma: int

    @property
    def size(self) -> int:
        return len(self.components)

    @property
    def loops(self) -> list[StateComponent]:
        return [c for c in self.components if c.kind == "loop"]

    @property
    def arcs(self) -> list[StateComponent]:
        return [c for c in self.components if c.kind == "arc"]


def resolve(diagram: Diagram, choice: dict[str, str]) -> State:
    """Smooth every classical crossing and trace the resulting components."""
    ids = diagram.classical_ids()
    if sorted(choice) != ids:
        raise ValidationError("smoothing choice must cover exactly the classical crossings")

    visited: set[str] = set()

    def emit_arc(arc: str, forward: bool, word: list, steps: list) -> None:
        visited.add(arc)
        steps.append(("arc", arc, forward))
        bars = diagram.bars.get(arc, ())
        word.extend(BAR for _ in (bars if forward else reversed(bars)))

    def trace(start_arc: str, start_dest, stop_at_endpoint: bool):
        """Walk from start_arc heading toward start_dest until closing or endpoint."""
        word: list[str] = []
        steps: list[tuple] = []
        arc, dest = start_arc, start_dest
        first = True
        while True:
            if not first and arc == start_arc and dest == start_dest:
                return word, steps, None
            first = False
            fwd = diagram.arc_dir[arc][1] == dest
            emit_arc(arc, fwd, word, steps)
            node, slot = dest
            if node in diagram.endpoints:
                return word, steps, node
            cr = diagram.crossings[node]
            if cr.kind == "V":
                out = (slot + 2) % 4
                steps.append(("virt", node, slot, out))
            else:
                out = join_partner(choice[node], slot)
                steps.append(("join", node, slot, out))
                pair = tuple(sorted((slot, out)))
                if _disoriented(diagram, node, choice[node]):
                    dir_ = ARROW_DIR[(choice[node], pair)]
                    word.append(WITH if dir_ == (slot, out) else AGAINST)
            arc = cr.slots[out]
            dest = diagram._other_end(arc, (node, out))

    components: list[StateComponent] = []
    # state arcs may pair any two endpoints; prefer starting at tails so that
    # tail->head arcs are read in their natural direction
    pending = sorted(
        diagram.endpoints.values(), key=lambda e: (e.role != "tail", e.component, e.id)
    )
    used: set[str] = set()
    for ep in pending:
        if ep.id in used:
            continue
        used.add(ep.id)
        start_dest = diagram._other_end(ep.arc, (ep.id, 0))
        word, steps, end_node = trace(ep.arc, start_dest, True)
        used.add(end_node)
        components.append(
            StateComponent(
                kind="arc",
                word=tuple(word),
                steps=tuple(steps),
                end_roles=(ep.role, diagram.endpoints[end_node].role),
                comp_id=ep.component,
            )
        )
    for arc in sorted(diagram.arc_ends):
        if arc in visited:
            continue
        word, steps, end_node = trace(arc, diagram.arc_dir[arc][1], False)
        if end_node is not None:
            raise ValidationError("loop trace reached an endpoint")
        components.append(StateComponent(kind="loop", word=tuple(word), steps=tuple(steps)))

    n_a = sum(1 for v in choice.values() if v == "A")
    return State(diagram, choice, components, sigma=2 * n_a - len(ids))


def _disoriented(diagram: Diagram, crossing_id: str, smoothing: str) -> bool:
    (p, q), _ = JOINS[smoothing]
    return diagram.incoming(crossing_id, p) == diagram.incoming(crossing_id, q)


# ---------------------------------------------------------------------------
# word reduction


@dataclass(frozen=True)
class ReducedLabel:
    kind: str  # "one" | "kcirc" | "khalf" | "lam" | "lamodd"
    index: int = 0  # kcirc/lam: i with 2i arrows; lamodd: odd arrow count
    primed: bool = False
    odd_type: str | None = None  # "h" | "t"


ONE_LABEL = ReducedLabel("one")


def _strip_bars(word, twisted: bool, cyclic: bool):
    """Remove bars, flipping each arrow once per bar that precedes it.

    Bars are swept to the far end (cyclically to the seam), each sweep
    flipping the arrows it passes; an even remainder cancels, an odd
    remainder survives only on loops.
    """
    nbars = sum(1 for t in word if t == BAR)
    if nbars == 0:
        return [t for t in word], False
    if not twisted:
        raise ValidationError("bars in a classical-category word")
    arrows = []
    seen_bars = 0
    for t in word:
        if t == BAR:
            seen_bars += 1
        elif seen_bars % 2 == 1:
            arrows.append(AGAINST if t == WITH else WITH)
        else:
            arrows.append(t)
    odd = nbars % 2 == 1
    return arrows, odd


def _stack_cancel(tokens):
    out = []
    for t in tokens:
        if out and out[-1] == t:
            out.pop()
        else:
            out.append(t)
    return out


def reduce_word(
    word,
    cyclic: bool,
    twisted: bool = False,
    end_roles: tuple[str, str] | None = None,
) -> ReducedLabel:
    """Normal form of one state component word.

    Adjacent equal-direction arrows cancel; bar pairs cancel; a bar passing
    an arrow flips it; bars slide off arc ends.  Loops with an odd number of
    bars lose all arrows and become K_1/2.
    """
    if cyclic == (end_roles is not None):
        raise ValueError("end_roles must be given exactly for non-cyclic words")
    arrows, odd_bars = _strip_bars(word, twisted, cyclic)
    if cyclic:
        if odd_bars:
            return ReducedLabel("khalf")
        reduced = _stack_cancel(arrows)
        while len(reduced) >= 2 and reduced[0] == reduced[-1]:
            reduced = reduced[1:-1]
        n = len(reduced)
        if n % 2 == 1:
            raise OddArrowLoopInClassical(f"loop reduced to {n} arrows")
        return ONE_LABEL if n == 0 else ReducedLabel("kcirc", n // 2)
    # arcs: odd bars also slide off the ends
    reduced = _stack_cancel(arrows)
    n = len(reduced)
    roles = end_roles
    expected_even = set(roles) == {"tail", "head"}
    if (n % 2 == 0) != expected_even:
        raise OddArrowLoopInClassical(
            f"arc with ends {roles} reduced to {n} arrows"
        )
    if n == 0:
        return ONE_LABEL
    if n % 2 == 1:
        return ReducedLabel("lamodd", n, odd_type="t" if roles[0] == "tail" else "h")
    if roles[0] == "head":  # read the word from the tail end
        reduced = [WITH if t == AGAINST else AGAINST for t in reversed(reduced)]
    # the twisted setting identifies primed and unprimed arcs
    return ReducedLabel("lam", n // 2, primed=not twisted and reduced[0] == AGAINST)


# ---------------------------------------------------------------------------
# planar/linkoid embedding of a state


class StateRegions:
    """Regions of the smoothed diagram and loop-separation queries.

    Regions are the faces of the diagram merged across each smoothing
    channel.  A loop separates two features iff they fall in different
    connected components of the region-adjacency graph once the loop's own
    adjacencies are cut.
    """

    def __init__(self, state: State):
        diagram = state.diagram
        if diagram._count_map_components() > 1 and state.loops:
            raise NoEmbedding("nesting is undefined for a disconnected diagram map")
        fd = diagram._face_data
        self._parent = list(range(fd.n_faces))
        for cid, sm in state.choice.items():
            merged = (1, 3) if sm == "A" else (0, 2)
            self._union(fd.corner_face[(cid, merged[0])], fd.corner_face[(cid, merged[1])])
        # adjacency records (left_region, right_region) per step per component
        self._adj: list[list[tuple[int, int]]] = []
        for comp in state.components:
            pairs = []
            for step in comp.steps:
                if step[0] == "arc":
                    _, arc, fwd = step
                    lf, rf = diagram._face_data.arc_faces[arc]
                    pair = (self._find(lf), self._find(rf))
                    pairs.append(pair if fwd else (pair[1], pair[0]))
                elif step[0] == "join":
                    _, cid, k, j = step
                    sm = state.choice[cid]
                    channel = self._find(
                        fd.corner_face[(cid, 1 if sm == "A" else 0)]
                    )
                    if j == (k + 1) % 4:
                        pairs.append((channel, self._find(fd.corner_face[(cid, k)])))
                    else:
                        pairs.append((self._find(fd.corner_face[(cid, j)]), channel))
            self._adj.append(pairs)
        self._state = state

    def _find(self, x: int) -> int:
        p = self._parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def _union(self, x: int, y: int) -> None:
        rx, ry = self._find(x), self._find(y)
        if rx != ry:
            self._parent[rx] = ry

    def region_of_face(self, face: int) -> int:
        return self._find(face)

    def component_region(self, index: int) -> int:
        return self._adj[index][0][0]

    def _sides_cut_at(self, loop_index: int) -> dict[int, int]:
        """Connected components of the region graph with one loop's edges removed."""
        parent: dict[int, int] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, pairs in enumerate(self._adj):
            for l, r in pairs:
                parent.setdefault(l, l)
                parent.setdefault(r, r)
                if i != loop_index:
                    rl, rr = find(l), find(r)
                    if rl != rr:
                        parent[rl] = rr
        return {x: find(x) for x in parent}

    def separates(self, loop_index: int, region1: int, region2: int) -> bool:
        sides = self._sides_cut_at(loop_index)
        return sides[region1] != sides[region2]

    def arc_side_counts(self, loop_index: int) -> tuple[int, int]:
        """Arc-component counts on the two sides of one loop."""
        sides = self._sides_cut_at(loop_index)
        comps = self._state.components
        here = sides[self._adj[loop_index][0][0]]
        n_same = n_other = 0
        for i, comp in enumerate(comps):
            if comp.kind != "arc":
                continue
            if sides[self.component_region(i)] == here:
                n_same += 1
            else:
                n_other += 1
        return (min(n_same, n_other), max(n_same, n_other))


def nesting(state: State) -> int:
    """Number of loops separating the arc component from the puncture."""
    diagram = state.diagram
    if diagram.category not in (PLANAR,):
        raise NoEmbedding(f"nesting needs a punctured diagram, not {diagram.category}")
    regions = StateRegions(state)
    return len(_separating_loops(state, regions))


def _separating_loops(state: State, regions: StateRegions) -> list[int]:
    diagram = state.diagram
    arc, side = diagram.puncture
    punct = regions.region_of_face(diagram.face_of_arc_side(arc, side))
    arc_index = next(i for i, c in enumerate(state.components) if c.kind == "arc")
    arc_region = regions.component_region(arc_index)
    out = []
    for i, comp in enumerate(state.components):
        if comp.kind == "loop" and regions.separates(i, arc_region, punct):
            out.append(i)
    return out


def arc_side_counts(state: State, loop_index: int) -> tuple[int, int]:
    """(n_i, n_e) arc counts for one loop of a spherical linkoid state."""
    if state.diagram.category not in (LINKOID, PLANAR):
        raise NoEmbedding(f"{state.diagram.category} states carry no embedding")
    return StateRegions(state).arc_side_counts(loop_index)


# ---------------------------------------------------------------------------
# bracket valuations


def _weight(state: State) -> Polynomial:
    n_a = sum(1 for v in state.choice.values() if v == "A")
    n_b = len(state.choice) - n_a
    return Polynomial.monomial(1, [(poly.A, n_a), (poly.B, n_b)])


def _state_sum(diagram: Diagram, valuation, workers: int = 1) -> Polynomial:
    choices = list(all_choices(diagram))

    def one(choice):
        return valuation(resolve(diagram, choice))

    if workers > 1 and len(choices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, choices))
    else:
        parts = [one(c) for c in choices]
    total = Polynomial.zero()
    for p in parts:
        total = total + p
    return total


def _classical_loop_label(comp: StateComponent, twisted: bool) -> ReducedLabel:
    return reduce_word(comp.word, cyclic=True, twisted=twisted)


def arrow_bracket(diagram: Diagram, workers: int = 1) -> Polynomial:
    """State sum over Z[A, B, d, K_i, L_i, Lp_i] for spherical/virtual knotoids."""
    if diagram.category not in (SPHERICAL, VIRTUAL):
        raise CategoryMismatch(f"arrow bracket is undefined for {diagram.category}")

    def value(state: State) -> Polynomial:
        term = _weight(state)
        for comp in state.loops:
            label = _classical_loop_label(comp, twisted=False)
            if label.kind == "one":
                term = term * poly.P_d
            elif label.kind == "kcirc":
                if diagram.category == SPHERICAL:
                    raise OddArrowLoopInClassical(
                        "irreducible arrows on a loop of a classical spherical state"
                    )
                term = term * poly.P_d * Polynomial.var(poly.K(label.index))
            else:
                raise ValidationError(f"unexpected loop label {label}")
        for comp in state.arcs:
            label = reduce_word(comp.word, cyclic=False, twisted=False, end_roles=comp.end_roles)
            if label.kind == "lam":
                term = term * Polynomial.var(poly.lam(label.index, label.primed))
            elif label.kind != "one":
                raise ValidationError(f"unexpected arc label {label}")
        return term

    return _state_sum(diagram, value, workers)


def arrow_polynomial(diagram: Diagram, workers: int = 1) -> Polynomial:
    return poly.specialize(arrow_bracket(diagram, workers))


def twisted_arrow_bracket(diagram: Diagram, workers: int = 1) -> Polynomial:
    """As the arrow bracket, with K_1/2 loops and primes collapsed."""
    if diagram.category not in (TWISTED, SPHERICAL, VIRTUAL):
        raise CategoryMismatch(f"twisted arrow bracket is undefined for {diagram.category}")

    def value(state: State) -> Polynomial:
        term = _weight(state)
        for comp in state.loops:
            label = reduce_word(comp.word, cyclic=True, twisted=True)
            if label.kind == "one":
                term = term * poly.P_d
            elif label.kind == "kcirc":
                term = term * poly.P_d * Polynomial.var(poly.K(label.index))
            elif label.kind == "khalf":
                term = term * Polynomial.var(poly.K_HALF)
        for comp in state.arcs:
            label = reduce_word(comp.word, cyclic=False, twisted=True, end_roles=comp.end_roles)
            if label.kind == "lam":
                term = term * Polynomial.var(poly.lam(label.index, False))
            elif label.kind != "one":
                raise ValidationError(f"unexpected arc label {label}")
        return term

    return _state_sum(diagram, value, workers)


def twisted_arrow_polynomial(diagram: Diagram, workers: int = 1) -> Polynomial:
    return poly.specialize(twisted_arrow_bracket(diagram, workers))


def loop_arrow_bracket(diagram: Diagram, workers: int = 1) -> Polynomial:
    """Planar bracket: the arc factor absorbs the loops that shield it from
    the puncture; every other loop contributes a plain d."""
    if diagram.category != PLANAR:
        raise CategoryMismatch(f"loop arrow bracket is undefined for {diagram.category}")

    def value(state: State) -> Polynomial:
        regions = StateRegions(state)
        shielding = set(_separating_loops(state, regions))
        term = _weight(state)
        for i, comp in enumerate(state.components):
            if comp.kind != "loop":
                continue
            label = _classical_loop_label(comp, twisted=False)
            if label.kind != "one":
                raise OddArrowLoopInClassical(
                    "irreducible arrows on a loop of a planar state"
                )
            if i not in shielding:
                term = term * poly.P_d
        ell = len(shielding)
        comp = state.arcs[0]
        label = reduce_word(comp.word, cyclic=False, twisted=False, end_roles=comp.end_roles)
        if label.kind not in ("one", "lam"):
            raise ValidationError(f"unexpected arc label {label}")
        i = label.index if label.kind == "lam" else 0
        primed = label.primed if label.kind == "lam" else False
        if ell > 0:
            term = term * Polynomial.var(poly.lam_loop(i, primed and i > 0, ell))
        elif i > 0:
            term = term * Polynomial.var(poly.lam(i, primed))
        return term

    return _state_sum(diagram, value, workers)


def loop_arrow_polynomial(diagram: Diagram, workers: int = 1) -> Polynomial:
    return poly.specialize(loop_arrow_bracket(diagram, workers))


def linkoid_arrow_bracket(diagram: Diagram, workers: int = 1) -> Polynomial:
    """Spherical-linkoid bracket with indexed loop variables K_i^l."""
    if diagram.category != LINKOID:
        raise CategoryMismatch(f"linkoid arrow bracket is undefined for {diagram.category}")

    def value(state: State) -> Polynomial:
        regions = StateRegions(state) if state.loops else None
        term = _weight(state)
        for i, comp in enumerate(state.components):
            if comp.kind == "loop":
                label = _classical_loop_label(comp, twisted=False)
                idx = label.index if label.kind == "kcirc" else 0
                ell = regions.arc_side_counts(i)[0]
                term = term * poly.P_d
                if (idx, ell) != (0, 0):
                    term = term * Polynomial.var(poly.K_loop(idx, ell))
            else:
                label = reduce_word(comp.word, cyclic=False, twisted=False, end_roles=comp.end_roles)
                if label.kind == "lam":
                    term = term * Polynomial.var(poly.lam(label.index, label.primed))
                elif label.kind == "lamodd":
                    var = poly.lam_tail if label.odd_type == "t" else poly.lam_head
                    term = term * Polynomial.var(var(label.index))
        return term

    return _state_sum(diagram, value, workers)


def linkoid_arrow_polynomial(diagram: Diagram, workers: int = 1) -> Polynomial:
    return poly.specialize(linkoid_arrow_bracket(diagram, workers))


def normalized(p: Polynomial, writhe: int) -> Polynomial:
    """Multiply by the framing correction (-A^3)^(-writhe)."""
    return p * poly.minus_A_cubed(-writhe)


VARIANTS = {
    SPHERICAL: "arrow",
    VIRTUAL: "arrow",
    TWISTED: "twisted",
    PLANAR: "loop",
    LINKOID: "linkoid",
}

BRACKETS = {
    "arrow": arrow_bracket,
    "twisted": twisted_arrow_bracket,
    "loop": loop_arrow_bracket,
    "linkoid": linkoid_arrow_bracket,
}

POLYNOMIALS = {
    "arrow": arrow_polynomial,
    "twisted": twisted_arrow_polynomial,
    "loop": loop_arrow_polynomial,
    "linkoid": linkoid_arrow_polynomial,
}


def variant_for(diagram: Diagram) -> str:
    return VARIANTS[diagram.category]
