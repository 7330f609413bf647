import random

import pytest

from arrowpoly import diagram
from arrowpoly.errors import (
    ArcLabelCountMismatch,
    BarInClassicalCategory,
    CategoryMismatch,
    DiagramSyntaxError,
    InconsistentOrientation,
    MissingPuncture,
    NonSphericalMap,
)
from genutil import random_diagram


ALL_FIXTURES = [
    "trivial.knd", "k1.knd", "fig12.knd", "fig14.knd", "fig15.knd",
    "k3_planar.knd", "k3_spherical.knd", "linkoid2.knd", "linkoid_trivial.knd",
]


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_fixture_parses_and_roundtrips(fix, name):
    d = fix(name)
    again = diagram.parse(d.serialize())
    assert again.serialize() == d.serialize()
    assert d.same_up_to_relabeling(again)


def test_face_counts(fix):
    assert len(fix("trivial.knd").faces()) == 1
    # one crossing, two endpoints: V=3, E=3, so Euler forces F=2
    assert len(fix("k3_spherical.knd").faces()) == 2
    fig12 = fix("fig12.knd")
    v = len(fig12.crossings) + len(fig12.endpoints)
    e = len(fig12.arc_ends)
    assert v - e + len(fig12.faces()) == 2


def test_writhes(fix):
    assert fix("trivial.knd").writhe() == 0
    assert fix("k1.knd").writhe() == -2
    assert fix("k3_planar.knd").writhe() == -1
    assert fix("fig14.knd").writhe() == 0


def test_orientation_trace(fix):
    k1 = fix("k1.knd")
    trace = k1.orientation_trace()
    assert set(trace) == set(k1.arc_ends)
    # the strand leaves every crossing through the opposite slot
    for comp in k1.components:
        arcs = [a for a, _ in comp.steps]
        for a_in, a_out in zip(arcs, arcs[1:]):
            node, slot = trace[a_in][1]
            assert trace[a_out][0] == (node, (slot + 2) % 4)


def test_trivial_trace(fix):
    d = fix("trivial.knd")
    assert len(d.components) == 1
    assert d.components[0].steps == (("a0", True),)


def test_arc_label_count_mismatch():
    with pytest.raises(ArcLabelCountMismatch):
        diagram.parse(
            """
type: spherical
crossing c0 X- a0 a1 a1 a1
endpoint t tail a0 k0
endpoint h head a2 k0
"""
        )


def test_missing_puncture():
    with pytest.raises(MissingPuncture):
        diagram.parse("type: planar\nendpoint t tail a0 k0\nendpoint h head a0 k0\n")


def test_bar_in_classical_category():
    with pytest.raises(BarInClassicalCategory):
        diagram.parse(
            "type: spherical\nendpoint t tail a0 k0\nendpoint h head a0 k0\nbar a0 0\n"
        )


def test_closed_component_needs_marker():
    with pytest.raises(InconsistentOrientation):
        diagram.parse(
            """
type: linkoid
crossing c0 X+ a0 b1 a1 b0
crossing c1 X+ a1 b0 a2 b1
endpoint t1 tail a0 k0
endpoint h1 head a2 k0
"""
        )


def test_nonspherical_wiring_rejected():
    with pytest.raises(NonSphericalMap):
        diagram.parse(
            """
type: spherical
crossing c0 X- a0 a2 a1 a3
crossing c1 X- a1 a3 a2 a4
endpoint t tail a0 k0
endpoint h head a4 k0
"""
        )


def test_syntax_error_carries_line():
    with pytest.raises(DiagramSyntaxError) as err:
        diagram.parse("type: spherical\ncrossing c0 X- a0 a1\n")
    assert err.value.line == 2


def test_declared_sign_checked():
    with pytest.raises(InconsistentOrientation):
        diagram.parse(
            """
type: spherical
crossing c0 X+ a0 a1 a1 a2
endpoint t tail a0 k0
endpoint h head a2 k0
"""
        )


def test_concatenate_identity(fix):
    triv = fix("trivial.knd")
    k1 = fix("k1.knd")
    assert k1.concatenate(triv).same_up_to_relabeling(k1)
    assert triv.concatenate(k1).same_up_to_relabeling(k1)
    assert triv.concatenate(triv).same_up_to_relabeling(triv)


def test_concatenate_writhe_additive(fix):
    rng = random.Random(5)
    for _ in range(10):
        d1 = random_diagram(rng, "spherical", rng.randint(0, 3))
        d2 = random_diagram(rng, "spherical", rng.randint(0, 3))
        assert d1.concatenate(d2).writhe() == d1.writhe() + d2.writhe()


def test_concatenate_category_checks(fix):
    with pytest.raises(CategoryMismatch):
        fix("fig15.knd").concatenate(fix("fig15.knd"))
    with pytest.raises(CategoryMismatch):
        fix("k1.knd").concatenate(fix("fig14.knd"))


def test_canonical_erases_labels(fix):
    k1 = fix("k1.knd")
    renamed = diagram.parse(k1.serialize().replace(" a", " zz").replace("c0", "q9"))
    assert renamed.same_up_to_relabeling(k1)


def test_random_diagrams_validate():
    rng = random.Random(99)
    for cat in ("spherical", "planar", "virtual", "twisted", "linkoid"):
        for _ in range(8):
            d = random_diagram(rng, cat, rng.randint(0, 4))
            v = len(d.crossings) + len(d.endpoints)
            e = len(d.arc_ends)
            f = len(d.faces())
            assert v - e + f == 2 * d._count_map_components()
