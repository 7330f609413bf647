import random

import pytest

from arrowpoly import diagram, poly, states
from arrowpoly.errors import (
    CategoryMismatch,
    NoEmbedding,
    OddArrowLoopInClassical,
)
from arrowpoly.poly import ONE, Polynomial, parse
from arrowpoly.states import AGAINST, BAR, WITH, ReducedLabel, reduce_word
from genutil import random_diagram

GOLDEN = {
    "k1.knd": "A^-2 + L_1 - A^4*L_1",
    "fig12.knd": "-A^3 + A^-1 - A^-5 + A*L_1 - A^5*L_1",
    "fig14.knd": "A^2 + 1 + A^-2 - A^2*K_1*L_1 - A^-2*K_1*L_1",
    "fig15.knd": "A^-3 + A^-1*L_1 - A^3*L_1 + A^-1*L_0_l1 + 2*A*L_1_l1 + A^3*L_1_l2",
    "k3_planar.knd": "A + A^-1*L_0_l1",
}


# ---------------------------------------------------------------------------
# word reduction


def test_reduce_same_direction_pair_cancels():
    assert reduce_word((WITH, WITH), cyclic=True) == ReducedLabel("one")


def test_reduce_alternating_loop():
    assert reduce_word((WITH, AGAINST, WITH, AGAINST), cyclic=True) == ReducedLabel("kcirc", 2)


def test_reduce_single_bar_loop():
    assert reduce_word((BAR,), cyclic=True, twisted=True) == ReducedLabel("khalf")


def test_reduce_barred_arrows_on_loop():
    # a bar flips every arrow it passes; odd bars erase all arrows
    assert reduce_word((BAR, WITH, AGAINST), cyclic=True, twisted=True) == ReducedLabel("khalf")
    assert reduce_word((WITH, BAR, WITH, BAR), cyclic=True, twisted=True) == ReducedLabel("kcirc", 1)


def test_reduce_twisted_arc():
    lab = reduce_word((BAR, WITH, AGAINST), cyclic=False, twisted=True, end_roles=("tail", "head"))
    assert lab == ReducedLabel("lam", 1, primed=False)


def test_reduce_arc_prime_classification():
    lab = reduce_word((AGAINST, WITH), cyclic=False, end_roles=("tail", "head"))
    assert lab.kind == "lam" and lab.primed
    # reading the same word from the head end flips the classification back
    lab2 = reduce_word((AGAINST, WITH), cyclic=False, end_roles=("head", "tail"))
    assert lab2 == lab


def test_reduce_odd_arc_roles():
    assert reduce_word((WITH,), cyclic=False, end_roles=("tail", "tail")).odd_type == "t"
    assert reduce_word((WITH, AGAINST, WITH), cyclic=False, end_roles=("head", "head")).odd_type == "h"


def test_reduce_odd_loop_is_an_error():
    with pytest.raises(OddArrowLoopInClassical):
        reduce_word((WITH,), cyclic=True)


def _random_rewrite(rng, word, cyclic, twisted):
    """Reference reducer: apply one applicable rule at a random site until none fit."""
    w = list(word)
    while True:
        sites = []
        n = len(w)
        idxs = range(n) if cyclic else range(n - 1)
        for i in idxs:
            j = (i + 1) % n
            if j == i:
                break
            a, b = w[i], w[j]
            if a == b and a in (WITH, AGAINST):
                sites.append(("cancel", i))
            if a == b == BAR:
                sites.append(("cancel", i))
            if a == BAR and b in (WITH, AGAINST):
                sites.append(("pass", i))
            if b == BAR and a in (WITH, AGAINST):
                sites.append(("pass_back", i))
        if not cyclic and w:
            if w[0] == BAR:
                sites.append(("t0", 0))
            if w[-1] == BAR:
                sites.append(("t0", len(w) - 1))
        if not sites:
            return w
        kind, i = rng.choice(sites)
        j = (i + 1) % len(w)
        if kind == "cancel":
            w = [t for k, t in enumerate(w) if k not in (i, j)]
        elif kind == "t0":
            w.pop(i)
        elif kind == "pass":
            w[i], w[j] = (AGAINST if w[j] == WITH else WITH), BAR
        else:
            w[i], w[j] = BAR, (AGAINST if w[i] == WITH else WITH)


def test_reduction_confluence_randomized():
    rng = random.Random(17)
    for _ in range(300):
        cyclic = rng.random() < 0.5
        twisted = True
        n_arrows = 2 * rng.randint(0, 3)
        tokens = [rng.choice((WITH, AGAINST)) for _ in range(n_arrows)]
        tokens += [BAR] * rng.randint(0, 3)
        rng.shuffle(tokens)
        roles = None if cyclic else ("tail", "head")
        want = reduce_word(tuple(tokens), cyclic=cyclic, twisted=True, end_roles=roles)
        got = _random_rewrite(rng, tokens, cyclic, twisted)
        arrows = [t for t in got if t != BAR]
        bars = len(got) - len(arrows)
        if cyclic and bars % 2 == 1:
            assert want.kind == "khalf"
            # a lone bar erases every arrow it can reach
            assert not arrows or want.kind == "khalf"
        elif not arrows:
            assert want.kind == "one"
        elif cyclic:
            assert want == ReducedLabel("kcirc", len(arrows) // 2)
        else:
            assert want.kind == "lam" and want.index == len(arrows) // 2


# ---------------------------------------------------------------------------
# resolve


def test_resolve_trivial(fix):
    d = fix("trivial.knd")
    s = states.resolve(d, {})
    assert s.size == 1 and s.sigma == 0
    assert s.components[0].kind == "arc" and s.components[0].word == ()


def test_resolve_k1_state_shapes(fix):
    k1 = fix("k1.knd")
    sizes = {}
    for ch in states.all_choices(k1):
        s = states.resolve(k1, ch)
        sizes[states.sorted_choice_bits(k1, ch)] = s.size
    assert sizes == {"00": 2, "01": 1, "10": 1, "11": 1}
    s = states.resolve(k1, states.choice_from_bits(k1, "00"))
    arc = s.arcs[0]
    assert reduce_word(arc.word, cyclic=False, end_roles=arc.end_roles) == ReducedLabel("lam", 1)
    loop = s.loops[0]
    assert reduce_word(loop.word, cyclic=True) == ReducedLabel("one")


def test_state_count_and_sigma(fix):
    fig12 = fix("fig12.knd")
    choices = list(states.all_choices(fig12))
    assert len(choices) == 8
    for ch in choices:
        s = states.resolve(fig12, ch)
        assert abs(s.sigma) <= 3


def test_even_arrow_property_random():
    rng = random.Random(31)
    for cat in ("spherical", "virtual", "twisted", "planar"):
        for _ in range(6):
            d = random_diagram(rng, cat, rng.randint(1, 4))
            for ch in states.all_choices(d):
                s = states.resolve(d, ch)
                for comp in s.components:
                    arrows = sum(1 for t in comp.word if t != BAR)
                    assert arrows % 2 == 0


def test_classical_loop_purity_random():
    rng = random.Random(41)
    for cat in ("spherical", "planar"):
        for _ in range(8):
            d = random_diagram(rng, cat, rng.randint(1, 5))
            for ch in states.all_choices(d):
                s = states.resolve(d, ch)
                for comp in s.loops:
                    assert reduce_word(comp.word, cyclic=True).kind == "one"


# ---------------------------------------------------------------------------
# golden polynomials


def test_golden_k1(fix):
    assert states.arrow_polynomial(fix("k1.knd")) == parse(GOLDEN["k1.knd"])


def test_golden_fig12(fix):
    assert states.arrow_polynomial(fix("fig12.knd")) == parse(GOLDEN["fig12.knd"])


def test_golden_fig14(fix):
    assert states.twisted_arrow_polynomial(fix("fig14.knd")) == parse(GOLDEN["fig14.knd"])


def test_golden_fig15(fix):
    assert states.loop_arrow_polynomial(fix("fig15.knd")) == parse(GOLDEN["fig15.knd"])


def test_golden_k3(fix):
    assert states.loop_arrow_polynomial(fix("k3_planar.knd")) == parse(GOLDEN["k3_planar.knd"])


def test_trivial_polynomials(fix):
    assert states.arrow_polynomial(fix("trivial.knd")) == ONE
    assert states.linkoid_arrow_polynomial(fix("linkoid_trivial.knd")) == ONE
    planar_trivial = diagram.parse(
        "type: planar\nendpoint t tail a0 k0\nendpoint h head a0 k0\npuncture a0 left\n"
    )
    assert states.loop_arrow_polynomial(planar_trivial) == ONE


def test_zero_crossing_with_bar_is_trivial():
    d = diagram.parse(
        "type: twisted\nendpoint t tail a0 k0\nendpoint h head a0 k0\nbar a0 0\n"
    )
    assert states.twisted_arrow_polynomial(d) == ONE


def test_sphere_vs_plane_discrimination(fix):
    sph = fix("k3_spherical.knd")
    assert states.normalized(states.arrow_polynomial(sph), sph.writhe()) == ONE
    pla = fix("k3_planar.knd")
    loop_poly = states.loop_arrow_polynomial(pla)
    assert loop_poly != ONE
    assert loop_poly == parse("A + A^-1*L_0_l1")


def test_each_summand_linear_in_lambda(fix):
    for name in ("k1.knd", "fig12.knd", "fig14.knd"):
        d = fix(name)
        bracket = states.BRACKETS[states.variant_for(d)](d)
        for mono in bracket.terms:
            lam_exp = sum(
                e for v, e in mono if v.rank in (9, 10, 11)  # L, Lp, nested L
            )
            assert lam_exp <= 1


def test_variant_category_checks(fix):
    with pytest.raises(CategoryMismatch):
        states.arrow_polynomial(fix("fig14.knd"))
    with pytest.raises(CategoryMismatch):
        states.loop_arrow_polynomial(fix("k1.knd"))
    with pytest.raises(CategoryMismatch):
        states.linkoid_arrow_polynomial(fix("k1.knd"))


def test_twisted_embeds_classical(fix):
    k1 = fix("k1.knd")
    tp = states.twisted_arrow_polynomial(k1)
    ap = states.arrow_polynomial(k1)
    # collapsing primes in the arrow polynomial gives the twisted one
    collapsed = Polynomial.zero()
    for mono, coeff in ap.terms.items():
        q = Polynomial.const(coeff)
        for v, e in mono:
            if v.rank == 10:
                v = poly.lam(v[1], False)
            q = q * Polynomial.var(v, e)
        collapsed = collapsed + q
    assert collapsed == tp


# ---------------------------------------------------------------------------
# nesting


def test_nesting_trivial_planar():
    d = diagram.parse(
        "type: planar\nendpoint t tail a0 k0\nendpoint h head a0 k0\npuncture a0 left\n"
    )
    assert states.nesting(states.resolve(d, {})) == 0


def test_nesting_k3(fix):
    k3 = fix("k3_planar.knd")
    ells = {}
    for ch in states.all_choices(k3):
        s = states.resolve(k3, ch)
        ells[states.sorted_choice_bits(k3, ch)] = states.nesting(s)
    # the B-state wraps the arc in one loop, the A-state in none
    assert sorted(ells.values()) == [0, 1]


def test_nesting_requires_embedding(fix):
    k1 = fix("k1.knd")
    s = states.resolve(k1, states.choice_from_bits(k1, "00"))
    with pytest.raises(NoEmbedding):
        states.nesting(s)


def test_arc_side_counts_linkoid(fix):
    L = fix("linkoid2.knd")
    s = states.resolve(L, states.choice_from_bits(L, "11"))
    loop_idx = next(i for i, c in enumerate(s.components) if c.kind == "loop")
    assert states.arc_side_counts(s, loop_idx) == (1, 1)


def test_linkoid_counterexample_state(fix):
    L = fix("linkoid2.knd")
    s = states.resolve(L, states.choice_from_bits(L, "11"))
    labels = [
        reduce_word(c.word, cyclic=c.kind == "loop", end_roles=c.end_roles)
        for c in s.components
    ]
    kinds = sorted((l.kind, l.index) for l in labels)
    assert kinds == [("kcirc", 1), ("lamodd", 1), ("lamodd", 1)]
    assert {l.odd_type for l in labels if l.kind == "lamodd"} == {"h", "t"}


# ---------------------------------------------------------------------------
# normalization, concatenation, determinism


def test_normalized_examples(fix):
    assert states.normalized(ONE, 0) == ONE
    assert states.normalized(poly.minus_A_cubed(1), 1) == ONE
    k1a = states.arrow_polynomial(fix("k1.knd"))
    assert states.normalized(k1a, -2) == parse("A^4 + A^6*L_1 - A^10*L_1")


def test_concatenation_multiplicative(fix):
    k1 = fix("k1.knd")
    fig12 = fix("fig12.knd")
    for d1, d2 in ((k1, k1), (k1, fig12), (fig12, k1)):
        product = (states.arrow_polynomial(d1) * states.arrow_polynomial(d2)).lambda_fusion()
        assert product == states.arrow_polynomial(d1.concatenate(d2))


def test_worker_count_does_not_change_results(fix):
    fig12 = fix("fig12.knd")
    p1 = states.arrow_polynomial(fig12, workers=1)
    p4 = states.arrow_polynomial(fig12, workers=4)
    assert p1 == p4 and p1.text() == p4.text()
