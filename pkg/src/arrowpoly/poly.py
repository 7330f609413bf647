"""Exact sparse multivariate Laurent polynomials over the integers.

The variable alphabet is fixed: the bracket variables ``A``, ``B``, ``d``,
the subgraph-sum variables ``a``, ``c`` and per-edge weights ``b{name}``,
and the reduced-state-component variables ``K_i``, ``K_1/2``, ``K_i^l``,
``L_i``, ``Lp_i``, ``(L_i)^l``, ``Lh_i/2``, ``Lt_i/2``.  Coefficients are
arbitrary-precision integers.  Polynomials are immutable values; all
operations are pure.
"""

from __future__ import annotations

import re
from typing import Iterable

from .errors import NonInvertibleSubstitution, PolynomialParseError, UnfusableMonomial

# Kind ranks fix the total order on variables:
# A < B < a < c < d < b{edge} < K < K_1/2 < K^l < L < Lp < L^l < Lh < Lt
_K_A = 0
_K_B = 1
_K_SMALL_A = 2
_K_SMALL_C = 3
_K_SMALL_D = 4
_K_EDGE = 5
_K_K = 6
_K_KHALF = 7
_K_KLOOP = 8
_K_LAM = 9
_K_LAMP = 10
_K_LAMLOOP = 11
_K_LAMHEAD = 12
_K_LAMTAIL = 13


class Var(tuple):
    """A variable identity: ``(kind_rank, *parameters)``, totally ordered."""

    __slots__ = ()

    def __new__(cls, rank: int, *key):
        return super().__new__(cls, (rank, *key))

    @property
    def rank(self) -> int:
        return self[0]

    def text(self) -> str:
        r = self[0]
        if r == _K_A:
            return "A"
        if r == _K_B:
            return "B"
        if r == _K_SMALL_A:
            return "a"
        if r == _K_SMALL_C:
            return "c"
        if r == _K_SMALL_D:
            return "d"
        if r == _K_EDGE:
            return "b" + self[1]
        if r == _K_K:
            return f"K_{self[1]}"
        if r == _K_KHALF:
            return "K_1/2"
        if r == _K_KLOOP:
            return f"K_{self[1]}_l{self[2]}"
        if r == _K_LAM:
            return f"L_{self[1]}"
        if r == _K_LAMP:
            return f"Lp_{self[1]}"
        if r == _K_LAMLOOP:
            prefix = "Lp" if self[2] else "L"
            return f"{prefix}_{self[1]}_l{self[3]}"
        if r == _K_LAMHEAD:
            return f"Lh_{self[1]}/2"
        if r == _K_LAMTAIL:
            return f"Lt_{self[1]}/2"
        raise ValueError(f"unknown variable rank {r}")

    def __repr__(self):
        return f"Var({self.text()})"


A = Var(_K_A)
B = Var(_K_B)
VAR_a = Var(_K_SMALL_A)
VAR_c = Var(_K_SMALL_C)
d = Var(_K_SMALL_D)
K_HALF = Var(_K_KHALF)


def edge_weight(name: str) -> Var:
    return Var(_K_EDGE, str(name))


def K(i: int) -> Var:
    """Loop variable ``K_i`` for a loop with ``2i`` alternating arrows, i >= 1."""
    if i < 1:
        raise ValueError("K_0 is the constant 1 and is never materialized")
    return Var(_K_K, i)


def K_loop(i: int, loops: int) -> Var:
    """Indexed loop variable ``K_i^l``; ``K_0^0`` is never materialized."""
    if i < 0 or loops < 0:
        raise ValueError("K_loop indices must be nonnegative")
    if i == 0 and loops == 0:
        raise ValueError("K_0^0 is the constant 1 and is never materialized")
    return Var(_K_KLOOP, i, loops)


def lam(i: int, primed: bool = False) -> Var:
    """Arc variable ``L_i`` / ``Lp_i`` with ``2i`` arrows, i >= 1."""
    if i < 1:
        raise ValueError("L_0 is the constant 1 and is never materialized")
    return Var(_K_LAMP if primed else _K_LAM, i)


def lam_loop(i: int, primed: bool, loops: int) -> Var:
    """Nested arc variable ``(L_i)^l`` with l >= 1 encircling loops."""
    if loops < 1:
        raise ValueError("use lam() for an unnested arc")
    if i < 0:
        raise ValueError("arrow index must be nonnegative")
    if i == 0 and primed:
        raise ValueError("(L_0)^l has no primed form")
    return Var(_K_LAMLOOP, i, bool(primed), loops)


def lam_head(numerator: int) -> Var:
    """Arc variable ``Lh_i/2`` for an arc with two head ends and ``i`` arrows."""
    if numerator < 1 or numerator % 2 == 0:
        raise ValueError("half-integer index must have an odd positive numerator")
    return Var(_K_LAMHEAD, numerator)


def lam_tail(numerator: int) -> Var:
    if numerator < 1 or numerator % 2 == 0:
        raise ValueError("half-integer index must have an odd positive numerator")
    return Var(_K_LAMTAIL, numerator)


# A monomial is a tuple of (Var, nonzero exponent) pairs sorted by variable.
Monomial = tuple

_ONE_MONO: Monomial = ()

_STATE_VAR_RANKS = frozenset(
    [_K_K, _K_KHALF, _K_KLOOP, _K_LAM, _K_LAMP, _K_LAMLOOP, _K_LAMHEAD, _K_LAMTAIL]
)


def _mono(pairs: Iterable[tuple[Var, int]]) -> Monomial:
    acc: dict[Var, int] = {}
    for v, e in pairs:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in acc.items() if e != 0))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    return _mono(list(m1) + list(m2))


class Polynomial:
    """A sparse integer Laurent polynomial.  Equal iff term maps are equal."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: dict[Monomial, int] | None = None):
        if terms:
            self._terms = {m: c for m, c in terms.items() if c != 0}
        else:
            self._terms = {}
        self._hash = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def const(n: int) -> "Polynomial":
        return Polynomial({_ONE_MONO: n})

    @staticmethod
    def var(v: Var, exp: int = 1, coeff: int = 1) -> "Polynomial":
        if exp == 0:
            return Polynomial.const(coeff)
        return Polynomial({_mono([(v, exp)]): coeff})

    @staticmethod
    def monomial(coeff: int, pairs: Iterable[tuple[Var, int]]) -> "Polynomial":
        return Polynomial({_mono(pairs): coeff})

    # -- queries -------------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, int]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"Polynomial({self.text()!r})"

    # -- ring operations ------------------------------------------------

    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, int] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            return self.inverse() ** (-n)
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_unit_monomial(self) -> bool:
        return len(self._terms) == 1 and abs(next(iter(self._terms.values()))) == 1

    def inverse(self) -> "Polynomial":
        """Invert a unit monomial (coefficient +-1)."""
        if not self.is_unit_monomial():
            raise NonInvertibleSubstitution(f"{self.text()} is not a unit monomial")
        (m, c), = self._terms.items()
        return Polynomial({tuple((v, -e) for v, e in m): c})

    # -- substitution ----------------------------------------------------

    def substitute(self, var: Var, value: "Polynomial") -> "Polynomial":
        """Replace every occurrence of ``var**n`` by ``value**n``.

        A negative ``n`` requires ``value`` to be an invertible monomial.
        ``value`` must not itself contain ``var``.
        """
        value = _coerce(value)
        if value._terms == {((var, 1),): 1}:
            return self  # identity substitution
        if any(v == var for m in value._terms for v, _ in m):
            raise NonInvertibleSubstitution("substitution value contains the variable itself")
        out = Polynomial.zero()
        needs_inverse = any(
            e < 0 for m in self._terms for v, e in m if v == var
        )
        if needs_inverse and not value.is_unit_monomial():
            raise NonInvertibleSubstitution(
                f"negative power of {var.text()} with non-unit value {value.text()}"
            )
        for m, c in self._terms.items():
            exp = 0
            rest = []
            for v, e in m:
                if v == var:
                    exp = e
                else:
                    rest.append((v, e))
            term = Polynomial({tuple(rest): c})
            if exp:
                term = term * (value ** exp)
            out = out + term
        return out

    def invert_variable(self, var: Var) -> "Polynomial":
        """Replace var by 1/var, negating its exponent in every term."""
        out: dict[Monomial, int] = {}
        for m, c in self._terms.items():
            out[_mono((v, -e if v == var else e) for v, e in m)] = c
        return Polynomial(out)

    def divide_exact(self, var: Var, power: int) -> "Polynomial":
        """Divide by ``var**power``; every term must carry at least that power."""
        out: dict[Monomial, int] = {}
        for m, c in self._terms.items():
            have = 0
            rest = []
            for v, e in m:
                if v == var:
                    have = e
                else:
                    rest.append((v, e))
            if have < power:
                raise NonDivisible(var, power, self)
            new = have - power
            if new:
                rest.append((var, new))
            out[_mono(rest)] = c
        return Polynomial(out)

    # -- fusion -----------------------------------------------------------

    def lambda_fusion(self) -> "Polynomial":
        """Rewrite each monomial by the arc-concatenation fusion rules.

        ``L_i * L_j -> L_{i+j}`` and ``Lp_i * Lp_j -> Lp_{i+j}``; a mixed
        product keeps the family of the larger index, ``L_i * Lp_j ->
        L_{i-j}`` for ``i > j`` (and symmetrically), while equal mixed
        indices cancel to 1.  These are exactly the rules induced by
        concatenating and reducing the underlying arrow words, so the
        result does not depend on pairing order.  Variables outside the
        plain ``L``/``Lp`` families (nested, half-integer) cannot appear
        with the other fusion operands and raise ``UnfusableMonomial``;
        everything else is carried through as a spectator.
        """
        out = Polynomial.zero()
        for m, c in self._terms.items():
            spect = []
            fuse: list[tuple[bool, int]] = []  # (primed, index) with multiplicity
            for v, e in m:
                r = v.rank
                if r in (_K_LAM, _K_LAMP):
                    if e < 0:
                        raise UnfusableMonomial(f"negative power of {v.text()}")
                    fuse.extend([(r == _K_LAMP, v[1])] * e)
                elif r in (_K_LAMLOOP, _K_LAMHEAD, _K_LAMTAIL):
                    raise UnfusableMonomial(
                        f"{v.text()} is outside the concatenation fusion alphabet"
                    )
                else:
                    spect.append((v, e))
            primed, idx = False, 0
            for p2, i2 in fuse:
                if idx == 0:
                    primed, idx = p2, i2
                elif primed == p2:
                    idx += i2
                elif i2 == idx:
                    primed, idx = False, 0
                else:
                    if i2 > idx:
                        primed = p2
                    idx = abs(idx - i2)
            if idx:
                spect.append((lam(idx, primed), 1))
            out = out + Polynomial({_mono(spect): c})
        return out

    # -- rendering ----------------------------------------------------------

    def text(self) -> str:
        return canonical_text(self)

    def structured(self) -> list[dict]:
        """Term list for machine output: coefficient plus [variable, exponent] pairs."""
        items = sorted(self._terms.items(), key=lambda kv: _term_sort_key(kv[0]))
        return [
            {"coefficient": c, "factors": [[v.text(), e] for v, e in m]}
            for m, c in items
        ]


class NonDivisible(ArithmeticError):
    def __init__(self, var: Var, power: int, poly: Polynomial):
        super().__init__(f"{poly.text()} is not divisible by {var.text()}^{power}")


def _coerce(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, int):
        return Polynomial.const(x)
    return NotImplemented


ZERO = Polynomial.zero()
ONE = Polynomial.const(1)
P_A = Polynomial.var(A)
P_B = Polynomial.var(B)
P_d = Polynomial.var(d)

# d = -A^2 - A^-2 and B = A^-1, the standard bracket specialization.
D_VALUE = Polynomial.var(A, 2, -1) + Polynomial.var(A, -2, -1)
B_VALUE = Polynomial.var(A, -1)


def specialize(p: Polynomial) -> Polynomial:
    """Evaluate a bracket at B = A^-1 and d = -A^2 - A^-2."""
    return p.substitute(B, B_VALUE).substitute(d, D_VALUE)


def minus_A_cubed(power: int) -> Polynomial:
    """The framing factor (-A^3)^power."""
    return Polynomial.var(A, 3 * power, -1 if power % 2 else 1)


# ---------------------------------------------------------------------------
# canonical text


def _term_sort_key(m: Monomial):
    a_exp = 0
    rest = []
    for v, e in m:
        if v.rank == _K_A:
            a_exp = e
        else:
            rest.append((v, e))
    # group by the non-A variable content, constants first, then by
    # descending A-degree inside each group
    return (tuple(rest), -a_exp)


def canonical_text(p: Polynomial) -> str:
    """Deterministic rendering; ``parse(canonical_text(p)) == p``."""
    if p.is_zero():
        return "0"
    parts: list[str] = []
    for m, c in sorted(p._terms.items(), key=lambda kv: _term_sort_key(kv[0])):
        factors = []
        for v, e in m:
            factors.append(v.text() if e == 1 else f"{v.text()}^{e}")
        mag = abs(c)
        if factors:
            body = "*".join(factors) if mag == 1 else f"{mag}*" + "*".join(factors)
        else:
            body = str(mag)
        if not parts:
            parts.append(body if c > 0 else "-" + body)
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


_VAR_RE = re.compile(
    r"""
    (?P<khalf>K_1/2) |
    (?P<kloop>K_(?P<kli>\d+)_l(?P<kll>\d+)) |
    (?P<k>K_(?P<ki>\d+)) |
    (?P<lamloop>L(?P<llp>p?)_(?P<lli>\d+)_l(?P<lll>\d+)) |
    (?P<lamht>L(?P<ht>[ht])_(?P<lhn>\d+)/2) |
    (?P<lam>L(?P<lp>p?)_(?P<li>\d+)) |
    (?P<edge>b(?P<ename>[A-Za-z0-9_]+)) |
    (?P<single>[ABacd])
    """,
    re.VERBOSE,
)


def _parse_var(tok: str) -> Var:
    m = _VAR_RE.fullmatch(tok)
    if not m:
        raise PolynomialParseError(f"unknown variable {tok!r}")
    if m.group("khalf"):
        return K_HALF
    if m.group("kloop"):
        return K_loop(int(m.group("kli")), int(m.group("kll")))
    if m.group("k"):
        i = int(m.group("ki"))
        return K(i)
    if m.group("lamloop"):
        return lam_loop(int(m.group("lli")), m.group("llp") == "p", int(m.group("lll")))
    if m.group("lamht"):
        n = int(m.group("lhn"))
        return lam_head(n) if m.group("ht") == "h" else lam_tail(n)
    if m.group("lam"):
        return lam(int(m.group("li")), m.group("lp") == "p")
    if m.group("edge"):
        return edge_weight(m.group("ename"))
    return {"A": A, "B": B, "a": VAR_a, "c": VAR_c, "d": d}[m.group("single")]


def parse(text: str) -> Polynomial:
    """Parse the canonical polynomial grammar back into a Polynomial."""
    text = text.strip()
    if text == "0":
        return Polynomial.zero()
    # split into signed terms at top level
    out = Polynomial.zero()
    term_re = re.compile(r"\s*([+-])?\s*([^+\-\s][^+\s]*(?:\s*\*\s*[^+\s]+)*)")
    pos = 0
    first = True
    while pos < len(text):
        m = term_re.match(text, pos)
        if not m:
            raise PolynomialParseError(f"cannot parse term at {text[pos:]!r}")
        sign_tok, body = m.group(1), m.group(2)
        if sign_tok is None and not first:
            raise PolynomialParseError(f"missing +/- before {body!r}")
        sign = -1 if sign_tok == "-" else 1
        coeff = sign
        pairs: list[tuple[Var, int]] = []
        for factor in (f.strip() for f in body.split("*")):
            if not factor:
                raise PolynomialParseError(f"empty factor in {body!r}")
            if re.fullmatch(r"\d+", factor):
                coeff *= int(factor)
                continue
            if "^" in factor:
                name, _, exp_s = factor.partition("^")
                try:
                    exp = int(exp_s)
                except ValueError as e:
                    raise PolynomialParseError(f"bad exponent in {factor!r}") from e
            else:
                name, exp = factor, 1
            pairs.append((_parse_var(name), exp))
        out = out + Polynomial.monomial(coeff, pairs)
        pos = m.end()
        first = False
    return out
