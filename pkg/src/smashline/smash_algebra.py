"""The smash line algebra: x (commuting, real line) merged with a
paragrassmann xi (xi**N == 0), its braided n-slot tensor powers and the
n-fold coproduct."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .qcalculus import Deformation, q_multinomial

DEFAULT_X_CAP = 16

# Factor kinds inside a multi-slot word.
X, XI = 0, 1


class XCapOverflow(ArithmeticError):
    """An x-power exceeded the configured cap; raise ``x_cap`` and retry."""


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total``, colex order."""
    if parts < 1:
        raise ValueError("need at least one part")
    if parts == 1:
        yield (total,)
        return
    # colex: compare from the last entry, so iterate the last entry outermost
    for last in range(total + 1):
        for head in compositions(total - last, parts - 1):
            yield head + (last,)


def multinomial(total: int, parts) -> int:
    out = math.factorial(total)
    for j in parts:
        out //= math.factorial(j)
    return out


def _canonical(coeffs: dict, tol: float = 0.0) -> dict:
    return {key: complex(v) for key, v in sorted(coeffs.items()) if abs(v) > tol}


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


class SmashElement:
    """Finite sum of d_kl x**k xi**l, keyed by (k, l).

    Zero coefficients are never stored, so ``==`` is exact structural equality.
    """

    __slots__ = ("coeffs", "deformation", "x_cap")

    def __init__(self, coeffs: dict, deformation: Deformation, x_cap: int = DEFAULT_X_CAP):
        clean = {}
        for (k, l), v in coeffs.items():
            k, l = int(k), int(l)
            if k < 0 or l < 0:
                raise ValueError(f"negative power in ({k}, {l})")
            if l >= deformation.N:
                continue  # xi**l == 0
            if k > x_cap:
                raise XCapOverflow(f"x**{k} exceeds x_cap={x_cap}")
            clean[(k, l)] = clean.get((k, l), 0) + v
        self.coeffs = _canonical(clean)
        self.deformation = deformation
        self.x_cap = x_cap

    @classmethod
    def monomial(cls, k, l, d, coeff=1.0, x_cap=DEFAULT_X_CAP):
        return cls({(k, l): coeff}, d, x_cap)

    @classmethod
    def one(cls, d, x_cap=DEFAULT_X_CAP):
        return cls({(0, 0): 1.0}, d, x_cap)

    @classmethod
    def x(cls, d, x_cap=DEFAULT_X_CAP):
        return cls({(1, 0): 1.0}, d, x_cap)

    @classmethod
    def xi(cls, d, x_cap=DEFAULT_X_CAP):
        return cls({(0, 1): 1.0}, d, x_cap)

    def _compatible(self, other):
        if isinstance(other, (int, float, complex)):
            return SmashElement({(0, 0): other}, self.deformation, self.x_cap)
        if not isinstance(other, SmashElement):
            return NotImplemented
        if other.deformation != self.deformation or other.x_cap != self.x_cap:
            raise ValueError("SmashElements must share deformation and x_cap")
        return other

    def __add__(self, other):
        other = self._compatible(other)
        if other is NotImplemented:
            return other
        merged = dict(self.coeffs)
        for key, v in other.coeffs.items():
            merged[key] = merged.get(key, 0) + v
        return SmashElement(merged, self.deformation, self.x_cap)

    __radd__ = __add__

    def __neg__(self):
        return SmashElement({key: -v for key, v in self.coeffs.items()}, self.deformation, self.x_cap)

    def __sub__(self, other):
        other = self._compatible(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return SmashElement(
                {key: v * other for key, v in self.coeffs.items()}, self.deformation, self.x_cap
            )
        other = self._compatible(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def __pow__(self, m: int):
        out = SmashElement.one(self.deformation, self.x_cap)
        for _ in range(m):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, SmashElement):
            return NotImplemented
        return self.deformation == other.deformation and self.coeffs == other.coeffs

    __hash__ = None

    def __getitem__(self, key):
        return self.coeffs.get(tuple(key), 0j)

    def __iter__(self):
        return iter(self.coeffs.items())

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "SmashElement(0)"
        terms = " + ".join(f"({v:.6g})*x^{k}*xi^{l}" for (k, l), v in self.coeffs.items())
        return f"SmashElement({terms}, N={self.deformation.N})"

    def to_json(self) -> dict:
        return {
            "N": self.deformation.N,
            "x_cap": self.x_cap,
            "terms": [[k, l, _pair(v)] for (k, l), v in self.coeffs.items()],
        }


def multiply(f: SmashElement, g: SmashElement) -> SmashElement:
    """Single-slot product; x and xi commute inside one copy of the algebra."""
    if f.deformation != g.deformation or f.x_cap != g.x_cap:
        raise ValueError("operands must share deformation and x_cap")
    N = f.deformation.N
    out: dict = {}
    for (k1, l1), a in f.coeffs.items():
        for (k2, l2), b in g.coeffs.items():
            l = l1 + l2
            if l >= N:
                continue
            k = k1 + k2
            if k > f.x_cap:
                raise XCapOverflow(f"product reaches x**{k} > x_cap={f.x_cap}")
            out[(k, l)] = out.get((k, l), 0) + a * b
    return SmashElement(out, f.deformation, f.x_cap)


def counit(f: SmashElement) -> complex:
    return f.coeffs.get((0, 0), 0j)


@dataclass(frozen=True)
class MultiSlotWord:
    """A product of slot-embedded factors with a scalar prefactor.

    ``factors`` lists ``(slot, kind, power)`` in multiplication order, with
    slots numbered 1..n and kind ``X`` or ``XI``. A word is normal ordered
    when slots ascend and x precedes xi within each slot.
    """

    n: int
    factors: tuple = ()
    prefactor: complex = 1.0

    def __post_init__(self):
        for slot, kind, power in self.factors:
            if not 1 <= slot <= self.n:
                raise ValueError(f"slot {slot} outside 1..{self.n}")
            if kind not in (X, XI) or power < 0:
                raise ValueError(f"bad factor {(slot, kind, power)}")

    @classmethod
    def from_slots(cls, slots, prefactor=1.0):
        """Normal-ordered word from per-slot (x-power, xi-power) pairs."""
        factors = []
        for i, (a, b) in enumerate(slots, start=1):
            if a:
                factors.append((i, X, a))
            if b:
                factors.append((i, XI, b))
        return cls(len(slots), tuple(factors), prefactor)

    @property
    def slots(self) -> tuple:
        """Per-slot (x-power, xi-power), summing powers regardless of order."""
        acc = [[0, 0] for _ in range(self.n)]
        for slot, kind, power in self.factors:
            acc[slot - 1][kind] += power
        return tuple(tuple(p) for p in acc)

    def is_zero(self, N: int) -> bool:
        return self.prefactor == 0 or any(b >= N for _, b in self.slots)

    def is_normal(self) -> bool:
        keys = [(s, k) for s, k, _ in self.factors]
        return all(a < b for a, b in zip(keys, keys[1:]))


def _swap_phase(left, right, Q, d: Deformation) -> complex:
    """Phase picked up by rewriting ``left*right`` as ``right*left``.

    Only called when ``right`` sorts strictly before ``left``.
    """
    sl, kl, pl = left
    sr, kr, pr = right
    if sl == sr or (kl == X and kr == X):
        return 1.0
    # here sl > sr
    if kl == XI and kr == XI:
        return d.root_power(pl * pr)  # xi_i xi_j = q xi_j xi_i, i > j
    if kl == X and kr == XI:
        return Q ** (pl * pr)  # x_i xi_j = Q xi_j x_i, i > j
    # xi in a later slot passing an x from an earlier slot: unbraided
    return 1.0


def braided_normal_order(w: MultiSlotWord, Q: float, d: Deformation) -> MultiSlotWord:
    """Rewrite ``w`` in normal order, accumulating q and Q phases.

    Insertion sort by adjacent transpositions, so every phase comes from one
    exchange relation. Equal (slot, kind) neighbours are merged. A slot whose
    xi-power reaches N collapses the word to zero.
    """
    prefactor = complex(w.prefactor)
    stack: list = []
    for factor in w.factors:
        if factor[2] == 0:
            continue
        cur = factor
        i = len(stack)
        # bubble cur leftwards while the factor to its left sorts after it
        while i > 0 and (stack[i - 1][0], stack[i - 1][1]) > (cur[0], cur[1]):
            prefactor *= _swap_phase(stack[i - 1], cur, Q, d)
            i -= 1
        if i > 0 and (stack[i - 1][0], stack[i - 1][1]) == (cur[0], cur[1]):
            s, k, p = stack[i - 1]
            stack[i - 1] = (s, k, p + cur[2])
        else:
            stack.insert(i, cur)
    out = MultiSlotWord(w.n, tuple(stack), prefactor)
    if out.is_zero(d.N):
        return MultiSlotWord(w.n, (), 0.0)
    return out


@dataclass
class MultiSlotExpansion:
    """Linear combination of normal-ordered n-slot words.

    ``terms`` maps a tuple of per-slot (x-power, xi-power) pairs to its
    coefficient.
    """

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.terms:
            if len(key) != self.n:
                raise ValueError(f"term {key} does not have {self.n} slots")
        self.terms = _canonical(self.terms)

    @classmethod
    def single(cls, n, slot, x_power=0, xi_power=0, coeff=1.0):
        key = [(0, 0)] * n
        key[slot - 1] = (x_power, xi_power)
        return cls(n, {tuple(key): coeff})

    @classmethod
    def unit(cls, n):
        return cls(n, {((0, 0),) * n: 1.0})

    def __add__(self, other):
        if self.n != other.n:
            raise ValueError("slot counts differ")
        merged = dict(self.terms)
        for key, v in other.terms.items():
            merged[key] = merged.get(key, 0) + v
        return MultiSlotExpansion(self.n, merged)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        return MultiSlotExpansion(self.n, {k: v * c for k, v in self.terms.items()})

    def max_abs_diff(self, other) -> float:
        if self.n != other.n:
            raise ValueError("slot counts differ")
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0) - other.terms.get(k, 0)) for k in keys), default=0.0)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [[[list(p) for p in key], _pair(v)] for key, v in self.terms.items()],
        }


def multislot_multiply(
    u: MultiSlotExpansion,
    v: MultiSlotExpansion,
    Q: float,
    d: Deformation,
    x_cap: int = DEFAULT_X_CAP,
) -> MultiSlotExpansion:
    """Product in the braided n-fold tensor power: concatenate, then normal order."""
    if u.n != v.n:
        raise ValueError(f"slot counts differ: {u.n} vs {v.n}")
    out: dict = {}
    for ku, cu in u.terms.items():
        left = MultiSlotWord.from_slots(ku).factors
        for kv, cv in v.terms.items():
            word = MultiSlotWord(u.n, left + MultiSlotWord.from_slots(kv).factors, cu * cv)
            w = braided_normal_order(word, Q, d)
            if w.prefactor == 0:
                continue
            key = w.slots
            if any(a > x_cap for a, _ in key):
                raise XCapOverflow(f"slot x-power exceeds x_cap={x_cap} in {key}")
            out[key] = out.get(key, 0) + w.prefactor
    return MultiSlotExpansion(u.n, out)


def multislot_power(u: MultiSlotExpansion, m: int, Q: float, d: Deformation, x_cap=DEFAULT_X_CAP):
    out = MultiSlotExpansion.unit(u.n)
    for _ in range(m):
        out = multislot_multiply(out, u, Q, d, x_cap)
    return out


def coproduct_power(k: int, l: int, n: int, d: Deformation) -> MultiSlotExpansion:
    """n-fold coproduct of x**k xi**l.

    Sum over compositions i of k and j of l (n parts each) of
    multinomial(k; i) * [l; j]_q times the slotwise monomials.
    """
    if n < 1:
        raise ValueError(f"slot count must be >= 1, got {n}")
    if k < 0 or l < 0:
        raise ValueError("powers must be nonnegative")
    if l >= d.N:
        raise ValueError(f"xi**{l} vanishes (l >= N={d.N}); coproduct of zero is not a monomial expansion")
    xi_parts = [(j, q_multinomial(l, j, d)) for j in compositions(l, n)]
    terms = {}
    for i in compositions(k, n):
        ci = multinomial(k, i)
        for j, cj in xi_parts:
            terms[tuple(zip(i, j))] = ci * cj
    return MultiSlotExpansion(n, terms)


def coproduct(f: SmashElement, n: int = 2) -> MultiSlotExpansion:
    out = MultiSlotExpansion(n)
    for (k, l), c in f.coeffs.items():
        out = out + coproduct_power(k, l, n, f.deformation).scale(c)
    return out


def expand_leg(e: MultiSlotExpansion, leg: int, d: Deformation, n: int = 2) -> MultiSlotExpansion:
    """Apply the n-fold coproduct to tensor leg ``leg`` (1-based) of ``e``."""
    if not 1 <= leg <= e.n:
        raise ValueError(f"leg {leg} outside 1..{e.n}")
    out: dict = {}
    for key, c in e.terms.items():
        k, l = key[leg - 1]
        for sub, cs in coproduct_power(k, l, n, d).terms.items():
            new = key[: leg - 1] + sub + key[leg:]
            out[new] = out.get(new, 0) + c * cs
    return MultiSlotExpansion(e.n + n - 1, out)


def apply_counit(e: MultiSlotExpansion, leg: int) -> MultiSlotExpansion:
    """Contract tensor leg ``leg`` with the counit."""
    if e.n < 2:
        raise ValueError("need at least two legs")
    out: dict = {}
    for key, c in e.terms.items():
        if key[leg - 1] != (0, 0):
            continue
        new = key[: leg - 1] + key[leg:]
        out[new] = out.get(new, 0) + c
    return MultiSlotExpansion(e.n - 1, out)


def to_smash_element(e: MultiSlotExpansion, d: Deformation, x_cap=DEFAULT_X_CAP) -> SmashElement:
    if e.n != 1:
        raise ValueError("only single-slot expansions convert to SmashElement")
    return SmashElement({key[0]: c for key, c in e.terms.items()}, d, x_cap)


def dumps(obj) -> str:
    """Stable JSON for SmashElement / MultiSlotExpansion."""
    return json.dumps(obj.to_json(), sort_keys=True)


def slot_sum(n: int, kind: int) -> MultiSlotExpansion:
    """x_1 + ... + x_n (kind=X) or xi_1 + ... + xi_n (kind=XI)."""
    out = MultiSlotExpansion(n)
    for s in range(1, n + 1):
        pw = (1, 0) if kind == X else (0, 1)
        out = out + MultiSlotExpansion.single(n, s, *pw)
    return out


__all__ = [
    "DEFAULT_X_CAP",
    "MultiSlotExpansion",
    "MultiSlotWord",
    "SmashElement",
    "X",
    "XI",
    "XCapOverflow",
    "apply_counit",
    "braided_normal_order",
    "compositions",
    "coproduct",
    "coproduct_power",
    "counit",
    "dumps",
    "expand_leg",
    "multinomial",
    "multiply",
    "multislot_multiply",
    "multislot_power",
    "slot_sum",
    "to_smash_element",
]

