"""Shell-supported functions on the multiplicative group, with operators.

A function here lives on F^x and is constant on cosets u(1+P^level) inside
each shell {v(y) = v}. Storage is a sparse dict keyed by (valuation, unit
representative). Two booleans certify whether the support window is exact on
each side; operators propagate them, and strict integration refuses to cross
an uncertified edge rather than silently truncating.

The module also builds the oscillatory families at the heart of the package:
the stationary-phase shell functions (twisted Kloosterman-type integrals near
the critical points of u + 1/u) and the two quadratically twisted families
supported on squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable

from .residue import (
    FieldModel,
    MultChar,
    PAdic,
    eta0_char,
    legendre,
    psi_frac_vu,
    turn,
)


class TruncationUnsound(RuntimeError):
    """An operation needed values beyond a side that is not certified zero."""


def _key_unit(F: FieldModel, level: int, u: int) -> int:
    if level == 0:
        return 1
    mod = F.p**level
    u %= mod
    if u % F.p == 0:
        raise ValueError("unit representative divisible by p")
    return u


@dataclass
class ShellFunction:
    """Sparse shell-and-coset function on F^x.

    ``exact_lo`` certifies the function vanishes on shells below the
    smallest stored valuation (the large-argument side); ``exact_hi``
    likewise above the largest (the small-argument side).
    """

    F: FieldModel
    level: int
    data: dict[tuple[int, int], complex] = field(default_factory=dict)
    exact_lo: bool = True
    exact_hi: bool = True

    # -- bookkeeping -----------------------------------------------------

    @property
    def window(self) -> tuple[int, int] | None:
        if not self.data:
            return None
        vs = [v for v, _ in self.data]
        return min(vs), max(vs)

    def shells(self) -> list[int]:
        return sorted({v for v, _ in self.data})

    def set(self, v: int, u: int, value: complex) -> None:
        if value == 0:
            return
        self.data[(v, _key_unit(self.F, self.level, u))] = value

    def value_vu(self, v: int, u: int, strict: bool = True) -> complex:
        """Value at pi^v u; raises if (v) lies beyond an uncertified edge."""
        w = self.window
        if w is None:
            if strict and not (self.exact_lo and self.exact_hi):
                raise TruncationUnsound("empty window without certification")
            return 0j
        lo, hi = w
        if v < lo:
            if strict and not self.exact_lo:
                raise TruncationUnsound(f"shell {v} below certified window {w}")
            return 0j
        if v > hi:
            if strict and not self.exact_hi:
                raise TruncationUnsound(f"shell {v} above certified window {w}")
            return 0j
        return self.data.get((v, _key_unit(self.F, self.level, u)), 0j)

    def refine(self, level: int) -> "ShellFunction":
        """Re-express at a finer unit level (splitting each coset)."""
        if level < self.level:
            raise ValueError("refine only increases the level")
        if level == self.level:
            return self
        F = self.F
        out: dict[tuple[int, int], complex] = {}
        step = F.p**self.level
        for (v, u), val in self.data.items():
            if self.level == 0:
                for w in F.unit_reps(level):
                    out[(v, w)] = val
            else:
                for t in range(F.p ** (level - self.level)):
                    out[(v, (u + step * t) % F.p**level)] = val
        return ShellFunction(F, level, out, self.exact_lo, self.exact_hi)

    @staticmethod
    def align(*fns: "ShellFunction") -> list["ShellFunction"]:
        level = max(f.level for f in fns)
        return [f.refine(level) for f in fns]

    # -- linear structure --------------------------------------------------

    def scale(self, c: complex) -> "ShellFunction":
        if c == 0:
            return ShellFunction(self.F, 0, {}, self.exact_lo, self.exact_hi)
        return replace(self, data={k: c * v for k, v in self.data.items()})

    def __add__(self, other: "ShellFunction") -> "ShellFunction":
        a, b = ShellFunction.align(self, other)
        data = dict(a.data)
        for k, v in b.data.items():
            data[k] = data.get(k, 0j) + v
        data = {k: v for k, v in data.items() if v != 0}
        return ShellFunction(
            a.F, a.level, data, a.exact_lo and b.exact_lo,
            a.exact_hi and b.exact_hi,
        )

    def __sub__(self, other: "ShellFunction") -> "ShellFunction":
        return self + other.scale(-1)

    # -- elementary operators ---------------------------------------------

    def times_abs_power(self, s: complex) -> "ShellFunction":
        """Multiply by |y|^s = q^{-v s}."""
        q = self.F.q
        return replace(
            self,
            data={(v, u): val * q ** (-v * s) for (v, u), val in self.data.items()},
        )

    def times_char(self, chi: MultChar) -> "ShellFunction":
        """Multiply pointwise by a character of F^x.

        A character without a uniformizer value is fine when the support
        sits on the unit shell; otherwise it must carry one.
        """
        if chi.at_pi is None and any(v != 0 for v, _ in self.data):
            raise ValueError("character needs a uniformizer value here")
        lvl = max(self.level, max(chi.conductor, 1) if chi.expo else 0)
        f = self.refine(lvl)
        return replace(
            f,
            data={
                (v, u): val * chi.eval_vu(v, u)
                for (v, u), val in f.data.items()
            },
        )

    def times_psi(self, cv: int, cu: int) -> "ShellFunction":
        """Multiply pointwise by psi(c y) for c = pi^{cv} cu."""
        w = self.window
        if w is None:
            return self
        need = max(0, -(cv + w[0]))
        f = self.refine(max(self.level, need))
        out = {
            (v, u): val * turn(psi_frac_vu(f.F, cv + v, cu * u))
            for (v, u), val in f.data.items()
        }
        return replace(f, data=out)

    def translate(self, dv: int, du: int) -> "ShellFunction":
        """Argument scaling: returns y -> f(y delta) for delta = pi^{dv} du."""
        mod = self.F.p**self.level if self.level else 1
        inv = pow(du % mod, -1, mod) if self.level else 1
        data = {
            (v - dv, (u * inv) % mod if self.level else 1): val
            for (v, u), val in self.data.items()
        }
        return replace(self, data=data)

    def invert_argument(self) -> "ShellFunction":
        """Returns y -> f(1/y)."""
        mod = self.F.p**self.level if self.level else 1
        data = {
            (-v, pow(u, -1, mod) if self.level else 1): val
            for (v, u), val in self.data.items()
        }
        return ShellFunction(
            self.F, self.level, data, self.exact_hi, self.exact_lo
        )

    def restrict_v(self, lo: int | None = None,
                   hi: int | None = None) -> "ShellFunction":
        """Multiply by the indicator of the valuation interval [lo, hi].

        A finite bound makes that side exactly zero by construction, so the
        corresponding certification flag is set.
        """
        data = {
            (v, u): val
            for (v, u), val in self.data.items()
            if (lo is None or v >= lo) and (hi is None or v <= hi)
        }
        return ShellFunction(
            self.F, self.level, data,
            self.exact_lo if lo is None else True,
            self.exact_hi if hi is None else True,
        )

    # -- integration --------------------------------------------------------

    def d_mult_integral(
        self,
        unit_char: MultChar | None = None,
        abs_power: complex = 0,
        v_range: tuple[int | None, int | None] = (None, None),
    ) -> complex:
        """Strict d^x-integral of f(y) chi(u(y)) |y|^s over a v-range.

        The range bounds are inclusive; None means unbounded, which is only
        allowed past a certified edge.
        """
        lo, hi = v_range
        w = self.window
        if w is not None:
            if lo is None and not self.exact_lo:
                raise TruncationUnsound("unbounded integral over open lower edge")
            if hi is None and not self.exact_hi:
                raise TruncationUnsound("unbounded integral over open upper edge")
            if lo is not None and lo < w[0] and not self.exact_lo:
                raise TruncationUnsound("integral reaches below certified window")
            if hi is not None and hi > w[1] and not self.exact_hi:
                raise TruncationUnsound("integral reaches above certified window")
        covol = self.F.coset_volume(self.level)
        q = self.F.q
        acc = 0j
        for (v, u), val in self.data.items():
            if lo is not None and v < lo:
                continue
            if hi is not None and v > hi:
                continue
            term = val
            if unit_char is not None:
                term *= unit_char.eval_unit(u)
            if abs_power != 0:
                term *= q ** (-v * abs_power)
            acc += term * covol
        return acc

    def mellin_shell(self, n: int, unit_char: MultChar | None = None) -> complex:
        """d^x-integral over the single shell v(y) = -n, against a unit char."""
        return self.d_mult_integral(unit_char=unit_char, v_range=(-n, -n))

    def mellin_coefficients(
        self, unit_char: MultChar | None = None
    ) -> dict[int, complex]:
        """All per-shell integrals, keyed by n with shell v = -n."""
        out: dict[int, complex] = {}
        for v in self.shells():
            val = self.mellin_shell(-v, unit_char)
            if val != 0:
                out[-v] = val
        return out


def convolve(f: "ShellFunction", g: "ShellFunction",
             out_shells: Iterable[int]) -> "ShellFunction":
    """Multiplicative convolution (f*g)(y) = int f(y/t) g(t) d^x t.

    Each requested output shell is an exact finite sum provided the factor
    windows certify every contributing shell; otherwise this raises. The
    output is marked exact only on sides where both factors are.
    """
    out_shells = sorted(set(out_shells))
    f, g = ShellFunction.align(f, g)
    F = f.F
    level = f.level
    covol = F.coset_volume(level)
    mod = F.p**level if level else 1
    fw, gw = f.window, g.window
    if fw is None or gw is None:
        lo_ok = (fw is not None or f.exact_lo) and (gw is not None or g.exact_lo)
        hi_ok = (fw is not None or f.exact_hi) and (gw is not None or g.exact_hi)
        if not (lo_ok and hi_ok):
            raise TruncationUnsound("convolving an uncertified empty function")
        return ShellFunction(F, level, {}, True, True)
    # shells where g is unknown pair with f-shells that must be certified zero
    if not g.exact_hi:
        if not (f.exact_lo and max(out_shells) - gw[1] <= fw[0]):
            raise TruncationUnsound("convolution tail past g's upper edge")
    if not g.exact_lo:
        if not (f.exact_hi and min(out_shells) - gw[0] >= fw[1]):
            raise TruncationUnsound("convolution tail past g's lower edge")
    exact_lo = (
        f.exact_lo and g.exact_lo and out_shells[0] <= fw[0] + gw[0]
    )
    exact_hi = (
        f.exact_hi and g.exact_hi and out_shells[-1] >= fw[1] + gw[1]
    )
    out = ShellFunction(F, level, {}, exact_lo, exact_hi)
    for v in out_shells:
        for (a, w), gval in g.data.items():
            winv = pow(w, -1, mod) if level else 1
            for u_out in F.unit_reps(level):
                fval = f.value_vu(v - a, u_out * winv if level else 1)
                if fval == 0 or gval == 0:
                    continue
                key = (v, u_out)
                out.data[key] = out.data.get(key, 0j) + fval * gval * covol
    out.data = {k: val for k, val in out.data.items() if val != 0}
    return out


# ------------------------------------------------------------------------
# indicator-type constructors
# ------------------------------------------------------------------------


def unit_shell_indicator(F: FieldModel, v: int) -> ShellFunction:
    """Indicator of the shell pi^v O^x."""
    sf = ShellFunction(F, 0)
    sf.set(v, 1, 1.0 + 0j)
    return sf


def coset_indicator(F: FieldModel, v: int, u: int, level: int) -> ShellFunction:
    """Indicator of the coset pi^v u (1 + P^level)."""
    sf = ShellFunction(F, level)
    sf.set(v, u, 1.0 + 0j)
    return sf


# ------------------------------------------------------------------------
# the oscillatory families (functions of x = y^2, supported on squares)
# ------------------------------------------------------------------------


def _unit_sqrt(F: FieldModel, a: int, k: int) -> int | None:
    """A square root of the unit a mod p^k (None for non-residues)."""
    p = F.p
    a %= p**k
    r = pow(a, (p + 1) // 4, p) if p % 4 == 3 else None
    if r is None or (r * r - a) % p != 0:
        r = next((x for x in range(1, p) if (x * x - a) % p == 0), None)
    if r is None:
        return None
    mod = p
    while mod < p**k:
        mod = min(mod * mod, p**k)
        # Newton lift: r <- r - (r^2 - a) / (2r)
        r = (r - (r * r - a) * pow(2 * r, -1, mod)) % mod
    return r % p**k


def stationary_shell(F: FieldModel, m: int) -> ShellFunction:
    """The level-m stationary-phase function of x = y^2.

    Supported on the shell v(x) = -2m at square units. For m >= 1 the value
    at y^2 is the sum over both critical cosets +-1 + P^{floor(m/2)} of
    psi(y(u + 1/u)) du, scaled by |y|; non-unit lattice points contribute
    nothing and are skipped. The m = 0 member is the constant 2(1 - 1/q) on
    unit squares, which is what the same formula produces there.
    """
    p = F.p
    if m == 0:
        sf = ShellFunction(F, 1)
        for u in range(1, p):
            if legendre(u, p) == 1:
                sf.set(0, u, 2 * (1 - 1 / F.q))
        return sf
    j = m // 2
    lvl = m
    modm = p**m
    sf = ShellFunction(F, lvl)
    for ux in F.unit_reps(lvl):
        if legendre(ux, p) != 1:
            continue
        uy = _unit_sqrt(F, ux, m)
        if uy is None:
            continue
        acc = 0j
        for s in (1, -1):
            for t in range(p ** (m - j)):
                ut = (s + p**j * t) % modm
                if ut % p == 0:
                    continue
                w = (ut + pow(ut, -1, modm)) % modm
                acc += turn(Fraction(uy * w % modm, modm))
        sf.set(-2 * m, ux, acc)
    return sf


def stationary_tail(F: FieldModel, n: int, depth: int) -> ShellFunction:
    """Sum of the stationary families for levels n..depth.

    This truncates an infinite sum toward large arguments, so the low edge
    is marked uncertified.
    """
    total = ShellFunction(F, 1, {}, False, True)
    for m in range(n, depth + 1):
        total = total + stationary_shell(F, m)
    total.exact_lo = False
    return total


def quad_plain_shell(F: FieldModel, n: int) -> ShellFunction:
    """The plain quadratic family at level n, a function of x = y^2.

    Supported on v(x) = -2n at square units, with value psi(y) + psi(-y)
    for either square root y of x. The n = 0 member is the constant 2 on
    unit squares.
    """
    p = F.p
    lvl = max(n, 1)
    sf = ShellFunction(F, lvl)
    modn = p**n
    for ux in F.unit_reps(lvl):
        if legendre(ux, p) != 1:
            continue
        if n == 0:
            sf.set(0, ux, 2.0 + 0j)
            continue
        uy = _unit_sqrt(F, ux, n)
        if uy is None:
            continue
        val = turn(Fraction(uy % modn, modn)) + turn(Fraction(-uy % modn, modn))
        sf.set(-2 * n, ux, val)
    return sf


def quad_twisted_shell(F: FieldModel, n: int) -> ShellFunction:
    """The quadratically twisted family at level n, a function of x = y^2.

    Same shape as the plain family but each term carries the quadratic
    class-field character of the ramified extension F(sqrt(pi)):
    eta(pi^v u) = eta0(u) eta0(-1)^v on F^x. At n = 0 this is
    2 eta0(u(y)) when -1 is a square and 0 otherwise.
    """
    p = F.p
    eta_m1 = legendre(-1, p)
    lvl = max(n, 1)
    sf = ShellFunction(F, lvl)
    modn = p**n
    for ux in F.unit_reps(lvl):
        if legendre(ux, p) != 1:
            continue
        uy = _unit_sqrt(F, ux, max(n, 1))
        if uy is None:
            continue
        if n == 0:
            val = (1 + eta_m1) * legendre(uy, p)
            if val:
                sf.set(0, ux, complex(val))
            continue
        sign = eta_m1**n
        val = sign * (
            legendre(uy, p) * turn(Fraction(uy % modn, modn))
            + legendre(-uy, p) * turn(Fraction(-uy % modn, modn))
        )
        if val != 0:
            sf.set(-2 * n, ux, val)
    return sf
