"""Exact arithmetic in Q(phi), phi the golden ratio.

Numbers are a + b*phi with rational a, b (phi^2 = phi + 1).  Used for the
Markov-partition geometry, where every corner, width, and coding offset lies
in this field; exactness removes all tolerance questions from the
construction-time verification.
"""

from __future__ import annotations

from fractions import Fraction
from math import sqrt

PHI_FLOAT = (1.0 + sqrt(5.0)) / 2.0


class Golden:
    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, o):
        o = _coerce(o)
        return Golden(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Golden(-self.a, -self.b)

    def __sub__(self, o):
        return self + (-_coerce(o))

    def __rsub__(self, o):
        return _coerce(o) + (-self)

    def __mul__(self, o):
        o = _coerce(o)
        # (a + b phi)(c + d phi) = ac + bd + (ad + bc + bd) phi
        return Golden(self.a * o.a + self.b * o.b,
                      self.a * o.b + self.b * o.a + self.b * o.b)

    __rmul__ = __mul__

    def inverse(self) -> "Golden":
        # conjugate under phi -> 1 - phi; norm = a^2 + ab - b^2
        n = self.a * self.a + self.a * self.b - self.b * self.b
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(phi)")
        return Golden((self.a + self.b) / n, -self.b / n)

    def __truediv__(self, o):
        return self * _coerce(o).inverse()

    def __rtruediv__(self, o):
        return _coerce(o) * self.inverse()

    # -- order ------------------------------------------------------------------
    def sign(self) -> int:
        """Exact sign of a + b*phi."""
        u = 2 * self.a + self.b  # value = (u + b*sqrt5)/2
        v = self.b
        if v == 0:
            return (u > 0) - (u < 0)
        if u == 0:
            return 1 if v > 0 else -1
        if u > 0 and v > 0:
            return 1
        if u < 0 and v < 0:
            return -1
        # opposite signs: compare u^2 with 5 v^2
        if v > 0:  # u < 0
            return 1 if 5 * v * v > u * u else (-1 if 5 * v * v < u * u else 0)
        return 1 if u * u > 5 * v * v else (-1 if u * u < 5 * v * v else 0)

    def __eq__(self, o):
        o = _coerce(o)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __lt__(self, o):
        return (self - _coerce(o)).sign() < 0

    def __le__(self, o):
        return (self - _coerce(o)).sign() <= 0

    def __gt__(self, o):
        return (self - _coerce(o)).sign() > 0

    def __ge__(self, o):
        return (self - _coerce(o)).sign() >= 0

    # -- conversions ----------------------------------------------------------
    def __float__(self):
        return float(self.a) + float(self.b) * PHI_FLOAT

    def __repr__(self):
        return f"Golden({self.a}, {self.b})"

    def text(self) -> str:
        """Human-readable exact form, e.g. '-1+2phi'."""
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}phi"


def _coerce(x) -> Golden:
    if isinstance(x, Golden):
        return x
    if isinstance(x, (int, Fraction)):
        return Golden(x, 0)
    raise TypeError(f"cannot coerce {type(x)} into Q(phi)")


PHI = Golden(0, 1)
ONE = Golden(1, 0)
ZERO = Golden(0, 0)


def parse_golden(s: str) -> Golden:
    """Inverse of Golden.text()."""
    s = s.strip().replace(" ", "")
    if "phi" not in s:
        return Golden(Fraction(s), 0)
    head, _, _ = s.partition("phi")
    # split head into rational part and phi coefficient
    for i in range(len(head) - 1, 0, -1):
        if head[i] in "+-" and head[i - 1] not in "+-/eE":
            return Golden(Fraction(head[:i]), Fraction(head[i:] or "1"))
    coef = head if head not in ("", "+", "-") else head + "1"
    return Golden(0, Fraction(coef))
