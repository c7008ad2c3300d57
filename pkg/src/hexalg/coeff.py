"""Exact scalars: Gaussian rationals graded by a formal power of hbar.

A coefficient is a pair (re, im) of arbitrary-precision rationals together
with a nonnegative integer power of hbar carried separately in polynomial
keys.  hbar is never evaluated numerically; commutators introduce explicit
factors of i*hbar and divisions by i*hbar are exact.
"""

from fractions import Fraction

try:
    from gmpy2 import mpq
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    mpq = Fraction

__all__ = [
    "mpq",
    "Coefficient",
    "QZERO",
    "QONE",
    "QI",
    "qi",
    "qi_add",
    "qi_mul",
    "qi_neg",
    "qi_scale",
    "qi_times_i",
    "qi_div_i",
    "qi_is_zero",
    "qi_str",
]

# complex rationals are plain (re, im) tuples of mpq, kept flat for speed
QZERO = (mpq(0), mpq(0))
QONE = (mpq(1), mpq(0))
QI = (mpq(0), mpq(1))


def qi(re=0, im=0):
    """Build a complex rational from ints, Fractions, strings or mpq."""
    return (mpq(re), mpq(im))


def qi_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def qi_mul(a, b):
    ar, ai = a
    br, bi = b
    return (ar * br - ai * bi, ar * bi + ai * br)


def qi_neg(a):
    return (-a[0], -a[1])


def qi_scale(a, q):
    return (a[0] * q, a[1] * q)


def qi_times_i(a):
    return (-a[1], a[0])


def qi_div_i(a):
    # 1/i = -i
    return (a[1], -a[0])


def qi_is_zero(a):
    return not a[0] and not a[1]


def qi_str(a):
    """Readable form used by repr helpers (not the canonical printer)."""
    re, im = a
    if not im:
        return str(re)
    if not re:
        return f"{im}*i"
    return f"({re} + {im}*i)" if im > 0 else f"({re} - {-im}*i)"


class Coefficient:
    """Public value type: Gaussian rational scaled by hbar**hbar_pow.

    Fractions are always stored reduced with positive denominators (mpq
    guarantees this); the zero coefficient is pinned to hbar_pow == 0 so the
    representation is unique.
    """

    __slots__ = ("re", "im", "hbar_pow")

    def __init__(self, re=0, im=0, hbar_pow=0):
        if hbar_pow < 0:
            raise ValueError("hbar_pow must be nonnegative")
        self.re = mpq(re)
        self.im = mpq(im)
        if not self.re and not self.im:
            hbar_pow = 0
        self.hbar_pow = int(hbar_pow)

    @property
    def re_num(self):
        return int(self.re.numerator)

    @property
    def re_den(self):
        return int(self.re.denominator)

    @property
    def im_num(self):
        return int(self.im.numerator)

    @property
    def im_den(self):
        return int(self.im.denominator)

    def is_zero(self):
        return not self.re and not self.im

    def value(self):
        return (self.re, self.im)

    def __eq__(self, other):
        return (
            isinstance(other, Coefficient)
            and self.re == other.re
            and self.im == other.im
            and self.hbar_pow == other.hbar_pow
        )

    def __hash__(self):
        return hash((self.re, self.im, self.hbar_pow))

    def __repr__(self):
        base = qi_str((self.re, self.im))
        if self.hbar_pow == 0:
            return base
        if self.hbar_pow == 1:
            return f"{base}*hbar"
        return f"{base}*hbar^{self.hbar_pow}"
