"""Exact noncommutative polynomial kernel.

Elements are finite sums of coefficient-weighted words of generator atoms.
Coefficients are Gaussian rationals times a formal nonnegative power of
hbar.  Products are free (word concatenation); a pluggable rewrite system
(atom ordering + commutator table + constraint rules) defines a unique
normal form, computed with a fixed leftmost scan so results are
deterministic.

Atoms are encoded as small integers whose numeric order is also the normal
ordering in both supported bases:

    Minv < M < P_0..P_3 < J_01..J_23 < D < C_0..C_3   (basis A)
    Minv < M < P_0..P_3 < S_0..S_3 < X_0..X_3         (basis B)
"""

from .coeff import (
    mpq,
    Coefficient,
    QONE,
    qi,
    qi_add,
    qi_mul,
    qi_neg,
    qi_scale,
    qi_times_i,
    qi_div_i,
    qi_is_zero,
    qi_str,
)

__all__ = [
    "MINV", "M", "D",
    "P", "J", "C", "S", "X",
    "ATOM_NAMES", "atom_name", "canonical_atom",
    "ETA", "eta", "eps4", "IDX4",
    "BASIS_A_ATOMS", "BASIS_B_ATOMS",
    "ConstructionError", "EngineError",
    "NCPoly", "RewriteSystem",
    "make_poly", "multiply", "sym_product", "sym_divide_by_M",
    "normalize", "commutator", "equal",
]


# ---------------------------------------------------------------------------
# atoms

MINV = 0
M = 1
_P0 = 2
_J0 = 6
D = 12
_C0 = 13
_S0 = 17
_X0 = 21

_JPAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_JINDEX = {pair: _J0 + k for k, pair in enumerate(_JPAIRS)}

IDX4 = (0, 1, 2, 3)
ETA = (1, -1, -1, -1)


def eta(mu, nu):
    """Minkowski metric diag(1,-1,-1,-1), identical with indices up or down."""
    return ETA[mu] if mu == nu else 0


def eps4(mu, nu, ro, si):
    """Totally antisymmetric tensor with eps_{0123} = +1 (lower indices)."""
    idx = (mu, nu, ro, si)
    if len(set(idx)) != 4:
        return 0
    sign = 1
    lst = list(idx)
    for i in range(3):
        for j in range(3 - i):
            if lst[j] > lst[j + 1]:
                lst[j], lst[j + 1] = lst[j + 1], lst[j]
                sign = -sign
    return sign


def P(mu):
    return _P0 + _chk(mu)


def J(mu, nu):
    """Canonical id of J_{mu nu}; requires mu < nu (use canonical_atom for raw input)."""
    if not (0 <= mu < nu <= 3):
        raise ConstructionError(f"J_{mu}{nu} is not a canonical atom (need mu < nu)")
    return _JINDEX[(mu, nu)]


def C(mu):
    return _C0 + _chk(mu)


def S(mu):
    return _S0 + _chk(mu)


def X(mu):
    return _X0 + _chk(mu)


def _chk(mu):
    if mu not in (0, 1, 2, 3):
        raise ConstructionError(f"space-time index {mu!r} out of range 0..3")
    return mu


ATOM_NAMES = (
    ["Minv", "M"]
    + [f"P_{k}" for k in IDX4]
    + [f"J_{a}{b}" for a, b in _JPAIRS]
    + ["D"]
    + [f"C_{k}" for k in IDX4]
    + [f"S_{k}" for k in IDX4]
    + [f"X_{k}" for k in IDX4]
)

_NAME_TO_ID = {n: i for i, n in enumerate(ATOM_NAMES)}

BASIS_A_ATOMS = frozenset(range(_C0 + 4))
BASIS_B_ATOMS = frozenset((MINV, M)) | frozenset(range(_P0, _P0 + 4)) | frozenset(
    range(_S0, _X0 + 4)
)


def atom_name(aid):
    return ATOM_NAMES[aid]


def is_P(aid):
    return _P0 <= aid < _P0 + 4


def is_J(aid):
    return _J0 <= aid < _J0 + 6


def is_C(aid):
    return _C0 <= aid < _C0 + 4


def is_S(aid):
    return _S0 <= aid < _S0 + 4


def is_X(aid):
    return _X0 <= aid < _X0 + 4


def j_indices(aid):
    return _JPAIRS[aid - _J0]


def atom_index(aid):
    """Single space-time index of a P/C/S/X atom."""
    if is_P(aid):
        return aid - _P0
    if is_C(aid):
        return aid - _C0
    if is_S(aid):
        return aid - _S0
    if is_X(aid):
        return aid - _X0
    raise ConstructionError(f"{atom_name(aid)} carries no single index")


def canonical_atom(spec):
    """Resolve an atom spec to (id, sign).

    Accepts canonical integer ids, names like "P_2" or "J_10", or tuples
    ("J", 1, 0).  J with swapped indices maps to -J_{mu nu}; equal indices
    are rejected.
    """
    if isinstance(spec, int):
        if 0 <= spec < len(ATOM_NAMES):
            return spec, 1
        raise ConstructionError(f"unknown atom id {spec}")
    if isinstance(spec, tuple):
        kind = spec[0]
        if kind == "J":
            return _canon_j(spec[1], spec[2])
        ctor = {"P": P, "C": C, "S": S, "X": X}.get(kind)
        if ctor is None:
            raise ConstructionError(f"unknown atom kind {kind!r}")
        return ctor(spec[1]), 1
    if isinstance(spec, str):
        if spec in _NAME_TO_ID:
            return _NAME_TO_ID[spec], 1
        if spec.startswith("J_") and len(spec) == 4 and spec[2:].isdigit():
            return _canon_j(int(spec[2]), int(spec[3]))
        raise ConstructionError(f"unknown atom {spec!r}")
    raise ConstructionError(f"bad atom spec {spec!r}")


def _canon_j(mu, nu):
    _chk(mu)
    _chk(nu)
    if mu == nu:
        raise ConstructionError(f"J_{mu}{nu} has equal indices")
    if mu < nu:
        return _JINDEX[(mu, nu)], 1
    return _JINDEX[(nu, mu)], -1


# ---------------------------------------------------------------------------
# errors

class ConstructionError(ValueError):
    """Malformed atom or expression at construction time."""


class EngineError(RuntimeError):
    """Internal consistency failure (broken table or exceeded step bound)."""


# ---------------------------------------------------------------------------
# polynomials

def _term_key(item):
    (word, hpow), _ = item
    return (len(word), word, hpow)


class NCPoly:
    """Formal sum of (Gaussian-rational * hbar^k) - weighted words.

    Stored as a dict {(word, hbar_pow): (re, im)} with no zero values.
    Instances are immutable by convention: every operation returns a new
    polynomial, so values may be shared freely across threads.
    """

    __slots__ = ("_t",)

    def __init__(self, terms=None):
        self._t = dict(terms) if terms else {}

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero():
        return NCPoly()

    @staticmethod
    def one():
        return NCPoly({((), 0): QONE})

    @staticmethod
    def atom(aid):
        return NCPoly({((aid,), 0): QONE})

    @staticmethod
    def word(atoms, coeff=QONE, hpow=0):
        return NCPoly({(tuple(atoms), hpow): coeff})

    @staticmethod
    def number(re, im=0, hpow=0):
        v = qi(re, im)
        if qi_is_zero(v):
            return NCPoly()
        return NCPoly({((), hpow): v})

    @staticmethod
    def _raw(d):
        p = NCPoly()
        p._t = d
        return p

    # -- inspection ---------------------------------------------------

    def items(self):
        """Terms in the canonical order (word length, word, hbar power)."""
        return sorted(self._t.items(), key=_term_key)

    def terms_dict(self):
        return self._t

    def coefficients(self):
        return [
            Coefficient(c[0], c[1], h) for (_, h), c in self.items()
        ]

    def is_zero(self):
        return not self._t

    def __len__(self):
        return len(self._t)

    def __eq__(self, other):
        if isinstance(other, NCPoly):
            return self._t == other._t
        if isinstance(other, int):
            return self._t == NCPoly.number(other)._t
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._t.items()))

    def __repr__(self):
        if not self._t:
            return "0"
        parts = []
        for (word, h), c in self.items():
            bits = []
            if c != QONE or (not word and h == 0):
                bits.append(qi_str(c))
            if h == 1:
                bits.append("hbar")
            elif h > 1:
                bits.append(f"hbar^{h}")
            bits.extend(atom_name(a) for a in word)
            parts.append(" ".join(bits))
        return " + ".join(parts)

    # -- linear structure ----------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            other = NCPoly.number(other)
        out = dict(self._t)
        for k, c in other._t.items():
            prev = out.get(k)
            if prev is None:
                out[k] = c
            else:
                s = qi_add(prev, c)
                if qi_is_zero(s):
                    del out[k]
                else:
                    out[k] = s
        return NCPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly._raw({k: qi_neg(c) for k, c in self._t.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = NCPoly.number(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, q):
        """Multiply by an exact real rational."""
        q = mpq(q)
        if not q:
            return NCPoly()
        return NCPoly._raw({k: qi_scale(c, q) for k, c in self._t.items()})

    def scale_qi(self, v):
        if qi_is_zero(v):
            return NCPoly()
        return NCPoly._raw({k: qi_mul(c, v) for k, c in self._t.items()})

    def times_i(self):
        return NCPoly._raw({k: qi_times_i(c) for k, c in self._t.items()})

    def shift_hbar(self, dk):
        """Multiply by hbar**dk (dk may be negative if every term allows it)."""
        out = {}
        for (w, h), c in self._t.items():
            if h + dk < 0:
                raise EngineError("hbar power would become negative")
            out[(w, h + dk)] = c
        return NCPoly._raw(out)

    # -- multiplicative structure ---------------------------------------

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        out = {}
        for (wa, ha), ca in self._t.items():
            for (wb, hb), cb in other._t.items():
                k = (wa + wb, ha + hb)
                c = qi_mul(ca, cb)
                prev = out.get(k)
                if prev is None:
                    out[k] = c
                else:
                    s = qi_add(prev, c)
                    if qi_is_zero(s):
                        del out[k]
                    else:
                        out[k] = s
        return NCPoly._raw(out)

    def __rmul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ConstructionError("powers must be nonnegative integers")
        out = NCPoly.one()
        for _ in range(k):
            out = out * self
        return out

    def atoms_used(self):
        out = set()
        for (w, _h) in self._t:
            out.update(w)
        return out


# ---------------------------------------------------------------------------
# rewrite systems

class RewriteSystem:
    """Atom ordering + commutator table + constraint rules for one basis.

    ``comm`` maps ordered pairs (hi, lo) with hi > lo to the normal form of
    the bracket (hi, lo) = [hi, lo]/(i hbar), stored as a raw terms dict.
    Missing pairs commute.  ``spin_rules`` switches on the basis-B
    constraint rules (spin-1/2 bilinear reduction and S.P transversality).

    Instances are immutable after construction; the normal-form memo cache
    is append-only and purely an accelerator (results never depend on it).
    """

    def __init__(self, basis_tag, atoms, comm, spin_rules=False,
                 step_bound=5_000_000, cache_max=1 << 20):
        self.basis_tag = basis_tag
        self.atoms = frozenset(atoms)
        self.comm = dict(comm)
        self.spin_rules = bool(spin_rules)
        self.step_bound = step_bound
        self.cache_max = cache_max
        self.entries = []
        self._cache = {}
        for (a, b) in self.comm:
            if a <= b:
                raise EngineError(
                    f"table pair ({atom_name(a)},{atom_name(b)}) not ordered hi>lo")

    def bracket_terms(self, a, b):
        """Raw terms dict of the bracket (a, b) for atoms in any order."""
        if a == b:
            return {}
        if a > b:
            return self.comm.get((a, b), {})
        base = self.comm.get((b, a))
        if not base:
            return {}
        return {k: qi_neg(c) for k, c in base.items()}

    def bracket(self, a, b):
        return NCPoly._raw(dict(self.bracket_terms(a, b)))

    def check_atoms(self, poly):
        bad = poly.atoms_used() - self.atoms
        if bad:
            names = ", ".join(sorted(atom_name(a) for a in bad))
            raise ConstructionError(
                f"atoms [{names}] not in basis {self.basis_tag}")

    def clear_cache(self):
        self._cache.clear()


_HALF_I = (mpq(0), mpq(1, 2))
_QUARTER = mpq(1, 4)


def _first_rewrite(word, rw):
    """Leftmost applicable rewrite of a word, or None if normal.

    Returns a list of (word, hbar_shift, coeff) replacements.  Rule order
    at each position: M*Minv cancellation, P_0^2 elimination, spin-1/2
    bilinear reduction, S.P transversality, commutator swap.  Each rule
    strictly decreases the termination measure documented in tables.py.
    """
    n = len(word)
    comm = rw.comm
    spin = rw.spin_rules
    for i in range(n - 1):
        a = word[i]
        b = word[i + 1]
        if (a == M and b == MINV) or (a == MINV and b == M):
            return [(word[:i] + word[i + 2:], 0, QONE)]
        if a == _P0 and b == _P0:
            pre = word[:i]
            post = word[i + 2:]
            out = [(pre + (M, M) + post, 0, QONE)]
            for k in (1, 2, 3):
                pk = _P0 + k
                out.append((pre + (pk, pk) + post, 0, QONE))
            return out
        if spin and is_S(a) and is_S(b):
            mu = a - _S0
            nu = b - _S0
            pre = word[:i]
            post = word[i + 2:]
            out = []
            # S_mu S_nu = -(hbar^2/4)(eta - P P / M^2) + (i hbar / 2)(S_mu, S_nu)
            e = eta(mu, nu)
            if e:
                out.append((pre + post, 2, (mpq(-e, 4), mpq(0))))
            out.append(
                (pre + (MINV, MINV, _P0 + min(mu, nu), _P0 + max(mu, nu)) + post,
                 2, (_QUARTER, mpq(0))))
            for (w2, h2), c2 in rw.bracket_terms(a, b).items():
                out.append((pre + w2 + post, h2 + 1, qi_mul(c2, _HALF_I)))
            return out
        if spin and a == _P0:
            j = i + 1
            p1_at = -1
            while j < n and is_P(word[j]):
                if p1_at < 0 and word[j] == _P0 + 1:
                    p1_at = j
                j += 1
            if j < n and word[j] == _S0:
                out = []
                for k in (1, 2, 3):
                    w2 = (word[:i] + (_P0 + k,) + word[i + 1:j]
                          + (_S0 + k,) + word[j + 1:])
                    out.append((w2, 0, QONE))
                return out
            if j < n and word[j] == _S0 + 1 and p1_at >= 0:
                # completion of the transversality rule against P_0^2
                # elimination: P_0 P_1 S_1 -> (M^2 + sum P_k^2) S_0
                #                            - P_0 P_2 S_2 - P_0 P_3 S_3
                rest = list(word)
                for idx in (j, p1_at, i):
                    del rest[idx]
                pre = tuple(rest[:i])
                post = tuple(rest[i:])
                out = [(pre + (M, M, _S0) + post, 0, QONE)]
                for k in (1, 2, 3):
                    out.append(
                        (pre + (_P0 + k, _P0 + k, _S0) + post, 0, QONE))
                for k in (2, 3):
                    out.append(
                        (pre + (_P0, _P0 + k, _S0 + k) + post, 0,
                         (mpq(-1), mpq(0))))
                return out
        if a > b:
            out = [(word[:i] + (b, a) + word[i + 2:], 0, QONE)]
            br = comm.get((a, b))
            if br:
                pre = word[:i]
                post = word[i + 2:]
                for (w2, h2), c2 in br.items():
                    out.append((pre + w2 + post, h2 + 1, qi_times_i(c2)))
            return out
    return None


def _word_nf(word, rw, budget):
    """Normal form of a single word as a raw terms dict.

    Explicit depth-first resolution with full memoization: every word met
    during reduction caches its own normal form, so the reduction graph is
    explored once per distinct word instead of once per path (the naive
    tree walk is exponential on long position-operator words).  ``budget``
    bounds the number of distinct words expanded by the enclosing
    normalize call.  The rewrite applied to any given word is unique
    (leftmost rule), so results do not depend on traversal order.
    """
    cache = rw._cache
    hit = cache.get(word)
    if hit is not None:
        return hit
    overflow = {}

    def lookup(w):
        v = cache.get(w)
        return overflow.get(w) if v is None else v

    pending = {}
    stack = [word]
    while stack:
        w = stack[-1]
        if lookup(w) is not None:
            stack.pop()
            continue
        repl = pending.get(w)
        if repl is None:
            repl = _first_rewrite(w, rw)
            if repl is None:
                store = cache if len(cache) < rw.cache_max else overflow
                store[w] = {(w, 0): QONE}
                stack.pop()
                continue
            budget[0] -= 1
            if budget[0] < 0:
                raise EngineError(
                    f"rewrite step bound exceeded in basis {rw.basis_tag} "
                    f"(broken table or bound too small)")
            pending[w] = repl
            missing = {w2 for (w2, _h, _c) in repl if lookup(w2) is None}
            if missing:
                if missing & pending.keys():
                    raise EngineError(
                        f"rewrite loop detected in basis {rw.basis_tag}")
                stack.extend(missing)
                continue
        out = {}
        for (w2, h2, c2) in repl:
            sub = lookup(w2)
            if sub is None:
                raise EngineError(
                    f"rewrite loop detected in basis {rw.basis_tag}")
            for (w3, h3), c3 in sub.items():
                k = (w3, h2 + h3)
                v = qi_mul(c2, c3)
                prev = out.get(k)
                s = v if prev is None else qi_add(prev, v)
                if qi_is_zero(s):
                    out.pop(k, None)
                else:
                    out[k] = s
        store = cache if len(cache) < rw.cache_max else overflow
        store[w] = out
        del pending[w]
        stack.pop()
    return lookup(word)


# ---------------------------------------------------------------------------
# operations

def make_poly(terms):
    """Canonicalizing constructor from (coefficient, word) pairs.

    Coefficients may be ints, rationals, (re, im) pairs, (re, im, hbar_pow)
    triples or Coefficient instances.  Words are iterables of atom specs
    (ids, names like "P_0" or "J_10", or tuples like ("J", 1, 0)); J atoms
    with descending indices are folded to -J_{mu nu}.
    """
    out = NCPoly()
    for coeff, word in terms:
        if isinstance(coeff, Coefficient):
            v, h = (coeff.re, coeff.im), coeff.hbar_pow
        elif isinstance(coeff, tuple):
            if len(coeff) == 2:
                v, h = qi(*coeff), 0
            else:
                v, h = qi(coeff[0], coeff[1]), int(coeff[2])
        else:
            v, h = qi(coeff), 0
        sign = 1
        atoms = []
        for spec in word:
            aid, s = canonical_atom(spec)
            sign *= s
            atoms.append(aid)
        if sign < 0:
            v = qi_neg(v)
        if not qi_is_zero(v):
            out = out + NCPoly.word(atoms, v, h)
    return out


def multiply(a, b):
    """Free (concatenation) product; canonical but not normal ordered."""
    return a * b


def sym_product(a, b):
    """Symmetrized product (ab + ba)/2.  Strictly binary: the operation is
    not associative, so chains must be parenthesized by the caller."""
    return (a * b + b * a).scale(mpq(1, 2))


def sym_divide_by_M(a, k=1):
    """Symmetrized division by M**k, i.e. a . Minv^k."""
    if not isinstance(k, int) or k < 1:
        raise ConstructionError("division power must be a positive integer")
    return sym_product(a, NCPoly.word((MINV,) * k))


def normalize(p, rw):
    """Unique normal form of p under the rewrite system."""
    rw.check_atoms(p)
    budget = [rw.step_bound]
    out = {}
    for (w, h), c in p.terms_dict().items():
        nf = _word_nf(w, rw, budget)
        for (w2, h2), c2 in nf.items():
            k = (w2, h + h2)
            v = qi_mul(c, c2)
            prev = out.get(k)
            s = v if prev is None else qi_add(prev, v)
            if qi_is_zero(s):
                out.pop(k, None)
            else:
                out[k] = s
    return NCPoly._raw(out)


def commutator(a, b, rw):
    """The bracket (a, b) = (ab - ba)/(i hbar), in normal form.

    The difference always carries an overall factor i*hbar after reduction;
    if it does not, the table is corrupt and an EngineError is raised.
    """
    diff = normalize(a * b - b * a, rw)
    out = {}
    for (w, h), c in diff.terms_dict().items():
        if h < 1:
            raise EngineError(
                "commutator lacks an overall i*hbar factor "
                f"(term {NCPoly._raw({(w, h): c})!r}); corrupted table?")
        out[(w, h - 1)] = qi_div_i(c)
    return NCPoly._raw(out)


def equal(a, b, rw):
    """True iff a - b normalizes to the zero polynomial."""
    if isinstance(b, int):
        b = NCPoly.number(b)
    return normalize(a - b, rw).is_zero()
