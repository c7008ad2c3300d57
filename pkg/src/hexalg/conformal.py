"""Composite observables, identity suites, finite frame transformations and
the operator law of free fall.

Everything here is exact: residuals are polynomials, and an identity holds
iff its residual normalizes to zero.  The six-dimensional index set is
ordered (-, +, 0, 1, 2, 3) with metric diag(-1, 1, 1, -1, -1, -1), whose
lower-right block is the ordinary Minkowski metric.
"""

import time
from math import factorial

from .coeff import mpq, qi
from .ncalg import (
    MINV, M, D, P, J, C, S, X,
    ETA, eta, IDX4, atom_name,
    NCPoly, ConstructionError,
    normalize, commutator, sym_product,
)
from . import tables

__all__ = [
    "IDX6", "eta6", "AccelParams", "IdentityReport", "ObservableSet",
    "boost", "BoostResult", "motion_derivative", "free_fall_residuals",
    "verify_identity", "SUITE_IDS",
]

IDX6 = ("-", "+", 0, 1, 2, 3)

_ETA6 = {"-": -1, "+": 1, 0: 1, 1: -1, 2: -1, 3: -1}


def eta6(a, b):
    """6d metric diag(-1,1,1,-1,-1,-1) over the index order (-,+,0,1,2,3)."""
    return _ETA6[a] if a == b else 0


class AccelParams:
    """Acceleration four-vector with exact rational upper components."""

    __slots__ = ("alpha", "alpha_sq")

    def __init__(self, alpha):
        vals = tuple(mpq(a) for a in alpha)
        if len(vals) != 4:
            raise ConstructionError("acceleration needs four components")
        self.alpha = vals
        self.alpha_sq = sum(
            (mpq(ETA[mu]) * vals[mu] * vals[mu] for mu in IDX4), mpq(0))

    @classmethod
    def parse(cls, text):
        return cls([p.strip() for p in text.split(",")])

    def upper(self, mu):
        return self.alpha[mu]

    def lower(self, mu):
        return mpq(ETA[mu]) * self.alpha[mu]

    def __add__(self, other):
        return AccelParams([a + b for a, b in zip(self.alpha, other.alpha)])

    def __neg__(self):
        return AccelParams([-a for a in self.alpha])

    def is_zero(self):
        return all(not a for a in self.alpha)

    def __repr__(self):
        return "alpha(" + ",".join(str(a) for a in self.alpha) + ")"


class IdentityReport:
    """Outcome of one identity check: pass iff the residual is zero."""

    __slots__ = ("identity", "residual", "passed", "basis", "time_ms")

    def __init__(self, identity, residual, basis, time_ms):
        self.identity = identity
        self.residual = residual
        self.passed = residual.is_zero()
        self.basis = basis
        self.time_ms = time_ms

    def __repr__(self):
        status = "pass" if self.passed else f"FAIL residual={self.residual!r}"
        return f"[{self.basis}] {self.identity}: {status}"


class ObservableSet:
    """All composite observables over one rewrite basis, built lazily.

    Basis A realizes X and S as composites over {P, J, D, M}; basis B
    realizes D, J and C as composites over {P, X, S, M} with the spin-1/2
    rules active.  Construction is single-shot and the set is immutable
    afterwards.
    """

    def __init__(self, basis="B", rw=None, eps_sign=1):
        if basis not in ("A", "B"):
            raise ConstructionError(f"unknown basis {basis!r}")
        self.basis = basis
        self.eps_sign = eps_sign
        if rw is None:
            rw = tables.basis_A() if basis == "A" else tables.basis_B()
        self.rw = rw
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # -- elementary pieces ------------------------------------------------

    @property
    def M_poly(self):
        return NCPoly.atom(M)

    @property
    def Minv_poly(self):
        return NCPoly.atom(MINV)

    def P_poly(self, mu):
        return NCPoly.atom(P(mu))

    # -- builders ----------------------------------------------------------

    @property
    def Xs(self):
        def build():
            if self.basis == "A":
                return tables.position_A(self.rw)
            return [NCPoly.atom(X(mu)) for mu in IDX4]
        return self._get("X", build)

    @property
    def Ss(self):
        def build():
            if self.basis == "A":
                return tables.spin_vector_A(self.rw, self.eps_sign)
            return [NCPoly.atom(S(mu)) for mu in IDX4]
        return self._get("S", build)

    @property
    def S_pair(self):
        def build():
            if self.basis == "A":
                return tables.spin_tensor_A(self.rw, self.Ss, self.eps_sign)
            return tables.basis_b_spin_tensor(self.rw)
        return self._get("S_pair", build)

    @property
    def D_poly(self):
        def build():
            if self.basis == "A":
                return NCPoly.atom(D)
            return tables.basis_b_dilatation(self.rw)
        return self._get("D", build)

    def J_poly(self, mu, nu):
        """J_{mu nu} with antisymmetry, atoms in A, composites in B."""
        if mu == nu:
            return NCPoly.zero()
        sign = 1
        if mu > nu:
            mu, nu, sign = nu, mu, -1
        def build():
            if self.basis == "A":
                return {(a, b): NCPoly.atom(J(a, b))
                        for a in IDX4 for b in IDX4 if a < b}
            return tables.basis_b_lorentz(self.rw)
        jm = self._get("J4", build)[(mu, nu)]
        return jm if sign > 0 else -jm

    @property
    def Cs(self):
        def build():
            if self.basis == "A":
                return [NCPoly.atom(C(mu)) for mu in IDX4]
            return tables.basis_b_special_conformal(self.rw)
        return self._get("C", build)

    @property
    def X_sq(self):
        def build():
            acc = NCPoly.zero()
            for mu in IDX4:
                acc = acc + sym_product(
                    self.Xs[mu].scale(ETA[mu]), self.Xs[mu])
            return normalize(acc, self.rw)
        return self._get("X2", build)

    @property
    def Ys(self):
        """Hexaspherical observables keyed by (-, +, 0, 1, 2, 3)."""
        def build():
            mpoly = self.M_poly
            ys = {}
            for mu in IDX4:
                ys[mu] = normalize(
                    sym_product(mpoly, self.Xs[mu]), self.rw)
            spread = normalize(
                sym_product(mpoly, self.X_sq)
                + NCPoly.word((MINV,), qi(mpq(3, 4)), 2), self.rw)
            ys["+"] = (spread - mpoly).scale(mpq(1, 2))
            ys["-"] = (-spread - mpoly).scale(mpq(1, 2))
            return ys
        return self._get("Y", build)

    @property
    def Y_spread(self):
        """Y_+ - Y_- = M . X^2 + (3/4) hbar^2 / M."""
        ys = self.Ys
        return normalize(ys["+"] - ys["-"], self.rw)

    @property
    def Y_sq(self):
        def build():
            acc = NCPoly.zero()
            for a in IDX6:
                ya = self.Ys[a]
                acc = acc + sym_product(ya.scale(_ETA6[a]), ya)
            return normalize(acc, self.rw)
        return self._get("Y2", build)

    def Jab(self, a, b):
        """Packaged 6d rotation generators:
        J_{+mu} = (P_mu + C_mu)/2, J_{-mu} = (P_mu - C_mu)/2, J_{-+} = D."""
        if a == b:
            return NCPoly.zero()
        def build():
            out = {}
            out[("-", "+")] = self.D_poly
            for mu in IDX4:
                pl = normalize(
                    (self.P_poly(mu) + self.Cs[mu]).scale(mpq(1, 2)), self.rw)
                mi = normalize(
                    (self.P_poly(mu) - self.Cs[mu]).scale(mpq(1, 2)), self.rw)
                out[("+", mu)] = pl
                out[("-", mu)] = mi
            for mu in IDX4:
                for nu in IDX4:
                    if mu < nu:
                        out[(mu, nu)] = normalize(self.J_poly(mu, nu), self.rw)
            return out
        table = self._get("Jab", build)
        if (a, b) in table:
            return table[(a, b)]
        return -table[(b, a)]


def elaboration_context(obs):
    """(images, y_table) pair for evaluating parsed expressions over obs.

    Observables that are not atoms of the working basis elaborate to their
    composites, so every grammar atom is meaningful in either basis.
    """
    images = {}
    if obs.basis == "A":
        for mu in IDX4:
            images[X(mu)] = obs.Xs[mu]
            images[S(mu)] = obs.Ss[mu]
    else:
        images[D] = obs.D_poly
        for mu in IDX4:
            images[C(mu)] = obs.Cs[mu]
            for nu in IDX4:
                if mu < nu:
                    images[J(mu, nu)] = obs.J_poly(mu, nu)
    return images, obs.Ys


# ---------------------------------------------------------------------------
# finite transformations

class BoostResult:
    """Summed conjugation series with its termination diagnostics."""

    __slots__ = ("poly", "terminated_at", "truncated_at")

    def __init__(self, poly, terminated_at, truncated_at):
        self.poly = poly
        self.terminated_at = terminated_at
        self.truncated_at = truncated_at


def boost(obs, target, alpha, order=None, max_order=12):
    """Finite transformation to an accelerated frame by conjugation series:

        F -> F + a^mu (F, C_mu) + (1/2) a^mu a^nu ((F, C_mu), C_nu) + ...

    The series is summed until a term vanishes identically (detected, not
    assumed); for observables in the hexaspherical span this happens at
    third order.  ``order`` truncates earlier; without it, a series still
    alive past ``max_order`` raises EngineError-free truncation reporting
    via ``truncated_at``.
    """
    rw = obs.rw
    cs = obs.Cs
    acc = normalize(target, rw)
    cur = acc
    terminated = None
    truncated = None
    k = 0
    limit = order if order is not None else max_order
    while True:
        k += 1
        nxt = NCPoly.zero()
        for mu in IDX4:
            a = alpha.upper(mu)
            if not a:
                continue
            nxt = nxt + commutator(cur, cs[mu], rw).scale(a)
        cur = normalize(nxt, rw)
        if cur.is_zero():
            terminated = k - 1
            break
        if k > limit:
            truncated = k - 1
            break
        acc = acc + cur.scale(mpq(1, factorial(k)))
    return BoostResult(normalize(acc, rw), terminated, truncated)


def closed_form_boost_M(obs, alpha):
    """The quadratic closed form of the transformed mass:
    M - 2 a^mu Y_mu + a^2 (Y_+ - Y_-)."""
    ys = obs.Ys
    acc = obs.M_poly
    for mu in IDX4:
        acc = acc - ys[mu].scale(2 * alpha.upper(mu))
    acc = acc + obs.Y_spread.scale(alpha.alpha_sq)
    return normalize(acc, obs.rw)


def closed_form_boost_Y(obs, a, alpha):
    """Transformed hexaspherical components, written with the originals:
    Ybar_mu = Y_mu - a_mu (Y_+ - Y_-); Ybar_+ - Ybar_- = Y_+ - Y_-;
    Ybar_+ + Ybar_- = -Mbar."""
    ys = obs.Ys
    if a in IDX4:
        return normalize(
            ys[a] - obs.Y_spread.scale(alpha.lower(a)), obs.rw)
    mbar = closed_form_boost_M(obs, alpha)
    spread = obs.Y_spread
    if a == "+":
        return normalize((spread - mbar).scale(mpq(1, 2)), obs.rw)
    return normalize((-spread - mbar).scale(mpq(1, 2)), obs.rw)


def motion_derivative(obs, F, alpha):
    """F' = (F, Mbar): commutator with the inertial-frame mass."""
    mbar = boost(obs, obs.M_poly, alpha).poly
    return commutator(F, mbar, obs.rw)


def conformal_factor_inverse(obs, alpha):
    """1/Lambda = 1 - 2 a^mu X_mu + a^2 (X^2 + (3/4) hbar^2 / M^2)."""
    acc = NCPoly.one()
    for mu in IDX4:
        acc = acc - obs.Xs[mu].scale(2 * alpha.upper(mu))
    acc = acc + (obs.X_sq
                 + NCPoly.word((MINV, MINV), qi(mpq(3, 4)), 2)
                 ).scale(alpha.alpha_sq)
    return normalize(acc, obs.rw)


def free_fall_residuals(obs, alpha):
    """Residuals of the three operator free-fall laws:
    Y_mu'' = 2 a_mu Mbar; M'' = 2 a^2 Mbar; (Y_+ - Y_-)'' = 2 Mbar."""
    rw = obs.rw
    mbar = boost(obs, obs.M_poly, alpha).poly
    ys = obs.Ys

    def second(fp):
        return commutator(commutator(fp, mbar, rw), mbar, rw)

    reports = []
    t0 = time.time()
    res = NCPoly.zero()
    for mu in IDX4:
        r = normalize(second(ys[mu]) - mbar.scale(2 * alpha.lower(mu)), rw)
        if not r.is_zero() and res.is_zero():
            res = r
    reports.append(IdentityReport(
        "free-fall:position", res, obs.basis, _ms(t0)))
    t0 = time.time()
    r = normalize(second(obs.M_poly) - mbar.scale(2 * alpha.alpha_sq), rw)
    reports.append(IdentityReport("free-fall:mass", r, obs.basis, _ms(t0)))
    t0 = time.time()
    r = normalize(second(obs.Y_spread) - mbar.scale(2), rw)
    reports.append(IdentityReport("free-fall:spread", r, obs.basis, _ms(t0)))
    return reports


def _ms(t0):
    return int((time.time() - t0) * 1000)


# ---------------------------------------------------------------------------
# identity suites

def _report(rid, residual, basis, t0):
    return IdentityReport(rid, residual, basis, _ms(t0))


def _suite_JJ(obs):
    rw = obs.rw
    out = []
    for i, ab in enumerate(_PAIRS6):
        for cd in _PAIRS6[i + 1:]:
            t0 = time.time()
            a, b = ab
            c, d = cd
            lhs = commutator(obs.Jab(a, b), obs.Jab(c, d), rw)
            rhs = (obs.Jab(a, d).scale(eta6(b, c))
                   + obs.Jab(b, c).scale(eta6(a, d))
                   - obs.Jab(b, d).scale(eta6(a, c))
                   - obs.Jab(a, c).scale(eta6(b, d)))
            out.append(_report(f"JJ[{ab},{cd}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_JY(obs):
    rw = obs.rw
    out = []
    for (a, b) in _PAIRS6:
        for c in IDX6:
            t0 = time.time()
            lhs = commutator(obs.Jab(a, b), obs.Ys[c], rw)
            rhs = (obs.Ys[a].scale(eta6(b, c))
                   - obs.Ys[b].scale(eta6(a, c)))
            out.append(_report(f"JY[({a},{b}),{c}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_YY(obs):
    rw = obs.rw
    out = []
    for (a, b) in _PAIRS6:
        t0 = time.time()
        lhs = commutator(obs.Ys[a], obs.Ys[b], rw)
        out.append(_report(f"YY[{a},{b}]",
                           normalize(lhs - obs.Jab(a, b), rw), obs.basis, t0))
    return out


def _suite_YYY(obs):
    rw = obs.rw
    out = []
    inner = {}
    for a in IDX6:
        for b in IDX6:
            key = (a, b)
            if a == b:
                inner[key] = NCPoly.zero()
            elif (b, a) in inner:
                inner[key] = -inner[(b, a)]
            else:
                inner[key] = commutator(obs.Ys[a], obs.Ys[b], rw)
    for a in IDX6:
        for b in IDX6:
            for c in IDX6:
                t0 = time.time()
                lhs = commutator(inner[(a, b)], obs.Ys[c], rw)
                rhs = (obs.Ys[a].scale(eta6(b, c))
                       - obs.Ys[b].scale(eta6(a, c)))
                out.append(_report(f"YYY[{a},{b},{c}]",
                                   normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_CY(obs):
    rw = obs.rw
    out = []
    spread = obs.Y_spread
    for mu in IDX4:
        for nu in IDX4:
            t0 = time.time()
            lhs = commutator(obs.Cs[mu], obs.Ys[nu], rw)
            rhs = spread.scale(eta(mu, nu)) if eta(mu, nu) else NCPoly.zero()
            out.append(_report(f"CY[{mu},{nu}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    for mu in IDX4:
        t0 = time.time()
        lhs = commutator(obs.Cs[mu], spread, rw)
        out.append(_report(f"CY-spread[{mu}]", lhs, obs.basis, t0))
    return out


def _suite_CM(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        t0 = time.time()
        lhs = commutator(obs.Cs[mu], obs.M_poly, rw)
        out.append(_report(f"CM[{mu}]",
                           normalize(lhs - obs.Ys[mu].scale(2), rw),
                           obs.basis, t0))
    return out


def _suite_PX(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        for nu in IDX4:
            t0 = time.time()
            lhs = commutator(obs.P_poly(mu), obs.Xs[nu], rw)
            out.append(_report(
                f"PX[{mu},{nu}]",
                normalize(lhs + NCPoly.number(eta(mu, nu)), rw),
                obs.basis, t0))
    return out


def _suite_DX(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        t0 = time.time()
        lhs = commutator(obs.D_poly, obs.Xs[mu], rw)
        out.append(_report(f"DX[{mu}]",
                           normalize(lhs + obs.Xs[mu], rw), obs.basis, t0))
    return out


def _suite_JX(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            for ro in IDX4:
                t0 = time.time()
                lhs = commutator(obs.J_poly(mu, nu), obs.Xs[ro], rw)
                rhs = (obs.Xs[mu].scale(eta(nu, ro))
                       - obs.Xs[nu].scale(eta(mu, ro)))
                out.append(_report(f"JX[({mu},{nu}),{ro}]",
                                   normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_XX(obs):
    rw = obs.rw
    out = []
    minv2 = NCPoly.word((MINV, MINV))
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            t0 = time.time()
            lhs = commutator(obs.Xs[mu], obs.Xs[nu], rw)
            rhs = normalize(obs.S_pair[mu][nu] * minv2, rw)
            out.append(_report(f"XX[{mu},{nu}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_inverse(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            t0 = time.time()
            rhs = (sym_product(obs.P_poly(mu), obs.Xs[nu])
                   - sym_product(obs.P_poly(nu), obs.Xs[mu])
                   + obs.S_pair[mu][nu])
            out.append(_report(f"invJ[{mu},{nu}]",
                               normalize(obs.J_poly(mu, nu) - rhs, rw),
                               obs.basis, t0))
    t0 = time.time()
    rhs = NCPoly.zero()
    for mu in IDX4:
        rhs = rhs + sym_product(obs.P_poly(mu).scale(ETA[mu]), obs.Xs[mu])
    out.append(_report("invD",
                       normalize(obs.D_poly - rhs, rw), obs.basis, t0))
    return out


def _suite_S2(obs):
    t0 = time.time()
    acc = NCPoly.zero()
    for mu in IDX4:
        acc = acc + sym_product(obs.Ss[mu].scale(ETA[mu]), obs.Ss[mu])
    resid = normalize(acc + NCPoly.number(mpq(3, 4), 0, 2), obs.rw)
    rep = [_report("S2", resid, obs.basis, t0)]
    t0 = time.time()
    acc = NCPoly.zero()
    for mu in IDX4:
        acc = acc + sym_product(obs.Ss[mu].scale(ETA[mu]), obs.P_poly(mu))
    rep.append(_report("SP", normalize(acc, obs.rw), obs.basis, t0))
    return rep


def _suite_Y2(obs):
    t0 = time.time()
    resid = normalize(obs.Y_sq - NCPoly.number(1, 0, 2), obs.rw)
    return [_report("Y2", resid, obs.basis, t0)]


def _suite_spinhalf(obs):
    rw = obs.rw
    out = []
    minv2 = NCPoly.word((MINV, MINV))
    for mu in IDX4:
        for nu in IDX4:
            if mu > nu:
                continue
            t0 = time.time()
            lhs = sym_product(obs.Ss[mu], obs.Ss[nu])
            rhs = (NCPoly.number(-eta(mu, nu), 0, 2).scale(mpq(1, 4))
                   + (obs.P_poly(mu) * obs.P_poly(nu) * minv2)
                   .scale(mpq(1, 4)).shift_hbar(2))
            out.append(_report(f"spinhalf[{mu},{nu}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_PJDC(obs):
    rw = obs.rw
    out = []
    for mu in IDX4:
        t0 = time.time()
        lhs = commutator(obs.D_poly, obs.Cs[mu], rw)
        out.append(_report(f"DC[{mu}]",
                           normalize(lhs + obs.Cs[mu], rw), obs.basis, t0))
    for mu in IDX4:
        for nu in IDX4:
            t0 = time.time()
            lhs = commutator(obs.P_poly(mu), obs.Cs[nu], rw)
            rhs = (obs.D_poly.scale(-2 * eta(mu, nu))
                   - obs.J_poly(mu, nu).scale(2))
            out.append(_report(f"PC[{mu},{nu}]",
                               normalize(lhs - rhs, rw), obs.basis, t0))
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            t0 = time.time()
            lhs = commutator(obs.Cs[mu], obs.Cs[nu], rw)
            out.append(_report(f"CC[{mu},{nu}]", lhs, obs.basis, t0))
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            for ro in IDX4:
                t0 = time.time()
                lhs = commutator(obs.J_poly(mu, nu), obs.Cs[ro], rw)
                rhs = (obs.Cs[mu].scale(eta(nu, ro))
                       - obs.Cs[nu].scale(eta(mu, ro)))
                out.append(_report(f"JC[({mu},{nu}),{ro}]",
                                   normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_jacobi(obs):
    import itertools
    rw = obs.rw
    out = []
    atoms = sorted(rw.atoms)
    for a, b, c in itertools.combinations(atoms, 3):
        for (x, y, z) in ((a, b, c), (a, c, b), (b, c, a)):
            t0 = time.time()
            A = NCPoly.atom(x)
            B = NCPoly.atom(y)
            Cc = NCPoly.atom(z)
            lhs = commutator(commutator(A, B, rw), Cc, rw)
            rhs = (commutator(A, commutator(B, Cc, rw), rw)
                   - commutator(B, commutator(A, Cc, rw), rw))
            out.append(_report(
                f"jacobi[{atom_name(x)},{atom_name(y)},{atom_name(z)}]",
                normalize(lhs - rhs, rw), obs.basis, t0))
    return out


def _suite_nonassoc(obs):
    """A.(B.C) - (A.B).C = (hbar^2/4)(B,(A,C)) over all atom triples."""
    rw = obs.rw
    out = []
    atoms = sorted(rw.atoms)
    for x in atoms:
        for y in atoms:
            for z in atoms:
                t0 = time.time()
                A = NCPoly.atom(x)
                B = NCPoly.atom(y)
                Cc = NCPoly.atom(z)
                lhs = (sym_product(A, sym_product(B, Cc))
                       - sym_product(sym_product(A, B), Cc))
                rhs = commutator(B, commutator(A, Cc, rw), rw) \
                    .scale(mpq(1, 4)).shift_hbar(2)
                out.append(_report(
                    f"nonassoc[{atom_name(x)},{atom_name(y)},{atom_name(z)}]",
                    normalize(lhs - rhs, rw), obs.basis, t0))
    return out


_PAIRS6 = [(a, IDX6[j]) for i, a in enumerate(IDX6) for j in range(i + 1, 6)]


def _suite_traY(obs, alpha):
    rw = obs.rw
    out = []
    t0 = time.time()
    res = boost(obs, obs.M_poly, alpha)
    resid = normalize(res.poly - closed_form_boost_M(obs, alpha), rw)
    if res.terminated_at is None or res.terminated_at > 2:
        resid = resid + NCPoly.number(1)  # series failed to terminate
    out.append(_report(f"traY:M[{alpha!r}]", resid, obs.basis, t0))
    for a in IDX6:
        t0 = time.time()
        res = boost(obs, obs.Ys[a], alpha)
        resid = normalize(
            res.poly - closed_form_boost_Y(obs, a, alpha), rw)
        if res.terminated_at is None or res.terminated_at > 2:
            resid = resid + NCPoly.number(1)
        out.append(_report(f"traY:Y_{a}[{alpha!r}]", resid, obs.basis, t0))
    t0 = time.time()
    res = boost(obs, obs.Y_spread, alpha)
    resid = normalize(res.poly - obs.Y_spread, rw)
    out.append(_report(f"traY:spread[{alpha!r}]", resid, obs.basis, t0))
    return out


def _suite_boost_group(obs, alpha, beta):
    rw = obs.rw
    out = []
    targets = [("M", obs.M_poly)] + [(f"Y_{a}", obs.Ys[a]) for a in IDX6]
    for name, f in targets:
        t0 = time.time()
        once = boost(obs, boost(obs, f, alpha).poly, beta).poly
        direct = boost(obs, f, alpha + beta).poly
        out.append(_report(f"boost-group:{name}",
                           normalize(once - direct, rw), obs.basis, t0))
    t0 = time.time()
    back = boost(obs, boost(obs, obs.M_poly, alpha).poly, -alpha).poly
    out.append(_report("boost-inverse:M",
                       normalize(back - obs.M_poly, rw), obs.basis, t0))
    return out


def _suite_conservation(obs, alpha):
    rw = obs.rw
    mbar = boost(obs, obs.M_poly, alpha).poly
    out = []
    for mu in IDX4:
        t0 = time.time()
        pbar = boost(obs, obs.P_poly(mu), alpha).poly
        out.append(_report(f"conservation:P_{mu}",
                           commutator(pbar, mbar, rw), obs.basis, t0))
    for mu in IDX4:
        for nu in IDX4:
            if mu >= nu:
                continue
            t0 = time.time()
            jbar = boost(obs, obs.J_poly(mu, nu), alpha).poly
            out.append(_report(f"conservation:J_{mu}{nu}",
                               commutator(jbar, mbar, rw), obs.basis, t0))
    return out


def _suite_lambda(obs, alpha):
    """The quantum conformal factor differs from the classical one only by
    the squared-spin term (3/4) hbar^2 a^2 / M^2."""
    rw = obs.rw
    t0 = time.time()
    quantum = conformal_factor_inverse(obs, alpha)
    classical = NCPoly.one()
    for mu in IDX4:
        classical = classical - obs.Xs[mu].scale(2 * alpha.upper(mu))
    classical = classical + obs.X_sq.scale(alpha.alpha_sq)
    classical = normalize(classical, rw)
    spin_term = NCPoly.word((MINV, MINV), qi(mpq(3, 4) * alpha.alpha_sq), 2)
    resid = normalize(quantum - classical - spin_term, rw)
    return [_report(f"lambda-spin[{alpha!r}]", resid, obs.basis, t0)]


def _suite_motion(obs, alpha):
    rw = obs.rw
    out = []
    mbar = boost(obs, obs.M_poly, alpha).poly
    for mu in IDX4:
        t0 = time.time()
        ybar = boost(obs, obs.Ys[mu], alpha).poly
        pbar = boost(obs, obs.P_poly(mu), alpha).poly
        resid = normalize(commutator(ybar, mbar, rw) - pbar, rw)
        out.append(_report(f"motion:Ybar_{mu}'", resid, obs.basis, t0))
    return out


SUITE_IDS = (
    "JJ", "JY", "YY", "YYY", "CY", "CM", "PX", "DX", "JX", "XX",
    "inverse", "S2", "Y2", "spinhalf", "PJDC", "jacobi", "nonassoc",
    "traY", "boost_group", "conservation", "lambda", "motion", "d2Y",
)


def verify_identity(obs, suite, alpha=None, beta=None):
    """Run one identity suite and return its reports.

    Suites needing acceleration parameters (traY, boost_group, d2Y,
    conservation, lambda, motion) default to alpha = (1/2, 0, 0, 0) and
    beta = (0, 1/3, 0, 0).
    """
    if alpha is None:
        alpha = AccelParams((mpq(1, 2), 0, 0, 0))
    if beta is None:
        beta = AccelParams((0, mpq(1, 3), 0, 0))
    table = {
        "JJ": lambda: _suite_JJ(obs),
        "JY": lambda: _suite_JY(obs),
        "YY": lambda: _suite_YY(obs),
        "YYY": lambda: _suite_YYY(obs),
        "CY": lambda: _suite_CY(obs),
        "CM": lambda: _suite_CM(obs),
        "PX": lambda: _suite_PX(obs),
        "DX": lambda: _suite_DX(obs),
        "JX": lambda: _suite_JX(obs),
        "XX": lambda: _suite_XX(obs),
        "inverse": lambda: _suite_inverse(obs),
        "S2": lambda: _suite_S2(obs),
        "Y2": lambda: _suite_Y2(obs),
        "spinhalf": lambda: _suite_spinhalf(obs),
        "PJDC": lambda: _suite_PJDC(obs),
        "jacobi": lambda: _suite_jacobi(obs),
        "nonassoc": lambda: _suite_nonassoc(obs),
        "traY": lambda: _suite_traY(obs, alpha),
        "boost_group": lambda: _suite_boost_group(obs, alpha, beta),
        "conservation": lambda: _suite_conservation(obs, alpha),
        "lambda": lambda: _suite_lambda(obs, alpha),
        "motion": lambda: _suite_motion(obs, alpha),
        "d2Y": lambda: free_fall_residuals(obs, alpha),
    }
    if suite not in table:
        raise ConstructionError(f"unknown identity suite {suite!r}")
    return table[suite]()
