"""Expression parser and canonical printer.

Grammar (whitespace-insensitive):

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'.') factor)*
    factor := rational | 'i' | 'hbar' | atom | 'comm(' expr ',' expr ')'
              | '(' expr ')' | factor '^' uint
    atom   := ('P_'|'X_'|'S_'|'C_') [0-3] | 'J_' [0-3][0-3]
              | 'D' | 'M' | 'Minv' | 'Y_' ('-'|'+'|[0-3])

'*' is left-associative.  '.' is the symmetrized product and is strictly
binary: an unparenthesized chain of '.' at one level is a parse error
(the operation is not associative).  Y atoms are accepted by the parser
and expanded into their defining composites at elaboration time; engine
output never contains them, so printing and parsing round-trip exactly.
"""

import re
from fractions import Fraction

from .coeff import mpq
from .ncalg import (
    NCPoly, ConstructionError, canonical_atom, atom_name,
    sym_product, commutator, normalize,
)

__all__ = ["ParseError", "parse", "to_poly", "print_canonical", "Ast"]


class ParseError(ValueError):
    """Syntax error with 1-based line/column position."""

    def __init__(self, msg, line, col):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<jatom>J_[0-9][0-9])
  | (?P<atom>[PXSC]_[0-9])
  | (?P<yatom>Y_(?:[-+]|[0-9]))
  | (?P<name>Minv|M|D|hbar|comm|i)
  | (?P<uint>[0-9]+)
  | (?P<sym>[-+*.^(),/])
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.text!r})"


def _tokenize(text):
    tokens = []
    line = 1
    col = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# -- AST ---------------------------------------------------------------------

class Ast:
    __slots__ = ()


class Num(Ast):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)


class ImagUnit(Ast):
    __slots__ = ()


class HbarSym(Ast):
    __slots__ = ()


class AtomSym(Ast):
    __slots__ = ("name", "line", "col")

    def __init__(self, name, line, col):
        self.name = name
        self.line = line
        self.col = col


class YSym(Ast):
    __slots__ = ("label",)

    def __init__(self, label):
        self.label = label


class Neg(Ast):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg


class BinOp(Ast):
    __slots__ = ("op", "lhs", "rhs")

    def __init__(self, op, lhs, rhs):
        self.op = op  # '+', '-', '*', '.'
        self.lhs = lhs
        self.rhs = rhs


class Pow(Ast):
    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        self.base = base
        self.exponent = exponent


class Comm(Ast):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        self.lhs = lhs
        self.rhs = rhs


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, text=None):
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}",
                             tok.line, tok.col)
        return tok

    def parse_expr(self):
        tok = self.peek()
        negate = False
        if tok.kind == "sym" and tok.text == "-":
            self.next()
            negate = True
        node = self.parse_term()
        if negate:
            node = Neg(node)
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text in "+-":
                self.next()
                rhs = self.parse_term()
                node = BinOp(tok.text, node, rhs)
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        used_sym = False
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text == "*":
                self.next()
                node = BinOp("*", node, self.parse_factor())
            elif tok.kind == "sym" and tok.text == ".":
                if used_sym:
                    raise ParseError(
                        "ambiguous symmetrized-product chain: '.' is not "
                        "associative, parenthesize explicitly",
                        tok.line, tok.col)
                self.next()
                node = BinOp(".", node, self.parse_factor())
                used_sym = True
            else:
                return node

    def parse_factor(self):
        node = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text == "^":
                self.next()
                e = self.expect("uint")
                node = Pow(node, int(e.text))
            else:
                return node

    def parse_primary(self):
        tok = self.next()
        if tok.kind == "uint":
            num = int(tok.text)
            nxt = self.peek()
            if nxt.kind == "sym" and nxt.text == "/":
                self.next()
                den = self.expect("uint")
                if int(den.text) == 0:
                    raise ParseError("zero denominator", den.line, den.col)
                return Num(Fraction(num, int(den.text)))
            return Num(num)
        if tok.kind == "name":
            if tok.text == "i":
                return ImagUnit()
            if tok.text == "hbar":
                return HbarSym()
            if tok.text in ("M", "Minv", "D"):
                return AtomSym(tok.text, tok.line, tok.col)
            if tok.text == "comm":
                self.expect("sym", "(")
                lhs = self.parse_expr()
                self.expect("sym", ",")
                rhs = self.parse_expr()
                self.expect("sym", ")")
                return Comm(lhs, rhs)
        if tok.kind in ("atom", "jatom"):
            idx = tok.text.split("_")[1]
            if any(c not in "0123" for c in idx):
                raise ParseError(f"index out of range in {tok.text!r}",
                                 tok.line, tok.col)
            if tok.kind == "jatom" and idx[0] == idx[1]:
                raise ParseError(f"{tok.text!r} has equal indices",
                                 tok.line, tok.col)
            return AtomSym(tok.text, tok.line, tok.col)
        if tok.kind == "yatom":
            return YSym(tok.text[2:])
        if tok.kind == "sym" and tok.text == "(":
            node = self.parse_expr()
            self.expect("sym", ")")
            return node
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)


def parse(text):
    """Parse source text into an Ast; raises ParseError with position."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return node


# -- elaboration --------------------------------------------------------------

def to_poly(ast, rw, images=None, y_table=None):
    """Evaluate an Ast to an exact polynomial over the given basis.

    ``images`` maps atom ids to composite polynomials for observables that
    are not atoms of this basis (positions and spin in basis A; dilatation,
    rotations and special-conformal generators in basis B).  ``y_table``
    maps the labels '-', '+', 0..3 to hexaspherical composites; it is
    required only when the expression mentions Y atoms.
    """
    def ev(node):
        if isinstance(node, Num):
            return NCPoly.number(mpq(node.value.numerator,
                                     node.value.denominator))
        if isinstance(node, ImagUnit):
            return NCPoly.number(0, 1)
        if isinstance(node, HbarSym):
            return NCPoly.number(1, 0, 1)
        if isinstance(node, AtomSym):
            aid, sign = canonical_atom(node.name)
            if images is not None and aid in images:
                p = images[aid]
            elif aid in rw.atoms:
                p = NCPoly.atom(aid)
            else:
                raise ConstructionError(
                    f"atom {node.name} not available in basis {rw.basis_tag}")
            return p if sign > 0 else -p
        if isinstance(node, YSym):
            if y_table is None:
                raise ConstructionError(
                    "Y observables need an elaboration context")
            label = node.label if node.label in "+-" else int(node.label)
            return y_table[label]
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, BinOp):
            a = ev(node.lhs)
            b = ev(node.rhs)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return sym_product(a, b)
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        if isinstance(node, Comm):
            return commutator(normalize(ev(node.lhs), rw),
                              normalize(ev(node.rhs), rw), rw)
        raise ConstructionError(f"unknown ast node {node!r}")
    return ev(ast)


# -- canonical printing --------------------------------------------------------

def _frac_str(q):
    n = q.numerator
    d = q.denominator
    return str(n) if d == 1 else f"{n}/{d}"


def print_canonical(p):
    """Deterministic text form; parse(print_canonical(p)) reproduces p.

    Terms appear in the canonical order (word length, word, hbar power);
    factors are joined with '*' so the output stays inside the grammar.
    """
    items = p.items()
    if not items:
        return "0"
    rendered = []
    for (word, h), (re_, im) in items:
        negate = False
        pieces = []
        if im == 0:
            mag = re_
            if mag < 0:
                negate = True
                mag = -mag
            if mag != 1 or (h == 0 and not word):
                pieces.append(_frac_str(mag))
        elif re_ == 0:
            mag = im
            if mag < 0:
                negate = True
                mag = -mag
            if mag != 1:
                pieces.append(_frac_str(mag))
            pieces.append("i")
        else:
            if im < 0:
                pieces.append(f"({_frac_str(re_)} - {_frac_str(-im)}*i)")
            else:
                pieces.append(f"({_frac_str(re_)} + {_frac_str(im)}*i)")
        if h == 1:
            pieces.append("hbar")
        elif h > 1:
            pieces.append(f"hbar^{h}")
        pieces.extend(atom_name(a) for a in word)
        body = "*".join(pieces) if pieces else "1"
        rendered.append((negate, body))
    first_neg, first_body = rendered[0]
    out = ("-" if first_neg else "") + first_body
    for negate, body in rendered[1:]:
        out += (" - " if negate else " + ") + body
    return out
