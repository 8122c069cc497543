"""LSSS access structures and the polynomial coefficients used by signing.

Policies are monotone boolean formulas over attribute labels::

    formula := term ("OR" term)*
    term    := factor ("AND" factor)*
    factor  := IDENT | "(" formula ")"

AND binds tighter than OR.  Keywords are case-insensitive.  Conversion to a
share-generating matrix uses the usual inductive construction: an OR gate
hands its vector to both children, an AND gate hands ``v || 1`` to the left
child and ``(0, ..., 0, -1)`` to the right one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .errors import CapacityError, PolicyError, SerializationError
from .pairing_algebra import (
    Q,
    SCALAR_BYTES,
    THETA,
    decode_fields,
    encode_fields,
    hash_to_attribute,
    inverse_mod,
    scalar_from_bytes,
    scalar_to_bytes,
)


# -- formulas -------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    label: str


@dataclass(frozen=True)
class Gate:
    op: str  # "and" | "or"
    children: tuple


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([A-Za-z_][A-Za-z0-9_.:\-]*))")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolicyError(f"unexpected character {text[pos:].lstrip()[:1]!r} at {pos}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()
    return tokens


def parse_policy(text: str):
    """Parse a policy formula into a tree of :class:`Leaf` / :class:`Gate`."""
    tokens = _tokenize(text)
    if not tokens:
        raise PolicyError("empty policy")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def keyword(tok):
        return tok.upper() if tok and tok.upper() in ("AND", "OR", "NOT") else None

    def formula():
        nonlocal pos
        terms = [term()]
        while keyword(peek()) == "OR":
            pos += 1
            terms.append(term())
        return terms[0] if len(terms) == 1 else Gate("or", tuple(terms))

    def term():
        nonlocal pos
        factors = [factor()]
        while keyword(peek()) == "AND":
            pos += 1
            factors.append(factor())
        return factors[0] if len(factors) == 1 else Gate("and", tuple(factors))

    def factor():
        nonlocal pos
        tok = peek()
        if tok is None:
            raise PolicyError("policy ends unexpectedly")
        kw = keyword(tok)
        if kw == "NOT":
            raise PolicyError("NOT gates are not allowed in monotone policies")
        if kw is not None:
            raise PolicyError(f"expected attribute, got {tok!r}")
        if tok == ")":
            raise PolicyError("unbalanced ')'")
        pos += 1
        if tok == "(":
            node = formula()
            if peek() != ")":
                raise PolicyError("missing ')'")
            pos += 1
            return node
        return Leaf(tok)

    tree = formula()
    if pos != len(tokens):
        raise PolicyError(f"unexpected token {tokens[pos]!r}")
    return tree


def evaluate_policy(tree, labels: Iterable[str]) -> bool:
    """Plain boolean evaluation of a parsed formula."""
    have = set(labels)

    def ev(node):
        if isinstance(node, Leaf):
            return node.label in have
        results = [ev(c) for c in node.children]
        return all(results) if node.op == "and" else any(results)

    return ev(tree)


def policy_labels(tree) -> set[str]:
    if isinstance(tree, Leaf):
        return {tree.label}
    return set().union(*(policy_labels(c) for c in tree.children))


# -- access structures ----------------------------------------------------------

@dataclass(frozen=True)
class AccessStructure:
    """Share-generating matrix (rows of ints mod Q) with row labels ``rho``."""

    matrix: tuple[tuple[int, ...], ...]
    rho: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.matrix or not self.matrix[0]:
            raise PolicyError("access structure needs at least one row and column")
        width = len(self.matrix[0])
        if any(len(row) != width for row in self.matrix):
            raise PolicyError("ragged matrix")
        if len(self.rho) != len(self.matrix):
            raise PolicyError("rho must label every row")
        for a in self.rho:
            if a % Q == 0 or a % Q == THETA:
                raise PolicyError("row attribute may not be 0 or the default attribute")

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0])

    def to_bytes(self) -> bytes:
        rows = [encode_fields(*(scalar_to_bytes(x) for x in row)) for row in self.matrix]
        return encode_fields(encode_fields(*rows),
                             encode_fields(*(scalar_to_bytes(a) for a in self.rho)),
                             encode_fields(*(s.encode() for s in self.labels)))

    @classmethod
    def from_bytes(cls, data: bytes) -> AccessStructure:
        rows_b, rho_b, labels_b = decode_fields(data)
        matrix = tuple(tuple(scalar_from_bytes(x) for x in decode_fields(r))
                       for r in decode_fields(rows_b))
        rho = tuple(scalar_from_bytes(x) for x in decode_fields(rho_b))
        labels = tuple(x.decode() for x in decode_fields(labels_b))
        return cls(matrix, rho, labels)


def policy_to_lsss(formula: str | Leaf | Gate) -> AccessStructure:
    """Convert a monotone AND/OR formula into an LSSS access structure."""
    tree = parse_policy(formula) if isinstance(formula, str) else formula
    rows: list[tuple[list[int], str]] = []
    counter = 1

    def walk(node, vec: list[int]):
        nonlocal counter
        if isinstance(node, Leaf):
            rows.append((vec, node.label))
            return
        if node.op == "or":
            for child in node.children:
                walk(child, vec)
            return
        # n-ary AND as a chain of binary ANDs; vectors are fixed before
        # descending so rows come out in formula order
        left_vec = vec
        vectors = []
        for _ in node.children[1:]:
            pad = left_vec + [0] * (counter - len(left_vec))
            vectors.append([0] * counter + [-1])
            counter += 1
            left_vec = pad + [1]
        vectors.append(left_vec)
        vectors.reverse()
        for child, v in zip(node.children, vectors):
            walk(child, v)

    walk(tree, [1])
    matrix = tuple(tuple(x % Q for x in vec + [0] * (counter - len(vec))) for vec, _ in rows)
    labels = tuple(label for _, label in rows)
    return AccessStructure(matrix, tuple(hash_to_attribute(l) for l in labels), labels)


# -- attribute sets -------------------------------------------------------------

@dataclass(frozen=True)
class AttributeSet:
    """Sorted, duplicate-free attribute scalars (canonical for hashing)."""

    attrs: tuple[int, ...] = field(default=())

    def __post_init__(self):
        canon = tuple(sorted({a % Q for a in self.attrs}))
        if THETA in canon or 0 in canon:
            raise PolicyError("attributes must be nonzero and differ from the default attribute")
        object.__setattr__(self, "attrs", canon)

    @classmethod
    def from_labels(cls, labels: Iterable[str], capacity: int | None = None) -> AttributeSet:
        w = cls(tuple(hash_to_attribute(l) for l in labels))
        if capacity is not None:
            w.check_capacity(capacity)
        return w

    def check_capacity(self, n: int) -> None:
        if len(self.attrs) + 2 > n:
            raise CapacityError(f"|W| = {len(self.attrs)} exceeds n - 2 = {n - 2}")

    def __len__(self) -> int:
        return len(self.attrs)

    def __iter__(self):
        return iter(self.attrs)

    def __contains__(self, a) -> bool:
        return a % Q in self.attrs

    def to_bytes(self) -> bytes:
        return b"".join(scalar_to_bytes(a) for a in self.attrs)

    @classmethod
    def from_bytes(cls, data: bytes) -> AttributeSet:
        if len(data) % SCALAR_BYTES:
            raise SerializationError("attribute set length is not a multiple of the scalar width")
        attrs = [scalar_from_bytes(data[i:i + SCALAR_BYTES]) for i in range(0, len(data), SCALAR_BYTES)]
        w = cls(tuple(attrs))
        if list(w.attrs) != attrs:
            raise SerializationError("attribute set encoding is not canonical")
        return w


# -- linear algebra mod Q ---------------------------------------------------------

def _solve_mod_q(a: list[list[int]], b: list[int]) -> list[int] | None:
    """Find x with a @ x == b over Z_q, or None.  Free variables set to 0."""
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    aug = [[x % Q for x in row] + [b[i] % Q] for i, row in enumerate(a)]
    pivots = []
    r = 0
    for c in range(n_cols):
        pr = next((i for i in range(r, n_rows) if aug[i][c]), None)
        if pr is None:
            continue
        aug[r], aug[pr] = aug[pr], aug[r]
        inv = inverse_mod(aug[r][c])
        aug[r] = [x * inv % Q for x in aug[r]]
        for i in range(n_rows):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(x - f * y) % Q for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    if any(all(x == 0 for x in row[:-1]) and row[-1] for row in aug):
        return None
    x = [0] * n_cols
    for i, c in enumerate(pivots):
        x[c] = aug[i][-1]
    return x


def reconstruction_coefficients(A: AccessStructure, W: AttributeSet) -> dict[int, int] | None:
    """Row weights w_i (0-based rows, rho(i) in W) with sum w_i M_i = (1, 0, ..., 0).

    Returns ``None`` when W does not satisfy the structure.
    """
    rows = [i for i in range(A.rows) if A.rho[i] in W]
    if not rows:
        return None
    # unknowns are the w_i; one equation per matrix column
    system = [[A.matrix[i][j] for i in rows] for j in range(A.cols)]
    target = [1] + [0] * (A.cols - 1)
    sol = _solve_mod_q(system, target)
    if sol is None:
        return None
    return {i: w for i, w in zip(rows, sol) if w}


def vanishing_coefficients(W: AttributeSet, theta: int, n: int) -> tuple[int, ...]:
    """Coefficients c_1..c_n (index 0 is the constant term) of prod_{w in W+theta} (X - w).

    The monic polynomial has degree |W| + 1; the vector is zero-padded to n.
    """
    W.check_capacity(n)
    coeffs = [1]
    for root in (*W.attrs, theta % Q):
        # multiply by (X - root)
        nxt = [0] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k + 1] = (nxt[k + 1] + c) % Q
            nxt[k] = (nxt[k] - root * c) % Q
        coeffs = nxt
    return tuple(coeffs) + (0,) * (n - len(coeffs))
