"""
Finite-field arithmetic and linear algebra
------------------------------------------
Prime fields GF(p) and binary extension fields GF(2^w) up to order 2^16,
with table-driven arithmetic on numpy int64 arrays, plus the row-reduction
family (rank, null space, restricted kernels) used by the checker analysis
and the block codes.

The field order is called fq everywhere so it never collides with the
watchdog's observation probability.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import (
    DimensionMismatch,
    FieldError,
    FieldMismatch,
    NoSolution,
    NotPrimePower,
    ReduciblePolynomial,
    UnsupportedField,
    ZeroInverse,
)
from core.rng import make_rng
from defaults.polynomials import default_polynomial, describe_polynomial

logger = logging.getLogger(__name__)

MAX_ORDER = 1 << 16
MAX_WIDTH = 16
# full product tables above this order would not fit comfortably in memory
MUL_TABLE_MAX_ORDER = 256
AXIOM_SAMPLE_SIZE = 64
# largest rows * inner * cols product evaluated through one table gather
MATMUL_GATHER_LIMIT = 1 << 21

OrderSpec = Union[int, Tuple[int, int]]
ArrayLike = Union[int, np.integer, np.ndarray, Sequence[int]]


# ============================================================================
# INTEGER AND GF(2)[x] HELPERS
# ============================================================================

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _prime_factors(n: int) -> List[int]:
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


def _is_prime_power(n: int) -> bool:
    factors = _prime_factors(n) if n > 1 else []
    return len(factors) == 1


def _gf2_poly_mod(a: int, m: int) -> int:
    """Remainder of a(x) divided by m(x), both bit-packed over GF(2)."""
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _gf2_is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree <= w/2."""
    width = poly.bit_length() - 1
    if width < 1:
        return False
    for degree in range(1, width // 2 + 1):
        for divisor in range(1 << degree, 1 << (degree + 1)):
            if _gf2_poly_mod(poly, divisor) == 0:
                return False
    return True


def _gf2_mulmod(a: int, b: int, poly: int, width: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> width & 1:
            a ^= poly
    return r


# ============================================================================
# FIELD SPEC
# ============================================================================

class FieldSpec:
    """
    A finite field of order fq = characteristic ** width.

    Arithmetic works elementwise on ints or numpy arrays and returns int64
    arrays. Tables are built once at construction and made read-only, so a
    FieldSpec can be shared freely between workers.
    """

    def __init__(self, characteristic: int, width: int, poly: Optional[int] = None):
        self.characteristic = characteristic
        self.width = width
        self.poly = poly
        self.order = characteristic ** width
        self._build_tables()
        self._verify_axioms()
        logger.debug("built %r (generator %d)", self, self.generator)

    # --- identity ---

    @property
    def key(self) -> Tuple[int, int, Optional[int]]:
        return (self.characteristic, self.width, self.poly)

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldSpec) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        if self.characteristic == 2:
            return f"GF(2^{self.width}; {describe_polynomial(self.poly)})"
        return f"GF({self.order})"

    @property
    def is_binary(self) -> bool:
        return self.characteristic == 2

    # --- construction ---

    def _slow_mul(self, a: int, b: int) -> int:
        if self.is_binary:
            return _gf2_mulmod(a, b, self.poly, self.width)
        return a * b % self.order

    def _slow_pow(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self._slow_mul(result, a)
            a = self._slow_mul(a, a)
            e >>= 1
        return result

    def _find_generator(self) -> int:
        group = self.order - 1
        if group == 1:
            return 1
        factors = _prime_factors(group)
        for g in range(2, self.order):
            if all(self._slow_pow(g, group // r) != 1 for r in factors):
                return g
        raise ReduciblePolynomial(f"no generator found for {self!r}")

    def _build_tables(self) -> None:
        group = self.order - 1
        self.generator = self._find_generator()

        exp = np.empty(2 * group, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(group):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, self.generator)
        exp[group:] = exp[:group]

        inv = np.zeros(self.order, dtype=np.int64)
        nonzero = np.arange(1, self.order)
        inv[1:] = exp[(group - log[nonzero]) % group]

        mul_table = None
        if self.is_binary and self.order <= MUL_TABLE_MAX_ORDER:
            a, b = np.meshgrid(np.arange(self.order), np.arange(self.order), indexing="ij")
            mul_table = np.where((a == 0) | (b == 0), 0, exp[log[a] + log[b]])
            mul_table.setflags(write=False)

        for table in (exp, log, inv):
            table.setflags(write=False)
        self._exp, self._log, self._inv, self._mul_table = exp, log, inv, mul_table

    def _verify_axioms(self) -> None:
        rng = make_rng(0, "field-axioms", self.order)
        a, b, c = (rng.integers(0, self.order, AXIOM_SAMPLE_SIZE) for _ in range(3))
        if not _axioms_hold_on(self, a, b, c):
            raise FieldError(f"field axioms fail on the construction sample for {self!r}")
        nonzero = np.arange(1, self.order)
        if not np.all(self.mul(nonzero, self.inv(nonzero)) == 1):
            raise FieldError(f"a * a^-1 != 1 for some a in {self!r}")

    # --- elementwise arithmetic ---

    def add(self, a: ArrayLike, b: ArrayLike) -> np.ndarray:
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.is_binary:
            return a ^ b
        return (a + b) % self.order

    def sub(self, a: ArrayLike, b: ArrayLike) -> np.ndarray:
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.is_binary:
            return a ^ b
        return (a - b) % self.order

    def neg(self, a: ArrayLike) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.is_binary:
            return a.copy()
        return (-a) % self.order

    def mul(self, a: ArrayLike, b: ArrayLike) -> np.ndarray:
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if not self.is_binary:
            return a * b % self.order
        if self._mul_table is not None:
            return self._mul_table[a, b]
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a: ArrayLike) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroInverse(f"0 has no inverse in {self!r}")
        return self._inv[a]

    def div(self, a: ArrayLike, b: ArrayLike) -> np.ndarray:
        return self.mul(a, self.inv(b))

    def pow(self, a: ArrayLike, e: int) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if e < 0:
            a, e = self.inv(a), -e
        if e == 0:
            return np.ones_like(a)
        out = self._exp[(self._log[a] * e) % (self.order - 1)]
        return np.where(a == 0, 0, out)

    def prod(self, a: ArrayLike, axis: int = -1) -> np.ndarray:
        """Product of the elements along an axis (1 for an empty axis)."""
        a = np.asarray(a, dtype=np.int64)
        logs = self._log[a].sum(axis=axis) % (self.order - 1)
        return np.where((a == 0).any(axis=axis), 0, self._exp[logs])

    def matmul(self, a: ArrayLike, b: ArrayLike) -> np.ndarray:
        """Matrix product over the field; b may be a vector."""
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if a.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        vector = b.ndim == 1
        if vector:
            b = b[:, None]
        if not self.is_binary:
            out = (a @ b) % self.order
        elif self.order == 2:
            out = (a @ b) & 1
        elif self._mul_table is not None and a.shape[0] * a.shape[1] * b.shape[1] <= MATMUL_GATHER_LIMIT:
            out = np.bitwise_xor.reduce(self._mul_table[a[:, :, None], b[None, :, :]], axis=1)
        else:
            out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
            for i in range(a.shape[1]):
                out ^= self.mul(a[:, i:i + 1], b[i:i + 1, :])
        return out[:, 0] if vector else out

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, int(value))

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)


def _axioms_hold_on(field: FieldSpec, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> bool:
    add, mul = field.add, field.mul
    return bool(
        np.all(add(add(a, b), c) == add(a, add(b, c)))
        and np.all(mul(mul(a, b), c) == mul(a, mul(b, c)))
        and np.all(mul(a, add(b, c)) == add(mul(a, b), mul(a, c)))
        and np.all(add(a, b) == add(b, a))
        and np.all(mul(a, b) == mul(b, a))
        and np.all(add(a, field.neg(a)) == 0)
    )


def field_axioms_hold(field: FieldSpec, exhaustive: bool = True) -> bool:
    """
    Check associativity, commutativity and distributivity on every triple
    (exhaustive) or on a fixed sample, plus a * a^-1 = 1 for every a != 0.
    """
    if exhaustive:
        a, b, c = (x.ravel() for x in np.meshgrid(*(field.elements(),) * 3, indexing="ij"))
    else:
        rng = make_rng(1, "field-axioms-sample", field.order)
        a, b, c = (rng.integers(0, field.order, 4096) for _ in range(3))
    nonzero = field.elements()[1:]
    return _axioms_hold_on(field, a, b, c) and bool(np.all(field.mul(nonzero, field.inv(nonzero)) == 1))


@lru_cache(maxsize=None)
def field_make(order_spec: OrderSpec, poly: Optional[int] = None) -> FieldSpec:
    """
    Build (or fetch the cached) field for an order spec.

    order_spec is a prime p <= 2^16, a power of two, or a (characteristic,
    width) pair such as (2, 8). Binary fields use the documented default
    reduction polynomial for their width unless poly overrides it.
    """
    if isinstance(order_spec, tuple):
        characteristic, width = (int(v) for v in order_spec)
        if not _is_prime(characteristic):
            raise NotPrimePower(f"characteristic {characteristic} is not prime")
    else:
        order = int(order_spec)
        if order >= 2 and order & (order - 1) == 0:
            characteristic, width = 2, order.bit_length() - 1
        elif _is_prime(order):
            characteristic, width = order, 1
        elif _is_prime_power(order):
            raise UnsupportedField(f"order {order}: extension fields are only supported in characteristic 2")
        else:
            raise NotPrimePower(f"order {order} is not a prime power")

    if characteristic != 2:
        if width != 1:
            raise UnsupportedField(f"GF({characteristic}^{width}): only prime fields for odd characteristic")
        if characteristic > MAX_ORDER:
            raise UnsupportedField(f"order {characteristic} exceeds 2^16")
        if poly is not None:
            raise FieldError("prime fields take no reduction polynomial")
        return FieldSpec(characteristic, 1)

    if not 1 <= width <= MAX_WIDTH:
        raise UnsupportedField(f"GF(2^{width}): width must be in [1, {MAX_WIDTH}]")
    poly = default_polynomial(width) if poly is None else int(poly)
    if poly.bit_length() - 1 != width:
        raise FieldError(f"reduction polynomial {describe_polynomial(poly)} does not have degree {width}")
    if not _gf2_is_irreducible(poly):
        raise ReduciblePolynomial(f"{describe_polynomial(poly)} is reducible over GF(2)")
    return FieldSpec(2, width, poly)


# ============================================================================
# ELEMENTS AND MATRICES
# ============================================================================

@dataclass(frozen=True)
class FieldElement:
    field: FieldSpec
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.field.order:
            raise FieldError(f"{self.value} is not an element of {self.field!r}")

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"cannot mix {self.field!r} and {other.field!r}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return FieldElement(self.field, int(other)).value
        return NotImplemented

    def _wrap(self, value) -> "FieldElement":
        return FieldElement(self.field, int(value))

    def __add__(self, other):
        return self._wrap(self.field.add(self.value, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.field.sub(self.value, self._other(other)))

    def __mul__(self, other):
        return self._wrap(self.field.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.field.div(self.value, self._other(other)))

    def __neg__(self):
        return self._wrap(self.field.neg(self.value))

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.value, int(e)))

    def inverse(self) -> "FieldElement":
        return self._wrap(self.field.inv(self.value))

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.value}@{self.field!r}"


def _same_field(a: FieldElement, b: FieldElement) -> FieldSpec:
    if a.field != b.field:
        raise FieldMismatch(f"cannot mix {a.field!r} and {b.field!r}")
    return a.field


def f_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return FieldElement(_same_field(a, b), int(a.field.add(a.value, b.value)))


def f_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    return FieldElement(_same_field(a, b), int(a.field.sub(a.value, b.value)))


def f_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return FieldElement(_same_field(a, b), int(a.field.mul(a.value, b.value)))


def f_inv(a: FieldElement) -> FieldElement:
    return FieldElement(a.field, int(a.field.inv(a.value)))


def f_pow(a: FieldElement, e: int) -> FieldElement:
    return FieldElement(a.field, int(a.field.pow(a.value, e)))


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """An immutable m x n matrix over one field."""
    field: FieldSpec
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise DimensionMismatch(f"matrix data must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.field.order):
            raise FieldError(f"matrix entries outside {self.field!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> "FieldMatrix":
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.field, self.data.T)

    def __matmul__(self, other):
        if isinstance(other, FieldMatrix):
            if other.field != self.field:
                raise FieldMismatch(f"cannot mix {self.field!r} and {other.field!r}")
            return FieldMatrix(self.field, self.field.matmul(self.data, other.data))
        return self.field.matmul(self.data, np.asarray(other, dtype=np.int64))

    def __eq__(self, other) -> bool:
        return (isinstance(other, FieldMatrix) and other.field == self.field
                and np.array_equal(other.data, self.data))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.rows}x{self.cols} over {self.field!r})"

    def is_zero(self) -> bool:
        return not np.any(self.data)


# ============================================================================
# ROW REDUCTION
# ============================================================================

def row_reduce(field: FieldSpec, data: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form over the field.

    Pivoting is deterministic: columns left to right, first nonzero row at
    or below the current pivot row. Returns (rref, pivot_columns).
    """
    R = np.array(data, dtype=np.int64)
    rows, cols = R.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        candidates = np.flatnonzero(R[r:, c])
        if candidates.size == 0:
            continue
        p = r + int(candidates[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = field.mul(R[r], field.inv(R[r, c]))
        factors = R[:, c].copy()
        factors[r] = 0
        if factors.any():
            R = field.sub(R, field.mul(factors[:, None], R[r][None, :]))
        pivots.append(c)
        r += 1
    return R, pivots


def mat_rank(M: FieldMatrix) -> int:
    if M.data.size == 0:
        return 0
    return len(row_reduce(M.field, M.data)[1])


def null_space(M: FieldMatrix) -> List[np.ndarray]:
    """
    Basis of {e : M e = 0}, one vector per free column of the RREF.
    Every returned vector is checked against M before it is handed out.
    """
    field = M.field
    n = M.cols
    if M.rows == 0:
        return [np.eye(n, dtype=np.int64)[j] for j in range(n)]
    R, pivots = row_reduce(field, M.data)
    pivot_set = set(pivots)
    free = [j for j in range(n) if j not in pivot_set]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.int64)
        v[f] = 1
        for i, p in enumerate(pivots):
            v[p] = field.neg(R[i, f])
        if np.any(field.matmul(M.data, v)):
            raise AssertionError(f"null-space vector {v} fails M v = 0")
        basis.append(v)
    return basis


def mat_inverse(M: FieldMatrix) -> FieldMatrix:
    if M.rows != M.cols:
        raise DimensionMismatch(f"cannot invert a {M.rows}x{M.cols} matrix")
    n = M.rows
    augmented = np.hstack([M.data, np.eye(n, dtype=np.int64)])
    R, pivots = row_reduce(M.field, augmented)
    if pivots[:n] != list(range(n)):
        raise NoSolution("matrix is singular")
    return FieldMatrix(M.field, R[:, n:])


def combine(field: FieldSpec, basis: Sequence[np.ndarray], coeffs: Iterable[int]) -> np.ndarray:
    """Linear combination sum_i coeffs[i] * basis[i]."""
    out = np.zeros_like(basis[0])
    for c, v in zip(coeffs, basis):
        out = field.add(out, field.mul(c, v))
    return out


def solve_homogeneous_restricted(
    H: FieldMatrix,
    support: Iterable[int],
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Nonzero v with H v = 0 and v zero outside support.

    Without an rng the first kernel basis vector is returned (deterministic);
    with one, a uniformly random nonzero kernel element.
    """
    field = H.field
    support = sorted(set(int(s) for s in support))
    if any(s < 0 or s >= H.cols for s in support):
        raise DimensionMismatch(f"support {support} outside [0, {H.cols})")
    if not support:
        raise NoSolution("empty support")
    basis = null_space(FieldMatrix(field, H.data[:, support]))
    if not basis:
        raise NoSolution(f"restricted kernel on {support} is trivial")
    if rng is None:
        restricted = basis[0]
    else:
        restricted = np.zeros(len(support), dtype=np.int64)
        while not restricted.any():
            restricted = combine(field, basis, rng.integers(0, field.order, len(basis)))
    v = np.zeros(H.cols, dtype=np.int64)
    v[support] = restricted
    if np.any(field.matmul(H.data, v)):
        raise AssertionError("restricted solution fails H v = 0")
    return v


# ============================================================================
# RANDOM VECTORS
# ============================================================================

def random_vector(field: FieldSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("vector length must be >= 1")
    return rng.integers(0, field.order, n, dtype=np.int64)


def random_nonzero_vector(field: FieldSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform over the fq^n - 1 nonzero vectors (rejection sampling)."""
    while True:
        v = random_vector(field, n, rng)
        if v.any():
            return v
