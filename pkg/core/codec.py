"""
Systematic (n, k) block codes, applied lane-wise across packets
---------------------------------------------------------------
A block holds n packets of L symbols each. The code is applied to every
symbol lane independently: lane l of the block is the length-n vector
(codeword[0][l], ..., codeword[n-1][l]), so corrupting one packet corrupts
one code position in every lane it touches.

Blocks are numpy arrays of shape (packets, L); row j is packet j.
"""

import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from core.algebra import (
    FieldMatrix,
    FieldSpec,
    field_make,
    mat_inverse,
    row_reduce,
    solve_homogeneous_restricted,
)
from core.errors import (
    CodecError,
    LengthExceedsField,
    LengthMismatch,
    MissingPackets,
    NoSolution,
    NotSystematic,
    TooLargeForExhaustive,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 1 << 20
ENUMERATION_CHUNK = 1 << 12
# per-code cache of support -> kernel codeword, only when the support count is small
SUPPORT_CACHE_LIMIT = 4096
HAMMING_M_RANGE = (2, 10)


class CodeKind(str, Enum):
    RS_MDS = "rs-mds"
    HAMMING = "hamming"
    FROM_PARITY_CHECK = "from-parity-check"


class Verdict(str, Enum):
    CLEAN = "clean"
    TAMPERED = "tampered"


class ForgeryMode(str, Enum):
    CODEWORD_SUBSTITUTION = "codeword-substitution"
    RAW_CORRUPTION = "raw-corruption"
    PACKET_ERROR = "packet-error"


# ============================================================================
# DATA CLASSES
# ============================================================================

@dataclass(frozen=True, eq=False)
class CodeSpec:
    n: int                          # block length in packets
    k: int                          # message length in packets
    field: FieldSpec
    kind: CodeKind
    G: FieldMatrix                  # k x n, systematic [I | P]
    H: FieldMatrix                  # (n-k) x n
    known_d_min: Optional[int] = None
    eval_points: Optional[Tuple[int, ...]] = None   # RS only

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise CodecError(f"need 1 <= k < n, got n={self.n}, k={self.k}")
        if self.G.shape != (self.k, self.n):
            raise CodecError(f"generator shape {self.G.shape} != ({self.k}, {self.n})")
        if self.H.shape != (self.n - self.k, self.n):
            raise CodecError(f"parity-check shape {self.H.shape} != ({self.n - self.k}, {self.n})")

    @property
    def label(self) -> str:
        name = {CodeKind.RS_MDS: "RS", CodeKind.HAMMING: "Hamming"}.get(self.kind, "Code")
        return f"{name}({self.n},{self.k})/GF({self.field.order})"

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def d_min(self) -> int:
        return min_distance(self)

    def parity_check_ok(self) -> bool:
        """G . H^T = 0 and the generator is in systematic form."""
        product = self.field.matmul(self.G.data, self.H.data.T)
        systematic = np.array_equal(self.G.data[:, :self.k], np.eye(self.k, dtype=np.int64))
        return not product.any() and systematic

    @cached_property
    def min_weight_supports(self) -> Tuple[Tuple[int, ...], ...]:
        """Supports of all minimum-weight codewords (not used for RS)."""
        if self.kind is CodeKind.HAMMING:
            return _hamming_weight3_supports(self)
        return _enumerate_min_weight_supports(self)

    @cached_property
    def _kernel_cache(self) -> Dict[Tuple[int, ...], np.ndarray]:
        return {}


@dataclass(frozen=True, eq=False)
class Packet:
    symbols: np.ndarray         # L symbols
    seq: int                    # global sequence index
    block_id: int = 0
    position: int = 0           # code position within its block


@dataclass(frozen=True, eq=False)
class Block:
    code: CodeSpec
    message: np.ndarray         # k x L
    codeword: np.ndarray        # n x L, row j is packet j
    block_id: int = 0

    @property
    def packet_len(self) -> int:
        return self.codeword.shape[1]

    def packets(self) -> List[Packet]:
        n = self.code.n
        return [Packet(self.codeword[j].copy(), self.block_id * n + j, self.block_id, j)
                for j in range(n)]


@dataclass(frozen=True, eq=False)
class TamperPlan:
    support: Tuple[int, ...]    # attacked packet positions
    delta: np.ndarray           # n x L, zero outside support
    block_id: int = 0
    mode: ForgeryMode = ForgeryMode.CODEWORD_SUBSTITUTION

    def __post_init__(self):
        if len(self.support) < 1:
            raise CodecError("a tamper plan needs at least one position")
        touched = np.flatnonzero(self.delta.any(axis=1))
        if tuple(int(j) for j in touched) != tuple(sorted(self.support)):
            raise CodecError(f"delta touches {touched.tolist()}, plan says {list(self.support)}")


# ============================================================================
# CONSTRUCTION
# ============================================================================

def _systematic_from_parity(field: FieldSpec, H: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rewrite a full-rank H as [A | I] and return (G = [I | -A^T], H')."""
    try:
        right_inv = mat_inverse(FieldMatrix(field, H[:, k:]))
    except NoSolution:
        raise NotSystematic("the last n-k columns of H are singular; no systematic generator") from None
    H_sys = field.matmul(right_inv.data, H)
    A = H_sys[:, :k]
    G = np.hstack([np.eye(k, dtype=np.int64), field.neg(A.T)])
    return G, H_sys


def _checked(code: CodeSpec) -> CodeSpec:
    if not code.parity_check_ok():
        raise CodecError(f"{code.label}: G . H^T != 0")
    logger.debug("constructed %s (kind %s)", code.label, code.kind.value)
    return code


def code_make_rs(n: int, k: int, field: FieldSpec) -> CodeSpec:
    """
    Systematic Reed-Solomon code with evaluation points 0, 1, ..., n-1 in
    field encoding order. Minimum distance n - k + 1; at least one parity
    packet is required.
    """
    if not 1 <= k < n:
        raise CodecError(f"need 1 <= k < n, got n={n}, k={k}")
    if n > field.order:
        raise LengthExceedsField(f"RS length {n} exceeds field order {field.order}")
    points = np.arange(n, dtype=np.int64)
    V = np.vstack([field.pow(points, i) for i in range(k)])
    G = field.matmul(mat_inverse(FieldMatrix(field, V[:, :k])).data, V)
    P = G[:, k:]
    H = np.hstack([field.neg(P.T), np.eye(n - k, dtype=np.int64)])
    return _checked(CodeSpec(n, k, field, CodeKind.RS_MDS, FieldMatrix(field, G), FieldMatrix(field, H),
                             known_d_min=n - k + 1, eval_points=tuple(int(p) for p in points)))


def hamming_columns(m: int) -> List[int]:
    """Nonzero m-bit columns: non-unit vectors ascending, then the unit vectors."""
    n = (1 << m) - 1
    return [v for v in range(1, n + 1) if v & (v - 1)] + [1 << i for i in range(m)]


def code_make_hamming(m: int) -> CodeSpec:
    lo, hi = HAMMING_M_RANGE
    if not lo <= m <= hi:
        raise CodecError(f"Hamming parameter m={m} outside [{lo}, {hi}]")
    field = field_make(2)
    n, k = (1 << m) - 1, (1 << m) - m - 1
    cols = hamming_columns(m)
    H = np.array([[(c >> i) & 1 for c in cols] for i in range(m)], dtype=np.int64)
    G = np.hstack([np.eye(k, dtype=np.int64), H[:, :k].T])
    return _checked(CodeSpec(n, k, field, CodeKind.HAMMING, FieldMatrix(field, G), FieldMatrix(field, H),
                             known_d_min=3))


def code_from_parity_check(H: Union[FieldMatrix, np.ndarray], field: Optional[FieldSpec] = None,
                           d_min: Optional[int] = None) -> CodeSpec:
    """Code defined by an arbitrary parity-check matrix; dependent rows are dropped."""
    if not isinstance(H, FieldMatrix):
        if field is None:
            raise CodecError("a raw parity-check array needs a field")
        H = FieldMatrix(field, H)
    field = H.field
    R, pivots = row_reduce(field, H.data)
    rank, n = len(pivots), H.cols
    k = n - rank
    if rank == 0 or k < 1:
        raise CodecError(f"parity check of rank {rank} on {n} positions gives no (n, k) code with 1 <= k < n")
    G, H_sys = _systematic_from_parity(field, R[:rank], k)
    return _checked(CodeSpec(n, k, field, CodeKind.FROM_PARITY_CHECK, FieldMatrix(field, G),
                             FieldMatrix(field, H_sys), known_d_min=d_min))


def smallest_binary_field_for(n: int, poly_overrides: Optional[Dict[int, int]] = None) -> FieldSpec:
    """GF(2^w) with the smallest w such that an RS code of length n fits."""
    width = max(1, math.ceil(math.log2(n)))
    poly = (poly_overrides or {}).get(width)
    return field_make((2, width), poly)


# ============================================================================
# ENCODE / DETECT
# ============================================================================

def _as_symbols(code: CodeSpec, packets, expected: int) -> np.ndarray:
    if isinstance(packets, np.ndarray):
        arr = packets
    else:
        rows = [p.symbols if isinstance(p, Packet) else np.asarray(p) for p in packets]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise LengthMismatch(f"packets have unequal lengths {sorted(lengths)}")
        arr = np.array(rows)
    arr = np.asarray(arr, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != expected:
        raise LengthMismatch(f"expected {expected} packets, got array of shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= code.field.order):
        raise CodecError(f"symbols outside GF({code.field.order})")
    return arr


def encode(code: CodeSpec, message) -> np.ndarray:
    """k packets (k x L) -> n packets (n x L); the first k are the message."""
    msg = _as_symbols(code, message, code.k)
    return code.field.matmul(code.G.data.T, msg)


def make_block(code: CodeSpec, message, block_id: int = 0) -> Block:
    msg = _as_symbols(code, message, code.k)
    return Block(code, msg, encode(code, msg), block_id)


def syndrome(code: CodeSpec, received) -> np.ndarray:
    r = _as_symbols(code, received, code.n)
    return code.field.matmul(code.H.data, r)


def detect(code: CodeSpec, received) -> Verdict:
    return Verdict.TAMPERED if syndrome(code, received).any() else Verdict.CLEAN


# ============================================================================
# CODEWORD ENUMERATION AND MINIMUM DISTANCE
# ============================================================================

def iter_codewords(code: CodeSpec, chunk: int = ENUMERATION_CHUNK) -> Iterator[np.ndarray]:
    """All fq^k codewords, in chunks of rows, message index order."""
    fq, k = code.field.order, code.k
    total = fq ** k
    if total > EXHAUSTIVE_LIMIT:
        raise TooLargeForExhaustive(f"{code.label}: {fq}^{k} codewords exceed the limit of 2^20")
    powers = fq ** np.arange(k, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        messages = (idx[:, None] // powers[None, :]) % fq
        yield code.field.matmul(messages, code.G.data)


def weight_distribution(code: CodeSpec) -> np.ndarray:
    """counts[w] = number of codewords of Hamming weight w."""
    counts = np.zeros(code.n + 1, dtype=np.int64)
    for words in iter_codewords(code):
        counts += np.bincount(np.count_nonzero(words, axis=1), minlength=code.n + 1)
    return counts


def min_distance(code: CodeSpec, exhaustive: Optional[bool] = None) -> int:
    """
    Minimum nonzero codeword weight. Uses the known value for RS and Hamming
    codes unless exhaustive=True; codes without a known value are enumerated.
    """
    if exhaustive is None:
        exhaustive = code.known_d_min is None
    if not exhaustive:
        return code.known_d_min
    weights = weight_distribution(code)
    nonzero = np.flatnonzero(weights[1:])
    if nonzero.size == 0:
        raise CodecError(f"{code.label} has no nonzero codeword")
    return int(nonzero[0]) + 1


def _hamming_weight3_supports(code: CodeSpec) -> Tuple[Tuple[int, ...], ...]:
    H = code.H.data
    cols = [int(sum(int(H[i, j]) << i for i in range(H.shape[0]))) for j in range(code.n)]
    index = {c: j for j, c in enumerate(cols)}
    supports = []
    for i in range(code.n):
        for j in range(i + 1, code.n):
            l = index[cols[i] ^ cols[j]]
            if l > j:
                supports.append((i, j, l))
    return tuple(supports)


def _enumerate_min_weight_supports(code: CodeSpec) -> Tuple[Tuple[int, ...], ...]:
    d = code.d_min
    found = set()
    for words in iter_codewords(code):
        for row in words[np.count_nonzero(words, axis=1) == d]:
            found.add(tuple(int(j) for j in np.flatnonzero(row)))
    return tuple(sorted(found))


# ============================================================================
# ATTACKER FORGERIES
# ============================================================================

def _rs_vanishing_codeword(code: CodeSpec, support: Tuple[int, ...]) -> np.ndarray:
    """
    Evaluations of prod_{t not in support} (x - x_t): degree k - 1, so a
    codeword, zero exactly off the support when |support| = n - k + 1.
    """
    field = code.field
    x = np.array(code.eval_points, dtype=np.int64)
    off = np.setdiff1d(np.arange(code.n), support)
    v = field.prod(field.sub(x[:, None], x[off][None, :]), axis=1)
    if np.any(field.matmul(code.H.data, v)):
        raise CodecError(f"{code.label}: vanishing polynomial on {support} is not a codeword")
    return v


def _support_codeword(code: CodeSpec, support: Tuple[int, ...]) -> np.ndarray:
    cache = code._kernel_cache
    if support in cache:
        return cache[support]
    if code.kind is CodeKind.RS_MDS and code.eval_points is not None and len(support) == code.n - code.k + 1:
        v = _rs_vanishing_codeword(code, support)
    else:
        v = solve_homogeneous_restricted(code.H, support)
    if np.count_nonzero(v) != len(support):
        raise CodecError(f"{code.label}: kernel vector on {support} does not cover the support")
    if math.comb(code.n, len(support)) <= SUPPORT_CACHE_LIMIT or code.kind is not CodeKind.RS_MDS:
        cache[support] = v
    return v


def _draw_min_weight_support(code: CodeSpec, rng: np.random.Generator) -> Tuple[int, ...]:
    if code.kind is CodeKind.RS_MDS:
        return tuple(sorted(int(j) for j in rng.choice(code.n, code.d_min, replace=False)))
    supports = code.min_weight_supports
    return supports[int(rng.integers(len(supports)))]


def min_weight_forgery(code: CodeSpec, rng: np.random.Generator, packet_len: int = 1,
                       block_id: int = 0) -> TamperPlan:
    """
    The decoder-evading attack: a nonzero codeword of weight d_min on a
    uniformly drawn support, scaled by an independent nonzero scalar in
    every lane. Adding it to a codeword yields another codeword.
    """
    support = _draw_min_weight_support(code, rng)
    base = _support_codeword(code, support)
    scalars = rng.integers(1, code.field.order, packet_len, dtype=np.int64)
    delta = code.field.mul(base[:, None], scalars[None, :])
    logger.debug("%s forgery on %s", code.label, support)
    return TamperPlan(support, delta, block_id, ForgeryMode.CODEWORD_SUBSTITUTION)


def raw_corruption(code: CodeSpec, count: int, rng: np.random.Generator, packet_len: int = 1,
                   block_id: int = 0) -> TamperPlan:
    """Replace every symbol of `count` uniformly chosen packets with a different random symbol."""
    if not 1 <= count <= code.n:
        raise CodecError(f"corruption count {count} outside [1, {code.n}]")
    support = tuple(sorted(int(j) for j in rng.choice(code.n, count, replace=False)))
    delta = np.zeros((code.n, packet_len), dtype=np.int64)
    delta[list(support)] = rng.integers(1, code.field.order, (count, packet_len), dtype=np.int64)
    return TamperPlan(support, delta, block_id, ForgeryMode.RAW_CORRUPTION)


def apply_tamper(code: CodeSpec, codeword: np.ndarray, plan: TamperPlan) -> np.ndarray:
    if plan.delta.shape != codeword.shape:
        raise LengthMismatch(f"tamper delta {plan.delta.shape} vs block {codeword.shape}")
    return code.field.add(codeword, plan.delta)


# ============================================================================
# SCRAMBLING
# ============================================================================

def scramble(blocks: Sequence[Block], rng: np.random.Generator) -> List[Packet]:
    """Uniformly random interleaving of every packet of every block."""
    if not blocks:
        raise CodecError("nothing to scramble")
    packets = [p for b in blocks for p in b.packets()]
    return [packets[i] for i in rng.permutation(len(packets))]


def unscramble(stream: Sequence[Packet], code: CodeSpec, first_block: int = 0) -> List[Block]:
    """
    Reassemble blocks (ordered by block id) from an interleaved stream.
    Block ids must run without gaps from first_block to the largest id seen.
    """
    grouped: Dict[int, Dict[int, Packet]] = {}
    for packet in stream:
        if packet.block_id < first_block:
            raise CodecError(f"packet of block {packet.block_id} precedes first block {first_block}")
        slots = grouped.setdefault(packet.block_id, {})
        if packet.position in slots:
            raise CodecError(f"duplicate packet {packet.position} of block {packet.block_id}")
        slots[packet.position] = packet
    absent = [b for b in range(first_block, max(grouped, default=first_block - 1) + 1) if b not in grouped]
    if absent:
        raise MissingPackets(f"blocks {absent} have no packets in the stream")
    blocks = []
    for block_id in sorted(grouped):
        slots = grouped[block_id]
        missing = [j for j in range(code.n) if j not in slots]
        if missing:
            raise MissingPackets(f"block {block_id} is missing positions {missing}")
        codeword = np.vstack([slots[j].symbols for j in range(code.n)])
        blocks.append(Block(code, codeword[:code.k].copy(), codeword, block_id))
    return blocks


# ============================================================================
# CODEWORD DUMP
# ============================================================================

def write_codeword_csv(block: Block, out: TextIO) -> None:
    """One row per lane: lane, then the symbol at each code position."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["lane"] + [f"p{j}" for j in range(block.code.n)])
    for lane in range(block.packet_len):
        writer.writerow([lane] + [int(s) for s in block.codeword[:, lane]])


def read_codeword_csv(code: CodeSpec, rows: Sequence[Sequence[str]], block_id: int = 0) -> Block:
    header, *body = rows
    if len(header) != code.n + 1:
        raise LengthMismatch(f"dump has {len(header) - 1} positions, code has {code.n}")
    lanes = np.array([[int(s) for s in row[1:]] for row in body], dtype=np.int64)
    codeword = lanes.T
    return Block(code, codeword[:code.k].copy(), codeword, block_id)
