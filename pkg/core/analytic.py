"""
Closed-form throughput and miss-detection formulas
--------------------------------------------------
Everything here is a pure function of its arguments. Parameter names:

    L_sym    symbols per packet
    m_check  checking symbols the watchdog sends per packet
    n, k     block and message length of the (n, k) code, in packets
    p_obs    probability the watchdog overhears both copies of a packet
    alpha    slotted-ALOHA access probability
    beta     target exponent: the miss probability should stay below n^-beta
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from core.errors import AnalyticError, NoCodeAvailable

logger = logging.getLogger(__name__)

# pair observation: S2 and B silent on the source hop (A already is), then
# S1, S2 and B silent on the relay hop
ALOHA_OBS_EXPONENT = 5


@dataclass(frozen=True)
class SchemeParams:
    n: int
    k: int
    beta: float = 1.0
    p_obs: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise AnalyticError(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if self.beta <= 0:
            raise AnalyticError(f"beta must be positive, got {self.beta}")
        _check_unit("p_obs", self.p_obs)
        _check_unit("alpha", self.alpha)


@dataclass(frozen=True)
class CheckerParams:
    L_sym: int
    m_check: int = 0
    fq: int = 2
    theta: float = 0.5

    def __post_init__(self):
        if self.L_sym < 1 or self.m_check < 0:
            raise AnalyticError(f"need L_sym >= 1 and m_check >= 0, got {self.L_sym}, {self.m_check}")
        if not 0 < self.theta < 1:
            raise AnalyticError(f"theta must lie in (0, 1), got {self.theta}")


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise AnalyticError(f"{name} must lie in [0, 1], got {value}")


# ============================================================================
# SINGLE RELAY, PER-PACKET CHECKING
# ============================================================================

def throughput_linear_watchdog(L_sym: int, m_check: int) -> float:
    """Symbols per unit time under the centralized S->A, A->D, W->D schedule."""
    if L_sym < 1 or m_check < 0:
        raise AnalyticError(f"need L_sym >= 1 and m_check >= 0, got {L_sym}, {m_check}")
    return L_sym / (2 * L_sym + m_check)


def linear_miss_bounds(fq: int, L_sym: int, m_check: int) -> Tuple[float, float]:
    """
    (lower, upper) bounds on the miss probability of a linear checker with
    m_check rows facing a uniformly random nonzero error. The lower bound is
    reached when the check matrix has full rank.
    """
    if not 0 <= m_check <= L_sym:
        raise AnalyticError(f"need 0 <= m_check <= L_sym, got m_check={m_check}, L_sym={L_sym}")
    lower = (fq ** (L_sym - m_check) - 1) / (fq ** L_sym - 1)
    return lower, 1.0


def miss_rate_for_nullity(fq: int, L_sym: int, nullity: int) -> float:
    """Exact random-error miss rate for a checker whose kernel has the given dimension."""
    return (fq ** nullity - 1) / (fq ** L_sym - 1)


def min_check_symbols(theta: float) -> int:
    """Checking symbols needed to push the linear miss rate below theta (base 2)."""
    if not 0 < theta < 1:
        raise AnalyticError(f"theta must lie in (0, 1), got {theta}")
    return math.ceil(-math.log2(theta))


def min_check_symbols_fq(theta: float, fq: int) -> int:
    """
    Same target over GF(fq): each checking symbol divides the kernel by fq,
    so ceil(-log_fq theta) symbols suffice. Agrees with the base-2 rule at fq = 2.
    """
    if not 0 < theta < 1:
        raise AnalyticError(f"theta must lie in (0, 1), got {theta}")
    if fq < 2:
        raise AnalyticError(f"field order must be >= 2, got {fq}")
    # round before ceil so exact powers do not pick up float noise
    return math.ceil(round(-math.log(theta) / math.log(fq), 12))


# ============================================================================
# BLOCK CODING + WATCHDOG
# ============================================================================

def p_miss_mds(n: int, k: int, p_obs: float) -> float:
    """The attacker corrupts n - k + 1 packets and must dodge the watchdog on all of them."""
    if not 1 <= k <= n:
        raise AnalyticError(f"need 1 <= k <= n, got n={n}, k={k}")
    _check_unit("p_obs", p_obs)
    return (1.0 - p_obs) ** (n - k + 1)


def p_miss_exp_bound(n: int, k: int, p_obs: float) -> float:
    """exp(-p_obs (n - k + 1)), an upper bound on p_miss_mds since 1 - x <= e^-x."""
    if not 1 <= k <= n:
        raise AnalyticError(f"need 1 <= k <= n, got n={n}, k={k}")
    _check_unit("p_obs", p_obs)
    return math.exp(-p_obs * (n - k + 1))


def _select_k_real(n: int, p_obs: float, beta: float) -> float:
    if n < 2:
        raise AnalyticError(f"n must be >= 2, got {n}")
    if not 0 < p_obs <= 1:
        raise AnalyticError(f"p_obs must lie in (0, 1], got {p_obs}")
    if beta <= 0:
        raise AnalyticError(f"beta must be positive, got {beta}")
    return n + 1 - beta * math.log(n) / p_obs


def select_k(n: int, p_obs: float, beta: float) -> int:
    """
    Largest integer message length keeping the miss probability below n^-beta:
    k = floor(n + 1 - beta ln n / p_obs), clamped to n - 1 so the block
    keeps a parity packet.
    """
    k_real = _select_k_real(n, p_obs, beta)
    k = min(math.floor(k_real), n - 1)
    if k < 1:
        raise NoCodeAvailable(f"no code available for n={n}, p_obs={p_obs:g}, beta={beta:g} (k={k_real:.4f})")
    return k


def p_miss_real_k(n: int, p_obs: float, beta: float) -> float:
    """
    Miss probability with the unrounded k: (1 - p_obs)^(beta ln n / p_obs).
    Increases as p_obs falls and tends to n^-beta as p_obs -> 0.
    """
    _select_k_real(n, p_obs, beta)
    return (1.0 - p_obs) ** (beta * math.log(n) / p_obs)


def coding_rate(n: int, p_obs: float, beta: float) -> float:
    """Real-valued rate 1 + 1/n - (beta / p_obs) ln n / n; raises where select_k does."""
    select_k(n, p_obs, beta)
    return _select_k_real(n, p_obs, beta) / n


def integer_coding_rate(n: int, p_obs: float, beta: float) -> float:
    """k / n for the integer k that select_k actually picks."""
    return select_k(n, p_obs, beta) / n


# ============================================================================
# TWO FLOWS UNDER SLOTTED ALOHA
# ============================================================================

def aloha_throughput(alpha: float) -> float:
    """Success rate of one hop: its sender transmits and its receiver does not."""
    _check_unit("alpha", alpha)
    return alpha * (1.0 - alpha)


def aloha_obs_prob(alpha: float) -> float:
    """Probability that W overhears both the source and the relay copy of a packet."""
    _check_unit("alpha", alpha)
    return (1.0 - alpha) ** ALOHA_OBS_EXPONENT


def effective_throughput(alpha: float, n: int, beta: float) -> float:
    """
    MAC throughput times coding rate, with the code chosen by select_k at
    p_obs = (1 - alpha)^5:

        T_E = alpha (1 - alpha)(1 + 1/n) - alpha beta ln n / ((1 - alpha)^4 n)
    """
    if not 0 < alpha < 1:
        raise AnalyticError(f"alpha must lie in (0, 1), got {alpha}")
    p_obs = aloha_obs_prob(alpha)
    select_k(n, p_obs, beta)
    value = alpha * (1 - alpha) * (1 + 1 / n) - alpha * beta * math.log(n) / ((1 - alpha) ** 4 * n)
    if value < 0:
        raise NoCodeAvailable(f"effective throughput negative at alpha={alpha:g}, n={n}, beta={beta:g}")
    return value


def mac_throughput_with_rate(alpha: float, n: int) -> float:
    """alpha (1 - alpha)(1 + 1/n): the effective throughput before the beta penalty."""
    return aloha_throughput(alpha) * (1 + 1 / n)


# ============================================================================
# HAMMING CODES
# ============================================================================

def hamming_params(m: int) -> Tuple[int, int]:
    if m < 2:
        raise AnalyticError(f"Hamming parameter m must be >= 2, got {m}")
    return (1 << m) - 1, (1 << m) - m - 1


def p_miss_hamming_modes(m: int, p_obs: float) -> Tuple[float, float]:
    """
    (mds_mode, dmin_mode) for Hamming(2^m - 1, 2^m - m - 1).

    mds_mode applies the MDS formula, exponent n - k + 1 = m + 1. dmin_mode
    uses the true minimum distance 3, which is what a minimum-weight forgery
    achieves. The two agree only for m = 2.
    """
    n, k = hamming_params(m)
    _check_unit("p_obs", p_obs)
    return p_miss_mds(n, k, p_obs), (1.0 - p_obs) ** 3


def hamming_rate(m: int) -> float:
    n, k = hamming_params(m)
    return k / n


def aloha_obs_prob_two_rates(alpha: float, alpha_flow2: float) -> float:
    """
    Pair-observation probability when S2 and B access the channel with
    their own probability: (1 - alpha)(1 - alpha_flow2)^4. Equals
    aloha_obs_prob(alpha) when the rates agree, and 1 - alpha with flow 2 silent.
    """
    _check_unit("alpha", alpha)
    _check_unit("alpha_flow2", alpha_flow2)
    return (1.0 - alpha) * (1.0 - alpha_flow2) ** 4
