"""Swap, liquidity and spot-price math for four CFMM families.

Token 0 is the LST and token 1 the underlying; prices are quoted as units of
token 1 per unit of token 0. Everything is plain double-precision float math,
no on-chain fixed point emulation.

The Curve invariants share one equation,

    K * D**(N-1) * sum(x) + prod(x) = K * D**N + (D/N)**N

with ``K0 = prod(x) * N**N / D**N`` and ``K = A * K0`` (Stableswap) or
``K = A * K0 * gamma**2 / (gamma + 1 - K0)**2`` (Cryptoswap).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .errors import DomainError, InsufficientLiquidityError, SolverError

MAX_ITERATIONS = 255
SOLVER_TOLERANCE = 1e-12


class FamilyKind(enum.Enum):
    CONSTANT_PRODUCT = "cpmm"
    CONCENTRATED_LIQUIDITY = "clmm"
    STABLESWAP = "stableswap"
    CRYPTOSWAP = "cryptoswap"


class FeeMode(enum.Enum):
    """Where the input-side fee ends up.

    FEES_TO_POOL: the whole input is added to the reserves (Curve, Uniswap v2),
    so fees grow the invariant. FEES_ACCRUED_SEPARATELY: the fee is withheld
    and only the net input reaches the reserves (Uniswap v3).
    """

    FEES_TO_POOL = "to-pool"
    FEES_ACCRUED_SEPARATELY = "separate"


@dataclass(frozen=True)
class CurveFamily:
    kind: FamilyKind
    amplification: float | None = None
    gamma: float | None = None
    lower_price: float | None = None
    upper_price: float | None = None

    def __post_init__(self):
        if self.kind in (FamilyKind.STABLESWAP, FamilyKind.CRYPTOSWAP):
            if self.amplification is None or not self.amplification > 0:
                raise DomainError("amplification A must be > 0")
        if self.kind is FamilyKind.CRYPTOSWAP:
            if self.gamma is None or not self.gamma > 0:
                raise DomainError("gamma must be > 0")
        if self.kind is FamilyKind.CONCENTRATED_LIQUIDITY:
            if self.lower_price is None or self.upper_price is None:
                raise DomainError("concentrated liquidity needs a price range")
            if not 0 < self.lower_price < self.upper_price:
                raise DomainError("price range must satisfy 0 < p_a < p_b")

    @classmethod
    def constant_product(cls) -> CurveFamily:
        return cls(FamilyKind.CONSTANT_PRODUCT)

    @classmethod
    def concentrated(cls, lower_price: float, upper_price: float) -> CurveFamily:
        return cls(FamilyKind.CONCENTRATED_LIQUIDITY,
                   lower_price=lower_price, upper_price=upper_price)

    @classmethod
    def stableswap(cls, amplification: float) -> CurveFamily:
        return cls(FamilyKind.STABLESWAP, amplification=amplification)

    @classmethod
    def cryptoswap(cls, amplification: float, gamma: float) -> CurveFamily:
        return cls(FamilyKind.CRYPTOSWAP, amplification=amplification, gamma=gamma)


@dataclass(frozen=True)
class PoolState:
    reserves: tuple[float, ...]
    family: CurveFamily
    fee_rate: float = 0.0
    fee_mode: FeeMode = FeeMode.FEES_TO_POOL

    def __post_init__(self):
        object.__setattr__(self, "reserves", tuple(float(r) for r in self.reserves))
        if len(self.reserves) < 2:
            raise DomainError("a pool needs at least two tokens")
        if not 0 <= self.fee_rate < 1:
            raise DomainError("fee_rate must lie in [0, 1)")
        if self.family.kind is FamilyKind.CONCENTRATED_LIQUIDITY:
            if len(self.reserves) != 2:
                raise DomainError("concentrated liquidity pools hold exactly two tokens")
            # one side may be empty when the price sits on a range boundary
            if min(self.reserves) < 0 or max(self.reserves) <= 0:
                raise DomainError("reserves must be nonnegative and not all zero")
        elif not all(r > 0 and math.isfinite(r) for r in self.reserves):
            raise DomainError("reserves must be strictly positive")

    @property
    def n_tokens(self) -> int:
        return len(self.reserves)


@dataclass(frozen=True)
class ClmmPosition:
    liquidity: float
    lower_price: float
    upper_price: float

    def __post_init__(self):
        if not self.liquidity > 0:
            raise DomainError("liquidity must be > 0")
        if not 0 < self.lower_price < self.upper_price:
            raise DomainError("price range must satisfy 0 < p_a < p_b")


@dataclass(frozen=True)
class SwapQuote:
    amount_in: float
    amount_out: float
    fee_paid: float
    new_reserves: tuple[float, ...]
    spot_price_after: float
    new_state: PoolState = field(repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "amount_in": self.amount_in,
            "amount_out": self.amount_out,
            "fee_paid": self.fee_paid,
            "new_reserves": list(self.new_reserves),
            "spot_price_after": self.spot_price_after,
        }


# --------------------------------------------------------------------------
# Constant product and concentrated liquidity holdings

def cpmm_holdings(liquidity: float, price: float) -> tuple[float, float]:
    """Token amounts ``(L/sqrt(P), L*sqrt(P))`` of a full-range position."""
    if not liquidity > 0 or not price > 0:
        raise DomainError("liquidity and price must be > 0")
    # non-float inputs (mpmath) keep their precision
    sp = math.sqrt(price) if isinstance(price, (int, float)) else price ** 0.5
    return liquidity / sp, liquidity * sp


def clmm_holdings(position: ClmmPosition, price: float) -> tuple[float, float]:
    """Token amounts of a concentrated position; pinned to one token outside its range."""
    if not price > 0:
        raise DomainError("price must be > 0")
    sp = math.sqrt(min(max(price, position.lower_price), position.upper_price))
    sa = math.sqrt(position.lower_price)
    sb = math.sqrt(position.upper_price)
    L = position.liquidity
    return L * (1.0 / sp - 1.0 / sb), L * (sp - sa)


def clmm_liquidity(reserves: Sequence[float], lower_price: float, upper_price: float) -> float:
    """Liquidity L for real reserves ``(x, y)`` on the range ``[p_a, p_b]``.

    Positive root of ``(x + L/sqrt(p_b)) (y + L sqrt(p_a)) = L**2``.
    """
    x, y = reserves
    sa, sb = math.sqrt(lower_price), math.sqrt(upper_price)
    a = 1.0 - sa / sb
    b = x * sa + y / sb
    c = x * y
    return (b + math.sqrt(b * b + 4.0 * a * c)) / (2.0 * a)


def clmm_virtual_reserves(state: PoolState) -> tuple[float, float, float]:
    """Virtual reserves ``(X, Y)`` and liquidity of a concentrated pool."""
    fam = state.family
    L = clmm_liquidity(state.reserves, fam.lower_price, fam.upper_price)
    x, y = state.reserves
    return x + L / math.sqrt(fam.upper_price), y + L * math.sqrt(fam.lower_price), L


def liquidity_for_value(value: float, price: float, lower_price: float,
                        upper_price: float) -> float:
    """Liquidity of a concentrated position worth ``value`` (token 1 units) at ``price``."""
    unit = clmm_holdings(ClmmPosition(1.0, lower_price, upper_price), price)
    per_unit = unit[0] * price + unit[1]
    return value / per_unit


# --------------------------------------------------------------------------
# Curve invariants

def _k_of_k0(family: CurveFamily, k0: float) -> tuple[float, float]:
    """``K`` and ``dK/dK0`` as functions of ``K0``."""
    A = family.amplification
    if family.kind is FamilyKind.STABLESWAP:
        return A * k0, A
    g = family.gamma
    den = g + 1.0 - k0
    return A * k0 * g * g / (den * den), A * g * g * (g + 1.0 + k0) / (den * den * den)


def _curve_terms(family: CurveFamily, reserves: Sequence[float], d: float):
    """Pieces of the Curve equation at ``(reserves, D)``.

    Returns ``(residual, scale, K, dK/dK0, K0, prod, sum)`` where residual is
    LHS - RHS arranged to avoid cancellation and scale is max(|LHS|, |RHS|).
    """
    n = len(reserves)
    s = math.fsum(reserves)
    p = math.prod(reserves)
    k0 = p * n ** n / d ** n
    k, dk = _k_of_k0(family, k0)
    dn1 = d ** (n - 1)
    target = (d / n) ** n
    lhs = k * dn1 * s + p
    rhs = k * dn1 * d + target
    residual = k * dn1 * (s - d) + p - target
    return residual, max(abs(lhs), abs(rhs)), k, dk, k0, p, s


def curve_residual(family: CurveFamily, reserves: Sequence[float], d: float) -> float:
    """Relative residual |LHS - RHS| / max(|LHS|, |RHS|) of the Curve equation."""
    res, scale, *_ = _curve_terms(family, reserves, d)
    return abs(res) / scale if scale > 0 else abs(res)


def _safeguarded_newton(f: Callable[[float], tuple[float, float, float]],
                        lo: float, hi: float, x0: float, increasing: bool,
                        what: str) -> float:
    """Newton iteration kept inside a sign-change bracket, bisecting when a step escapes.

    ``f(x)`` returns ``(value, derivative, relative_residual)``; ``value`` changes
    sign once on ``[lo, hi]``, upward when ``increasing``.
    """
    x = min(max(x0, lo), hi)
    last = math.inf
    for _ in range(MAX_ITERATIONS):
        fx, dfx, rel = f(x)
        last = rel
        if rel <= SOLVER_TOLERANCE:
            return _polish(f, x, fx, dfx, increasing)
        if (fx < 0) == increasing:
            lo = x
        else:
            hi = x
        if hi - lo <= 2 * math.ulp(hi):
            break
        step = fx / dfx if dfx != 0 else math.nan
        x_new = x - step
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        x = x_new
    fx, _, rel = f(x)
    if rel <= SOLVER_TOLERANCE:
        return x
    raise SolverError(f"{what} did not converge", min(rel, last))


def _polish(f, x: float, fx: float, dfx: float, increasing: bool) -> float:
    """A few extra Newton steps to full precision once inside the tolerance.

    Ends at or just above the root so callers round against the trader.
    """
    for _ in range(4):
        if fx == 0 or dfx == 0:
            return x
        x_new = x - fx / dfx
        if not math.isfinite(x_new) or x_new <= 0 or x_new == x:
            break
        f_new, df_new, _ = f(x_new)
        if abs(f_new) >= abs(fx):
            break
        x, fx, dfx = x_new, f_new, df_new
    # step up to the far side of the root: a slightly larger D or balance
    # never lets a swap pay out more than the exact curve would
    for _ in range(8):
        if fx == 0 or (fx > 0) == increasing:
            return x
        x = x + math.ulp(x)
        fx, _, _ = f(x)
    return x


def _solve_d(family: CurveFamily, reserves: Sequence[float]) -> float:
    n = len(reserves)
    if n < 2:
        raise DomainError("need at least two reserves")
    if not all(r > 0 and math.isfinite(r) for r in reserves):
        raise DomainError("reserves must be strictly positive")
    s = math.fsum(reserves)
    # root lies between N * geometric mean (K0 = 1) and the plain sum
    lo = n * math.exp(math.fsum(math.log(r) for r in reserves) / n)
    lo = min(lo, s)

    def f(d):
        res, scale, k, dk, k0, p, s_ = _curve_terms(family, reserves, d)
        dn2 = d ** (n - 2)
        dk_dd = dk * (-n * k0 / d)
        deriv = (dk_dd * dn2 * d * (s_ - d)
                 + k * ((n - 1) * dn2 * (s_ - d) - dn2 * d)
                 - n * dn2 * d / n ** n)
        return res, deriv, abs(res) / scale

    return _safeguarded_newton(f, lo, s, s, False, "D solver")


def stableswap_solve_d(reserves: Sequence[float], amplification: float) -> float:
    """Invariant D of a Stableswap pool, Newton from ``sum(x)`` with bisection fallback."""
    return _solve_d(CurveFamily.stableswap(amplification), reserves)


def cryptoswap_solve_d(reserves: Sequence[float], amplification: float, gamma: float) -> float:
    """Invariant D of a Cryptoswap pool."""
    return _solve_d(CurveFamily.cryptoswap(amplification, gamma), reserves)


def solve_d(state: PoolState) -> float:
    if state.family.kind not in (FamilyKind.STABLESWAP, FamilyKind.CRYPTOSWAP):
        raise DomainError("D is only defined for Curve families")
    return _solve_d(state.family, state.reserves)


def _solve_balance(family: CurveFamily, reserves: Sequence[float], index: int, d: float) -> float:
    """Balance of token ``index`` that puts ``reserves`` back on the level set of ``d``."""
    n = len(reserves)
    others = [r for i, r in enumerate(reserves) if i != index]
    p_other = math.prod(others)
    # at this balance K0 == 1 and the residual is >= 0; at 0 it is negative
    hi = (d / n) ** n / p_other

    def f(y):
        xs = list(reserves)
        xs[index] = y
        res, scale, k, dk, k0, p, _ = _curve_terms(family, xs, d)
        dn1 = d ** (n - 1)
        s = math.fsum(xs)
        deriv = dk * (k0 / y) * dn1 * (s - d) + k * dn1 + p / y
        return res, deriv, abs(res) / scale

    y0 = min(reserves[index], hi)
    return _safeguarded_newton(f, 0.0, hi, y0, True, "balance solver")


def _round_against_trader(amount_out: float, scale: float) -> float:
    # like the on-chain "- 1" unit: float noise never favours the trader
    return amount_out - 4.0 * math.ulp(scale)


def _check_indices(state: PoolState, i: int, j: int, amount_in: float):
    n = state.n_tokens
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise DomainError("in/out indices must be distinct and valid")
    if not amount_in > 0 or not math.isfinite(amount_in):
        raise DomainError("amount_in must be > 0")


def _curve_swap(state: PoolState, i: int, j: int, amount_in: float, family: FamilyKind) -> SwapQuote:
    if state.family.kind is not family:
        raise DomainError(f"pool is not a {family.value} pool")
    if state.n_tokens != 2:
        raise DomainError("swaps are supported on two-token pools only")
    _check_indices(state, i, j, amount_in)
    fee = state.fee_rate * amount_in
    net = amount_in - fee
    d = _solve_d(state.family, state.reserves)
    xs = list(state.reserves)
    xs[i] += net
    new_j = _solve_balance(state.family, xs, j, d)
    amount_out = _round_against_trader(state.reserves[j] - new_j, d)
    if new_j <= 0 or amount_out >= state.reserves[j]:
        raise InsufficientLiquidityError("swap would drain the output reserve")
    amount_out = max(amount_out, 0.0)
    return _finish(state, i, j, amount_in, amount_out, fee)


def _finish(state: PoolState, i: int, j: int, amount_in: float, amount_out: float,
            fee: float) -> SwapQuote:
    xs = list(state.reserves)
    xs[i] += amount_in if state.fee_mode is FeeMode.FEES_TO_POOL else amount_in - fee
    xs[j] -= amount_out
    new_state = replace(state, reserves=tuple(xs))
    return SwapQuote(amount_in, amount_out, fee, new_state.reserves,
                     spot_price(new_state), new_state)


def stableswap_swap(state: PoolState, in_index: int, out_index: int, amount_in: float) -> SwapQuote:
    """Exact-input swap on a Stableswap pool with D held fixed."""
    return _curve_swap(state, in_index, out_index, amount_in, FamilyKind.STABLESWAP)


def cryptoswap_swap(state: PoolState, in_index: int, out_index: int, amount_in: float) -> SwapQuote:
    """Exact-input swap on a Cryptoswap pool with D held fixed."""
    return _curve_swap(state, in_index, out_index, amount_in, FamilyKind.CRYPTOSWAP)


def cpmm_swap(state: PoolState, in_index: int, out_index: int, amount_in: float) -> SwapQuote:
    if state.family.kind is not FamilyKind.CONSTANT_PRODUCT:
        raise DomainError("pool is not a constant product pool")
    if state.n_tokens != 2:
        raise DomainError("swaps are supported on two-token pools only")
    _check_indices(state, in_index, out_index, amount_in)
    fee = state.fee_rate * amount_in
    net = amount_in - fee
    x, y = state.reserves[in_index], state.reserves[out_index]
    amount_out = max(_round_against_trader(y * net / (x + net), y), 0.0)
    return _finish(state, in_index, out_index, amount_in, amount_out, fee)


def clmm_swap(state: PoolState, in_index: int, out_index: int, amount_in: float) -> SwapQuote:
    """Constant product swap on virtual reserves, limited by the real ones."""
    if state.family.kind is not FamilyKind.CONCENTRATED_LIQUIDITY:
        raise DomainError("pool is not a concentrated liquidity pool")
    _check_indices(state, in_index, out_index, amount_in)
    fee = state.fee_rate * amount_in
    net = amount_in - fee
    vx, vy, _ = clmm_virtual_reserves(state)
    virtual = (vx, vy)
    x, y = virtual[in_index], virtual[out_index]
    amount_out = max(_round_against_trader(y * net / (x + net), y), 0.0)
    if amount_out > state.reserves[out_index]:
        raise InsufficientLiquidityError("swap would push the price out of the position range")
    return _finish(state, in_index, out_index, amount_in, amount_out, fee)


def swap(state: PoolState, in_index: int, out_index: int, amount_in: float) -> SwapQuote:
    """Exact-input swap for any family."""
    kind = state.family.kind
    if kind is FamilyKind.CONSTANT_PRODUCT:
        return cpmm_swap(state, in_index, out_index, amount_in)
    if kind is FamilyKind.CONCENTRATED_LIQUIDITY:
        return clmm_swap(state, in_index, out_index, amount_in)
    if kind is FamilyKind.STABLESWAP:
        return stableswap_swap(state, in_index, out_index, amount_in)
    return cryptoswap_swap(state, in_index, out_index, amount_in)


def invariant_value(state: PoolState) -> float:
    """Family invariant: ``x*y`` (CPMM), ``L`` (CLMM) or ``D`` (Curve)."""
    kind = state.family.kind
    if kind is FamilyKind.CONSTANT_PRODUCT:
        return math.prod(state.reserves)
    if kind is FamilyKind.CONCENTRATED_LIQUIDITY:
        return clmm_virtual_reserves(state)[2]
    return solve_d(state)


def spot_price(state: PoolState) -> float:
    """Marginal price of token 0 in token 1, ``-dy/dx`` along the level curve."""
    kind = state.family.kind
    if kind is FamilyKind.CONSTANT_PRODUCT:
        x, y = state.reserves[:2]
        return y / x
    if kind is FamilyKind.CONCENTRATED_LIQUIDITY:
        vx, vy, _ = clmm_virtual_reserves(state)
        return vy / vx
    xs = state.reserves
    d = solve_d(state)
    n = len(xs)
    _, _, k, dk, k0, p, s = _curve_terms(state.family, xs, d)
    dn1 = d ** (n - 1)

    def partial(i):
        return dk * (k0 / xs[i]) * dn1 * (s - d) + k * dn1 + p / xs[i]

    return partial(0) / partial(1)


# --------------------------------------------------------------------------
# Which AMM suits which LST pair

class LstKind(enum.Enum):
    REBASE = "rebase"
    REWARD = "reward"


class CounterAsset(enum.Enum):
    ETH = "eth"
    REBASE_LST = "rebase-lst"
    REWARD_LST = "reward-lst"


@dataclass(frozen=True)
class SuitableAmm:
    family: FamilyKind
    rebalancing_required: bool = False


_SUITABILITY = {
    (LstKind.REBASE, CounterAsset.ETH): frozenset({SuitableAmm(FamilyKind.STABLESWAP)}),
    (LstKind.REBASE, CounterAsset.REBASE_LST): frozenset({SuitableAmm(FamilyKind.STABLESWAP)}),
    (LstKind.REWARD, CounterAsset.ETH): frozenset({
        SuitableAmm(FamilyKind.CRYPTOSWAP),
        SuitableAmm(FamilyKind.CONCENTRATED_LIQUIDITY, rebalancing_required=True),
    }),
    (LstKind.REWARD, CounterAsset.REWARD_LST): frozenset({
        SuitableAmm(FamilyKind.CRYPTOSWAP),
        SuitableAmm(FamilyKind.CONCENTRATED_LIQUIDITY),
    }),
}


def suitability(lst_kind: LstKind, counter: CounterAsset) -> frozenset[SuitableAmm]:
    """Liquidity-efficient AMM families for an LST pair; empty for pairs not tabulated."""
    return _SUITABILITY.get((LstKind(lst_kind), CounterAsset(counter)), frozenset())


def suitability_table() -> list[tuple[LstKind, CounterAsset, frozenset[SuitableAmm]]]:
    return [(k[0], k[1], v) for k, v in _SUITABILITY.items()]
