"""Unidirectional fault current limiter: state resolution and sizing.

The limiter sits on a tie branch and presents r_limit only to faults on
the grid (upstream) side of the tie; downstream faults see r_normal,
normally zero, so downstream protection is untouched. Which side a fault
is on is purely topological here: switching detection is assumed ideal.

size_ufcl picks the resistance that restores the upstream short-circuit
level to a target (usually the pre-DG level): the fault current at an
upstream bus is monotone non-increasing in R, so a doubling bracket plus
bisection always lands, and the whole search is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .faultcalc import FaultSpec, solve_fault
from .netmodel import Network, UfclSpec, partition_by_tie

__all__ = [
    "UfclSpec", "SizingResult", "SizingError",
    "UPSTREAM", "DOWNSTREAM",
    "classify_fault_side", "effective_resistance", "size_ufcl",
]

UPSTREAM = "upstream"
DOWNSTREAM = "downstream"

EVALUATION_CAP = 200


class SizingError(RuntimeError):
    """Sizing cannot proceed: target unreachable or evaluation cap hit."""


@dataclass(frozen=True)
class SizingResult:
    r_star: float  # ohms
    achieved_current_a: float
    target_current_a: float
    iterations: int  # fault solutions spent


def classify_fault_side(net: Network, ufcl: UfclSpec, fault_bus: str) -> str:
    """UPSTREAM or DOWNSTREAM relative to the limiter's declared orientation."""
    side_a, side_b = partition_by_tie(net, ufcl.tie_branch)
    down = side_a if ufcl.downstream_end in side_a else side_b
    if ufcl.downstream_end not in down:
        raise ValueError(
            f"downstream_end {ufcl.downstream_end!r} is not in either "
            f"partition of {ufcl.tie_branch!r}")
    if fault_bus not in side_a and fault_bus not in side_b:
        raise ValueError(f"unknown fault bus {fault_bus!r}")
    return DOWNSTREAM if fault_bus in down else UPSTREAM


def effective_resistance(ufcl: UfclSpec, side: str) -> float:
    if side == UPSTREAM:
        return ufcl.r_limit
    if side == DOWNSTREAM:
        return ufcl.r_normal
    raise ValueError(f"unknown fault side {side!r}")


def size_ufcl(net_with_dg: Network, fault_bus: str, target_a: float,
              tol: float = 0.005, r_hi_seed: float = 10.0) -> SizingResult:
    """Resistance restoring the upstream fault level to target_a.

    Evaluates |fault current| with the DG network and the limiter at R,
    first at R=0, then doubling R from the seed until the current drops to
    the target, then bisecting. Relative current error <= tol terminates.
    Raises SizingError when the R=0 current is already below the target
    (no resistance can raise a current) or when the evaluation budget of
    200 fault solutions runs out.
    """
    if net_with_dg.ufcl is not None:
        side = classify_fault_side(net_with_dg, net_with_dg.ufcl, fault_bus)
        if side != UPSTREAM:
            raise ValueError(
                f"fault bus {fault_bus!r} is downstream of the limiter; "
                f"sizing needs an upstream bus")
    if not target_a > 0:
        raise ValueError(f"target must be positive, got {target_a}")

    evals = 0

    def current_at(r_ohm: float) -> float:
        nonlocal evals
        evals += 1
        if evals > EVALUATION_CAP:
            raise SizingError(
                f"no convergence within {EVALUATION_CAP} fault solutions "
                f"(tol {tol})")
        return solve_fault(net_with_dg, FaultSpec(fault_bus),
                           ufcl_state_ohm=r_ohm).fault_current_a

    def err(r_ohm: float) -> tuple[float, float]:
        amps = current_at(r_ohm)
        return (amps - target_a) / target_a, amps

    e0, amps0 = err(0.0)
    if abs(e0) <= tol:
        return SizingResult(0.0, amps0, target_a, evals)
    if e0 < -tol:
        raise SizingError(
            f"current at R=0 ({amps0:.6g} A) is below the target "
            f"({target_a:.6g} A); added resistance cannot raise it")

    # current exceeds target: grow the bracket until it falls to tol range
    r_hi = r_hi_seed
    e_hi, amps_hi = err(r_hi)
    while e_hi > tol:
        r_hi *= 2.0
        e_hi, amps_hi = err(r_hi)
    if e_hi >= -tol:
        return SizingResult(r_hi, amps_hi, target_a, evals)

    lo, hi = 0.0, r_hi
    while True:
        mid = 0.5 * (lo + hi)
        e_mid, amps_mid = err(mid)
        if abs(e_mid) <= tol:
            return SizingResult(mid, amps_mid, target_a, evals)
        if e_mid > tol:
            lo = mid
        else:
            hi = mid
