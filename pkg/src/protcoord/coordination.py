"""CTI checking, pickup selection, and minimal-TDS coordination.

The coordination time interval (CTI) between a main relay and its backup
must land inside a band, [0.3, 0.6] s by default, band endpoints included.
check_pairs grades declared main/backup pairs against solved faults (or
against externally supplied operate times) and returns one verdict row per
pair; optimize_tds finds the smallest TDS per relay on a discrete grid by
the classical downstream-first radial sweep.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Mapping, Union

from .faultcalc import FaultResult
from .netmodel import CoordinationPair, Network
from .relaycurve import operate_time

__all__ = [
    "CtiBand", "CoordinationRow", "CoordinationReport", "TdsInfeasibleError",
    "compute_cti", "check_pairs", "set_pickups", "optimize_tds",
    "report_to_csv", "format_number", "CSV_COLUMNS",
]

CSV_COLUMNS = ("fault_bus", "main", "backup", "i_main_a", "i_backup_a",
               "t_main_s", "t_backup_s", "cti_s", "verdict")


class TdsInfeasibleError(ValueError):
    """No TDS on the grid satisfies the CTI floor for some relay."""


@dataclass(frozen=True)
class CtiBand:
    lo: float = 0.3
    hi: float = 0.6

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"band needs 0 < lo < hi, got "
                             f"[{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class CoordinationRow:
    fault_bus: str
    main: str
    backup: str
    i_main_a: float | None
    i_backup_a: float | None
    t_main_s: float | None
    t_backup_s: float | None
    cti_s: float | None
    verdict: str


@dataclass(frozen=True)
class CoordinationReport:
    rows: tuple[CoordinationRow, ...]
    band: CtiBand

    @property
    def all_ok(self) -> bool:
        return all(r.verdict == "ok" for r in self.rows)

    def violations(self) -> list[CoordinationRow]:
        return [r for r in self.rows if r.verdict != "ok"]


def compute_cti(t_main: float, t_backup: float) -> float:
    """Coordination time interval; negative means the backup won the race."""
    return t_backup - t_main


def _verdict(t_main: float | None, t_backup: float | None,
             band: CtiBand) -> tuple[float | None, str]:
    if t_main is None or t_backup is None:
        return None, "no_trip"
    cti = compute_cti(t_main, t_backup)
    if cti < 0:
        return cti, "backup_first"
    if cti < band.lo:
        return cti, "too_fast"
    if cti <= band.hi:
        return cti, "ok"
    return cti, "too_slow"


FaultInput = Union[FaultResult, Mapping[str, Union[float, None]]]


def check_pairs(net: Network, results: Mapping[str, FaultInput],
                band: CtiBand = CtiBand()) -> CoordinationReport:
    """Grade every declared pair at its fault bus.

    results maps fault bus to either a solved FaultResult (times are then
    evaluated from the relay curves) or a plain relay→seconds mapping of
    externally supplied operate times (None = relay does not trip).
    """
    rows = []
    for pair in net.pairs:
        if pair.fault_bus not in results:
            raise ValueError(f"no fault result for bus {pair.fault_bus!r}")
        res = results[pair.fault_bus]

        if isinstance(res, FaultResult):
            i_main = res.relay_currents[pair.main]
            i_backup = res.relay_currents[pair.backup]
            t_main = operate_time(net.relay_by_id(pair.main), i_main).time_s
            t_backup = operate_time(net.relay_by_id(pair.backup),
                                    i_backup).time_s
        else:
            for rid in (pair.main, pair.backup):
                if rid not in res:
                    raise ValueError(
                        f"no operate time supplied for relay {rid!r}")
            i_main = i_backup = None
            t_main = res[pair.main]
            t_backup = res[pair.backup]

        cti, verdict = _verdict(t_main, t_backup, band)
        rows.append(CoordinationRow(
            fault_bus=pair.fault_bus, main=pair.main, backup=pair.backup,
            i_main_a=i_main, i_backup_a=i_backup,
            t_main_s=t_main, t_backup_s=t_backup,
            cti_s=cti, verdict=verdict))
    return CoordinationReport(rows=tuple(rows), band=band)


def set_pickups(load_currents: Mapping[str, float],
                overload_factor: Union[float, Mapping[str, float]] = 1.25,
                ) -> dict[str, int]:
    """Pickup per relay: overload factor times load current, nearest ampere.

    overload_factor is a scalar applied to every relay or a per-relay map;
    factors are expected to exceed 1 so pickups clear normal load.
    """
    pickups = {}
    for rid, amps in load_currents.items():
        factor = (overload_factor[rid]
                  if isinstance(overload_factor, Mapping)
                  else overload_factor)
        pickups[rid] = int(round(amps * factor))
    return pickups


def _trip_time(relay, current_a: float, tds: float) -> float | None:
    return operate_time(replace(relay, tds=tds), current_a).time_s


def optimize_tds(net: Network, pairs: list[CoordinationPair],
                 fault_results: Mapping[str, FaultResult],
                 band: CtiBand = CtiBand(), tds_min: float = 0.05,
                 tds_step: float = 0.05, tds_max: float = 3.0,
                 ) -> dict[str, float]:
    """Smallest grid TDS per relay meeting the CTI floor, downstream first.

    Mains take tds_min (smaller is always better for their own pairs);
    each backup then takes the smallest grid value keeping CTI >= band.lo
    against every already-assigned main. Pair chains must be radial. The
    assignment is re-checked through check_pairs before returning; a relay
    with no workable grid value raises TdsInfeasibleError.
    """
    for bus in {p.fault_bus for p in pairs}:
        if bus not in fault_results:
            raise ValueError(f"no fault result for bus {bus!r}")
        if not isinstance(fault_results[bus], FaultResult):
            raise TypeError("optimize_tds needs solved fault currents, "
                            "not pre-supplied times")

    grid = []
    k = 0
    while tds_min + k * tds_step <= tds_max + 1e-12:
        grid.append(tds_min + k * tds_step)
        k += 1

    # downstream-first order: every pair's main before its backup
    indeg = {r.id: 0 for r in net.relays}
    for p in pairs:
        indeg[p.backup] += 1
    order = []
    ready = [r.id for r in net.relays if indeg[r.id] == 0]
    while ready:
        rid = ready.pop(0)
        order.append(rid)
        for p in pairs:
            if p.main == rid:
                indeg[p.backup] -= 1
                if indeg[p.backup] == 0:
                    ready.append(p.backup)
    if len(order) != len(net.relays):
        raise ValueError("coordination pairs are not radial "
                         "(cycle of main/backup relations)")

    assigned: dict[str, float] = {}
    for rid in order:
        relay = net.relay_by_id(rid)
        floors = []  # minimum backup operate time per constraint
        for p in pairs:
            if p.backup != rid:
                continue
            res = fault_results[p.fault_bus]
            t_main = _trip_time(net.relay_by_id(p.main),
                                res.relay_currents[p.main],
                                assigned[p.main])
            if t_main is None:
                continue  # main never trips: no CTI to maintain
            floors.append((p, res.relay_currents[rid], t_main + band.lo))

        choice = None
        for tds in grid:
            if all(
                (t := _trip_time(relay, amps, tds)) is not None
                and t >= floor
                for _, amps, floor in floors
            ):
                choice = tds
                break
        if choice is None:
            raise TdsInfeasibleError(
                f"relay {rid!r}: no tds in [{tds_min}, {tds_max}] "
                f"step {tds_step} keeps CTI >= {band.lo} for its pairs")
        assigned[rid] = choice

    relays = tuple(replace(r, tds=assigned[r.id]) for r in net.relays)
    verification = check_pairs(replace(net, relays=relays,
                                       pairs=tuple(pairs)),
                               fault_results, band)
    bad = [r for r in verification.rows
           if r.verdict in ("too_fast", "backup_first")]
    if bad:
        raise TdsInfeasibleError(
            f"sweep result failed verification: {bad[0]}")
    return assigned


# ---------------------------------------------------------------------------
# serialization


def format_number(x: float | None, full_precision: bool = False) -> str:
    if x is None:
        return ""
    if full_precision:
        return repr(float(x))
    return f"{x:.4g}"


def report_to_csv(report: CoordinationReport,
                  full_precision: bool = False) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        writer.writerow([
            r.fault_bus, r.main, r.backup,
            format_number(r.i_main_a, full_precision),
            format_number(r.i_backup_a, full_precision),
            format_number(r.t_main_s, full_precision),
            format_number(r.t_backup_s, full_precision),
            format_number(r.cti_s, full_precision),
            r.verdict,
        ])
    return out.getvalue()
