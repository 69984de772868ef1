"""Scenario runner and command line front end.

A scenario selects which DG units are in service, whether the tie-line
limiter is active, and which buses get a bolted three-phase fault. The
seven canned scenarios (s0_no_dg through s6_induction_dg1_ufcl) mirror the
bundled 20 kV study grid: grid only, one synchronous DG, the same plus the
limiter, two DGs, two DGs plus limiter, and the induction-machine variants
of the single-DG pair.

For *_ufcl scenarios the limiter is sized first (restoring the recorded
pre-DG fault level at the designated sizing bus) and the sized resistance
is what upstream faults then see; downstream faults see r_normal.

Exit codes: 0 all pairs coordinate, 2 coordination violations, 1 error.
"""

from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import bundled_dataset_path
from .coordination import (CoordinationReport, check_pairs, format_number,
                           report_to_csv)
from .faultcalc import (FaultSpec, build_ybus, injection_vector, solve_fault)
from .netmodel import (Network, NetworkFormatError, load_network, to_per_unit,
                       validate)
from .relaycurve import operate_time
from .ufcl import UPSTREAM, SizingResult, classify_fault_side, size_ufcl

__all__ = [
    "Scenario", "SCENARIOS", "RelayReading", "FaultTable", "StudyReport",
    "ScenarioError", "default_fault_buses", "build_scenario_net",
    "run_scenario", "emit_report", "cli",
]


class ScenarioError(RuntimeError):
    """A scenario could not be run against the given network."""


@dataclass(frozen=True)
class Scenario:
    id: str
    dg_in_service: frozenset[str] = frozenset()
    ufcl_enabled: bool = False
    fault_buses: tuple[str, ...] | None = None  # None: study defaults
    induction: frozenset[str] = frozenset()  # DGs modeled as induction


SCENARIOS = {
    "s0_no_dg": Scenario("s0_no_dg"),
    "s1_dg1": Scenario("s1_dg1", frozenset({"dg1"})),
    "s2_dg1_ufcl": Scenario("s2_dg1_ufcl", frozenset({"dg1"}),
                            ufcl_enabled=True),
    "s3_dg1_dg2": Scenario("s3_dg1_dg2", frozenset({"dg1", "dg2"})),
    "s4_dg1_dg2_ufcl": Scenario("s4_dg1_dg2_ufcl", frozenset({"dg1", "dg2"}),
                                ufcl_enabled=True),
    "s5_induction_dg1": Scenario("s5_induction_dg1", frozenset({"dg1"}),
                                 induction=frozenset({"dg1"})),
    "s6_induction_dg1_ufcl": Scenario("s6_induction_dg1_ufcl",
                                      frozenset({"dg1"}), ufcl_enabled=True,
                                      induction=frozenset({"dg1"})),
}


@dataclass(frozen=True)
class RelayReading:
    relay: str
    current_a: float
    time_s: float | None


@dataclass(frozen=True)
class FaultTable:
    fault_bus: str
    fault_current_a: float
    ufcl_state_ohm: float
    readings: tuple[RelayReading, ...]


@dataclass(frozen=True)
class StudyReport:
    scenario_id: str
    fault_tables: tuple[FaultTable, ...]
    coordination: CoordinationReport
    sizing: SizingResult | None = None


def default_fault_buses(net: Network) -> list[str]:
    """Study default: buses 3, 4, 6 and the first DG's bus."""
    ids = set(net.bus_ids())
    out = [b for b in ("bus3", "bus4", "bus6") if b in ids]
    for s in net.sources:
        if s.kind != "infinite_grid":
            if s.bus not in out:
                out.append(s.bus)
            break
    if not out:
        raise ValueError("network has no default fault buses; "
                         "list fault buses explicitly")
    return out


def build_scenario_net(net: Network, scenario: Scenario) -> Network:
    """Network with only the scenario's sources, induction kinds applied."""
    known = {s.id for s in net.sources}
    missing = (scenario.dg_in_service | scenario.induction) - known
    if missing:
        raise ScenarioError(f"scenario {scenario.id}: unknown source ids "
                            f"{sorted(missing)}")
    if scenario.ufcl_enabled and net.ufcl is None:
        raise ScenarioError(f"scenario {scenario.id}: network declares "
                            f"no UFCL")
    kept = []
    for s in net.sources:
        if s.kind != "infinite_grid":
            if s.id not in scenario.dg_in_service:
                continue
            if s.id in scenario.induction:
                s = replace(s, kind="induction_dg")
        kept.append(s)
    return replace(net, sources=tuple(kept))


def _reading_order(net: Network, fault_bus: str) -> list[str]:
    # pair relays first, main before backup, mirroring the study tables
    order: list[str] = []
    for p in net.pairs:
        if p.fault_bus == fault_bus:
            for rid in (p.main, p.backup):
                if rid not in order:
                    order.append(rid)
    for r in net.relays:
        if r.id not in order:
            order.append(r.id)
    return order


def _resolve_states(snet: Network, scenario: Scenario,
                    buses: list[str]) -> tuple[SizingResult | None,
                                               dict[str, float]]:
    """Size the limiter if enabled and map each fault bus to its ohms."""
    states = {bus: 0.0 for bus in buses}
    if not scenario.ufcl_enabled:
        return None, states

    u = snet.ufcl
    sizing_bus = u.sizing_fault_bus
    if sizing_bus is None:
        upstream = [b for b in buses
                    if classify_fault_side(snet, u, b) == UPSTREAM]
        if not upstream:
            raise ScenarioError(f"scenario {scenario.id}: no upstream fault "
                                f"bus to size the limiter against")
        sizing_bus = upstream[0]

    target = u.sizing_reference_a
    if target is None:
        # pre-DG short-circuit level at the sizing bus
        bare = replace(snet, sources=tuple(
            s for s in snet.sources if s.kind == "infinite_grid"))
        target = solve_fault(bare, FaultSpec(sizing_bus)).fault_current_a

    sizing = size_ufcl(snet, sizing_bus, target)
    for bus in buses:
        side = classify_fault_side(snet, u, bus)
        states[bus] = sizing.r_star if side == UPSTREAM else u.r_normal
    return sizing, states


def run_scenario(net: Network, scenario: Scenario) -> StudyReport:
    """Solve every configured fault and grade the declared pairs."""
    snet = build_scenario_net(net, scenario)
    buses = list(dict.fromkeys(scenario.fault_buses
                               or default_fault_buses(net)))
    try:
        sizing, states = _resolve_states(snet, scenario, buses)

        tables = []
        results = {}
        for bus in buses:
            res = solve_fault(snet, FaultSpec(bus),
                              ufcl_state_ohm=states[bus])
            readings = tuple(
                RelayReading(rid, res.relay_currents[rid],
                             operate_time(snet.relay_by_id(rid),
                                          res.relay_currents[rid]).time_s)
                for rid in _reading_order(snet, bus))
            tables.append(FaultTable(bus, res.fault_current_a, states[bus],
                                     readings))
            results[bus] = res

        graded = tuple(p for p in snet.pairs if p.fault_bus in results)
        coordination = check_pairs(replace(snet, pairs=graded), results)
    except ScenarioError:
        raise
    except (ValueError, KeyError, RuntimeError) as exc:
        raise ScenarioError(f"scenario {scenario.id}: {exc}") from exc

    return StudyReport(scenario_id=scenario.id, fault_tables=tuple(tables),
                       coordination=coordination, sizing=sizing)


# ---------------------------------------------------------------------------
# report emission


def _coordination_md(report: CoordinationReport, full: bool) -> list[str]:
    lines = ["| fault_bus | main | backup | i_main_a | i_backup_a "
             "| t_main_s | t_backup_s | cti_s | verdict |",
             "| --- | --- | --- | --- | --- | --- | --- | --- | --- |"]
    for r in report.rows:
        cells = [r.fault_bus, r.main, r.backup,
                 format_number(r.i_main_a, full),
                 format_number(r.i_backup_a, full),
                 format_number(r.t_main_s, full),
                 format_number(r.t_backup_s, full),
                 format_number(r.cti_s, full), r.verdict]
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def emit_report(report: StudyReport, format: str = "md",
                full_precision: bool = False) -> str:
    """Render a study report; md for reading, csv for machine hand-off."""
    if format == "csv":
        return report_to_csv(report.coordination, full_precision)
    if format not in ("md", "markdown"):
        raise ValueError(f"unknown report format {format!r}")

    full = full_precision
    lines = [f"# Scenario {report.scenario_id}", ""]
    if report.sizing is not None:
        s = report.sizing
        lines += [f"UFCL sized to {format_number(s.r_star, full)} ohm "
                  f"(achieved {format_number(s.achieved_current_a, full)} A "
                  f"against target {format_number(s.target_current_a, full)} "
                  f"A in {s.iterations} fault solutions).", ""]
    for t in report.fault_tables:
        lines += [f"## Fault at {t.fault_bus}", ""]
        note = f"Fault current: {format_number(t.fault_current_a, full)} A"
        if t.ufcl_state_ohm:
            note += (f" with {format_number(t.ufcl_state_ohm, full)} ohm "
                     f"limiter in circuit")
        lines += [note, "",
                  "| relay | current_a | time_s |",
                  "| --- | --- | --- |"]
        for r in t.readings:
            lines.append(f"| {r.relay} | {format_number(r.current_a, full)} "
                         f"| {format_number(r.time_s, full)} |")
        lines.append("")
    lines += ["## Coordination", ""]
    lines += _coordination_md(report.coordination, full)
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CLI


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_net(path: str | None) -> Network:
    file = Path(path) if path else bundled_dataset_path()
    try:
        net = load_network(file.read_text())
    except (OSError, NetworkFormatError) as exc:
        _fail(f"{file}: {exc}")
    problems = validate(net)
    if problems:
        for v in problems:
            click.echo(str(v), err=True)
        _fail(f"{file}: {len(problems)} validation problem(s)")
    return net


def _debug_dump(snet: Network, buses: list[str],
                states: dict[str, float]) -> str:
    """Ybus entries and post-fault voltages as row,col,re,im.

    Matrix entries use their bus indices; the voltage profile of fault bus
    number k (1-based, order as run) appears as rows (i, -k, re, im).
    """
    pu = to_per_unit(snet)
    ybus, index = build_ybus(pu)
    out = ["row,col,re,im"]
    n = len(index)
    for i in range(n):
        for j in range(n):
            y = complex(ybus[i, j])
            if y != 0:
                out.append(f"{i},{j},{y.real!r},{y.imag!r}")
    for k, bus in enumerate(buses, start=1):
        ymat, _ = build_ybus(pu, states[bus])
        v_pre = np.linalg.solve(ymat, injection_vector(pu, index))
        unit = np.zeros(n, dtype=complex)
        unit[index[bus]] = 1.0
        z_col = np.linalg.solve(ymat, unit)
        v_post = v_pre - (v_pre[index[bus]] / z_col[index[bus]]) * z_col
        for i in range(n):
            v = complex(v_post[i])
            out.append(f"{i},{-k},{v.real!r},{v.imag!r}")
    return "\n".join(out) + "\n"


class _StudioGroup(click.Group):
    """Exit 2 is reserved for coordination verdicts, so command line
    mistakes (unknown flags, bad choices) must exit 1 instead of click's
    default 2."""

    def main(self, *args, **kwargs):
        kwargs.setdefault("standalone_mode", False)
        try:
            return super().main(*args, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.Abort:
            sys.exit(1)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)


@click.group(cls=_StudioGroup)
def cli():
    """Overcurrent coordination studies on DG networks with a tie-line
    fault current limiter."""


@cli.command("run")
@click.option("--network", "network_path", default=None,
              help="Network JSON (defaults to the bundled study grid).")
@click.option("--scenario", "scenario_id", required=True,
              type=click.Choice(sorted(SCENARIOS)))
@click.option("--fault-bus", "fault_buses", multiple=True,
              help="Override the scenario fault buses (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["md", "csv"]),
              default="md", show_default=True)
@click.option("--out", "out_path", default=None,
              help="Write the report here instead of stdout.")
@click.option("--full-precision", is_flag=True,
              help="Full float precision instead of 4 significant digits.")
@click.option("--debug-csv", "debug_path", default=None,
              help="Dump Ybus and post-fault voltages (row,col,re,im).")
def run_cmd(network_path, scenario_id, fault_buses, fmt, out_path,
            full_precision, debug_path):
    """Run one study scenario and report currents, times and verdicts."""
    net = _load_net(network_path)
    scenario = SCENARIOS[scenario_id]
    if fault_buses:
        scenario = replace(scenario, fault_buses=tuple(fault_buses))
    try:
        report = run_scenario(net, scenario)
        if debug_path:
            snet = build_scenario_net(net, scenario)
            buses = [t.fault_bus for t in report.fault_tables]
            states = {t.fault_bus: t.ufcl_state_ohm
                      for t in report.fault_tables}
            Path(debug_path).write_text(_debug_dump(snet, buses, states))
        text = emit_report(report, fmt, full_precision)
        if out_path:
            Path(out_path).write_text(text)
        else:
            click.echo(text, nl=False)
    except (ScenarioError, ValueError, OSError) as exc:
        _fail(str(exc))
    sys.exit(0 if report.coordination.all_ok else 2)


@cli.command("size-ufcl")
@click.option("--network", "network_path", default=None,
              help="Network JSON (defaults to the bundled study grid).")
@click.option("--fault-bus", "fault_bus", required=True)
@click.option("--tol", type=float, default=0.005, show_default=True,
              help="Relative current error at which sizing stops.")
def size_cmd(network_path, fault_bus, tol):
    """Size the limiter to restore the pre-DG fault level at one bus."""
    net = _load_net(network_path)
    try:
        target = net.ufcl.sizing_reference_a if net.ufcl else None
        if target is None:
            bare = replace(net, sources=tuple(
                s for s in net.sources if s.kind == "infinite_grid"))
            target = solve_fault(bare, FaultSpec(fault_bus)).fault_current_a
        result = size_ufcl(net, fault_bus, target, tol=tol)
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    click.echo(f"r_star_ohm = {result.r_star!r}")
    click.echo(f"achieved_a = {result.achieved_current_a!r}")
    click.echo(f"target_a = {result.target_current_a!r}")
    click.echo(f"iterations = {result.iterations}")


def _parse_times_csv(text: str) -> dict[str, dict[str, float | None]]:
    reader = csv.DictReader(io.StringIO(text))
    need = ("fault_bus", "relay", "t_s")
    if reader.fieldnames is None or not set(need) <= set(reader.fieldnames):
        raise ValueError("times csv needs columns: fault_bus, relay, t_s")
    out: dict[str, dict[str, float | None]] = {}
    for row in reader:
        raw = (row["t_s"] or "").strip()
        t = None if raw in ("", "none", "no_trip") else float(raw)
        out.setdefault(row["fault_bus"].strip(), {})[row["relay"].strip()] = t
    return out


@cli.command("check")
@click.option("--network", "network_path", default=None,
              help="Network JSON (defaults to the bundled study grid).")
@click.option("--times", "times_path", required=True,
              help="CSV of externally supplied operate times "
                   "(fault_bus, relay, t_s; blank t_s = no trip).")
@click.option("--full-precision", is_flag=True)
def check_cmd(network_path, times_path, full_precision):
    """Grade the declared pairs against externally supplied times."""
    net = _load_net(network_path)
    try:
        times = _parse_times_csv(Path(times_path).read_text())
        report = check_pairs(net, times)
    except (OSError, ValueError) as exc:
        _fail(str(exc))
    for line in _coordination_md(report, full_precision):
        click.echo(line)
    sys.exit(0 if report.all_ok else 2)


@cli.command("validate")
@click.option("--network", "network_path", default=None,
              help="Network JSON (defaults to the bundled study grid).")
def validate_cmd(network_path):
    """Load a network file and report every invariant violation."""
    file = Path(network_path) if network_path else bundled_dataset_path()
    try:
        net = load_network(file.read_text())
    except (OSError, NetworkFormatError) as exc:
        _fail(f"{file}: {exc}")
    problems = validate(net)
    for v in problems:
        click.echo(str(v))
    if problems:
        _fail(f"{len(problems)} validation problem(s)")
    click.echo(f"ok: {len(net.buses)} buses, {len(net.branches)} branches, "
               f"{len(net.sources)} sources, {len(net.relays)} relays")


if __name__ == "__main__":
    cli()
