"""Network domain types, file loading, validation, and per-unit conversion.

A network is a set of buses joined by branches (lines, transformers, one or
more tie-feeders), with EMF-behind-impedance sources, constant-impedance
shunt loads, overcurrent relays attached to branches, and declared
main/backup coordination pairs. Everything is immutable after load; all
operations here are pure functions.

Network file format (JSON):
    top-level arrays  buses, branches, sources, loads, relays, pairs
    optional object   ufcl
    impedances        {"r": ohms, "x": ohms}
    optional fields   emf_pu (default 1.0), referred_side (default "from"),
                      ufcl.sizing_fault_bus, ufcl.sizing_reference_a
Relay curves are either an explicit {"a":, "b":, "c":} object or the name
of a published family (see relaycurve.curve_family).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .relaycurve import CurveConstants, curve_family

__all__ = [
    "Bus", "Branch", "Source", "ShuntLoad", "RelaySpec", "CoordinationPair",
    "UfclSpec", "Network", "PuNetwork", "Violation", "NetworkFormatError",
    "load_network", "validate", "to_per_unit", "from_per_unit",
    "partition_by_tie",
]

BRANCH_KINDS = ("line", "transformer", "tie")
SOURCE_KINDS = ("infinite_grid", "sync_dg", "induction_dg")


class NetworkFormatError(ValueError):
    """Raised when a network document cannot be loaded."""


@dataclass(frozen=True)
class Bus:
    id: str
    nominal_voltage: float  # volts, line-to-line


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    kind: str  # line | transformer | tie
    impedance: complex  # ohms
    referred_side: str = "from"  # transformer ohms stated on this side


@dataclass(frozen=True)
class Source:
    id: str
    bus: str
    kind: str  # infinite_grid | sync_dg | induction_dg
    internal_impedance: complex  # ohms
    emf_pu: float = 1.0


@dataclass(frozen=True)
class ShuntLoad:
    id: str
    bus: str
    impedance: complex  # ohms


@dataclass(frozen=True)
class RelaySpec:
    id: str
    branch: str
    orientation: str  # from_to | to_from
    pickup_a: float
    tds: float
    curve: CurveConstants


@dataclass(frozen=True)
class CoordinationPair:
    main: str
    backup: str
    fault_bus: str


@dataclass(frozen=True)
class UfclSpec:
    """Unidirectional fault current limiter on a tie branch.

    r_limit applies for upstream faults, r_normal (usually 0) otherwise.
    sizing_fault_bus / sizing_reference_a optionally record the study's
    designated sizing bus and the pre-DG fault level to restore; when
    absent the sizing target is computed from the network itself.
    """

    tie_branch: str
    r_limit: float
    r_normal: float = 0.0
    downstream_end: str = ""
    sizing_fault_bus: str | None = None
    sizing_reference_a: float | None = None


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    sources: tuple[Source, ...]
    loads: tuple[ShuntLoad, ...] = ()
    relays: tuple[RelaySpec, ...] = ()
    pairs: tuple[CoordinationPair, ...] = ()
    ufcl: UfclSpec | None = None
    s_base_va: float = 10e6

    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    def branch_by_id(self, branch_id: str) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise KeyError(f"unknown branch {branch_id!r}")

    def relay_by_id(self, relay_id: str) -> RelaySpec:
        for r in self.relays:
            if r.id == relay_id:
                return r
        raise KeyError(f"unknown relay {relay_id!r}")


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule} ({self.message})"


# ---------------------------------------------------------------------------
# loading


def _impedance(obj, where: str) -> complex:
    if not isinstance(obj, dict) or "r" not in obj or "x" not in obj:
        raise NetworkFormatError(
            f"{where}: impedance must be an object with 'r' and 'x' fields")
    return complex(float(obj["r"]), float(obj["x"]))


def _require(record: dict, name: str, where: str):
    if name not in record:
        raise NetworkFormatError(f"{where}: missing field {name!r}")
    return record[name]


def _curve(spec, where: str) -> CurveConstants:
    if isinstance(spec, str):
        # family names resolve to published constants; "custom" must carry
        # explicit a/b/c and is rejected by curve_family
        try:
            return curve_family(spec)
        except ValueError as exc:
            raise NetworkFormatError(f"{where}: {exc}") from None
    if isinstance(spec, dict):
        for f in ("a", "b", "c"):
            if f not in spec:
                raise NetworkFormatError(f"{where}: curve missing field {f!r}")
        return CurveConstants(float(spec["a"]), float(spec["b"]),
                              float(spec["c"]))
    raise NetworkFormatError(
        f"{where}: curve must be a family name or an a/b/c object")


def load_network(text: str) -> Network:
    """Parse a network document (JSON text) into a Network.

    Defaults are applied here (emf_pu 1.0, referred_side "from"). Parse
    problems raise NetworkFormatError carrying the line or the array/field
    locus; references to undefined ids raise NetworkFormatError naming the
    dangling id.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("document root must be an object")

    def records(name: str) -> list:
        arr = doc.get(name, [])
        if not isinstance(arr, list):
            raise NetworkFormatError(f"{name}: must be an array")
        return arr

    buses = []
    for i, rec in enumerate(records("buses")):
        w = f"buses[{i}]"
        buses.append(Bus(
            id=str(_require(rec, "id", w)),
            nominal_voltage=float(_require(rec, "nominal_voltage", w))))

    branches = []
    for i, rec in enumerate(records("branches")):
        w = f"branches[{i}]"
        kind = str(rec.get("kind", "line"))
        if kind not in BRANCH_KINDS:
            raise NetworkFormatError(f"{w}: unknown branch kind {kind!r}")
        side = str(rec.get("referred_side", "from"))
        if side not in ("from", "to"):
            raise NetworkFormatError(f"{w}: referred_side must be from|to")
        branches.append(Branch(
            id=str(_require(rec, "id", w)),
            from_bus=str(_require(rec, "from_bus", w)),
            to_bus=str(_require(rec, "to_bus", w)),
            kind=kind,
            impedance=_impedance(_require(rec, "impedance", w), w),
            referred_side=side))

    sources = []
    for i, rec in enumerate(records("sources")):
        w = f"sources[{i}]"
        kind = str(_require(rec, "kind", w))
        if kind not in SOURCE_KINDS:
            raise NetworkFormatError(f"{w}: unknown source kind {kind!r}")
        sources.append(Source(
            id=str(_require(rec, "id", w)),
            bus=str(_require(rec, "bus", w)),
            kind=kind,
            internal_impedance=_impedance(
                _require(rec, "internal_impedance", w), w),
            emf_pu=float(rec.get("emf_pu", 1.0))))

    loads = []
    for i, rec in enumerate(records("loads")):
        w = f"loads[{i}]"
        loads.append(ShuntLoad(
            id=str(_require(rec, "id", w)),
            bus=str(_require(rec, "bus", w)),
            impedance=_impedance(_require(rec, "impedance", w), w)))

    relays = []
    for i, rec in enumerate(records("relays")):
        w = f"relays[{i}]"
        orientation = str(rec.get("orientation", "from_to"))
        if orientation not in ("from_to", "to_from"):
            raise NetworkFormatError(f"{w}: orientation must be from_to|to_from")
        relays.append(RelaySpec(
            id=str(_require(rec, "id", w)),
            branch=str(_require(rec, "branch", w)),
            orientation=orientation,
            pickup_a=float(_require(rec, "pickup_a", w)),
            tds=float(_require(rec, "tds", w)),
            curve=_curve(_require(rec, "curve", w), w)))

    pairs = []
    for i, rec in enumerate(records("pairs")):
        w = f"pairs[{i}]"
        pairs.append(CoordinationPair(
            main=str(_require(rec, "main", w)),
            backup=str(_require(rec, "backup", w)),
            fault_bus=str(_require(rec, "fault_bus", w))))

    ufcl = None
    if "ufcl" in doc and doc["ufcl"] is not None:
        rec = doc["ufcl"]
        w = "ufcl"
        ref = rec.get("sizing_reference_a")
        ufcl = UfclSpec(
            tie_branch=str(_require(rec, "tie_branch", w)),
            r_limit=float(_require(rec, "r_limit", w)),
            r_normal=float(rec.get("r_normal", 0.0)),
            downstream_end=str(_require(rec, "downstream_end", w)),
            sizing_fault_bus=rec.get("sizing_fault_bus"),
            sizing_reference_a=None if ref is None else float(ref))

    net = Network(
        buses=tuple(buses), branches=tuple(branches), sources=tuple(sources),
        loads=tuple(loads), relays=tuple(relays), pairs=tuple(pairs),
        ufcl=ufcl, s_base_va=float(doc.get("s_base_va", 10e6)))

    _check_references(net)
    return net


def _check_references(net: Network) -> None:
    bus_ids = set(net.bus_ids())
    branch_ids = {br.id for br in net.branches}
    relay_ids = {r.id for r in net.relays}

    def need_bus(bus_id: str, where: str):
        if bus_id not in bus_ids:
            raise NetworkFormatError(
                f"{where} references undefined bus {bus_id!r}")

    for br in net.branches:
        need_bus(br.from_bus, f"branch {br.id!r}")
        need_bus(br.to_bus, f"branch {br.id!r}")
    for src in net.sources:
        need_bus(src.bus, f"source {src.id!r}")
    for ld in net.loads:
        need_bus(ld.bus, f"load {ld.id!r}")
    for r in net.relays:
        if r.branch not in branch_ids:
            raise NetworkFormatError(
                f"relay {r.id!r} references undefined branch {r.branch!r}")
    for p in net.pairs:
        for rid in (p.main, p.backup):
            if rid not in relay_ids:
                raise NetworkFormatError(
                    f"pair references undefined relay {rid!r}")
        need_bus(p.fault_bus, "pair")
    if net.ufcl is not None:
        if net.ufcl.tie_branch not in branch_ids:
            raise NetworkFormatError(
                f"ufcl references undefined branch {net.ufcl.tie_branch!r}")
        need_bus(net.ufcl.downstream_end, "ufcl")
        if net.ufcl.sizing_fault_bus is not None:
            need_bus(net.ufcl.sizing_fault_bus, "ufcl")


# ---------------------------------------------------------------------------
# validation


def validate(net: Network) -> list[Violation]:
    """Check every type invariant; violations are data, not exceptions."""
    out: list[Violation] = []

    def bad(rule: str, subject: str, message: str):
        out.append(Violation(rule, subject, message))

    def unique(ids: list[str], what: str):
        seen = set()
        for i in ids:
            if i in seen:
                bad("ids unique", i, f"duplicate {what} id")
            seen.add(i)

    unique([b.id for b in net.buses], "bus")
    unique([b.id for b in net.branches], "branch")
    unique([s.id for s in net.sources], "source")
    unique([l.id for l in net.loads], "load")
    unique([r.id for r in net.relays], "relay")

    bus_ids = set(net.bus_ids())
    branch_ids = {br.id for br in net.branches}
    relay_ids = {r.id for r in net.relays}

    for b in net.buses:
        if not b.nominal_voltage > 0:
            bad("nominal_voltage > 0", b.id,
                f"nominal_voltage = {b.nominal_voltage}")

    for br in net.branches:
        if not abs(br.impedance) > 0:
            bad("|impedance| > 0", br.id, "zero branch impedance")
        if br.from_bus == br.to_bus:
            bad("from_bus != to_bus", br.id, "branch loops on one bus")
        for bref in (br.from_bus, br.to_bus):
            if bref not in bus_ids:
                bad("referential integrity", br.id, f"unknown bus {bref!r}")

    for s in net.sources:
        if not abs(s.internal_impedance) > 0:
            bad("|internal_impedance| > 0", s.id, "zero source impedance")
        if not (0.8 < s.emf_pu <= 1.2):
            bad("emf_pu in (0.8, 1.2]", s.id, f"emf_pu = {s.emf_pu}")
        if s.bus not in bus_ids:
            bad("referential integrity", s.id, f"unknown bus {s.bus!r}")

    for l in net.loads:
        if l.impedance.real < 0:
            bad("Re(impedance) >= 0", l.id, "negative load resistance")
        if l.bus not in bus_ids:
            bad("referential integrity", l.id, f"unknown bus {l.bus!r}")

    for r in net.relays:
        if not r.pickup_a > 0:
            bad("pickup_a > 0", r.id, f"pickup_a = {r.pickup_a}")
        if not r.tds > 0:
            bad("tds > 0", r.id, f"tds = {r.tds}")
        if not r.curve.a > 0:
            bad("a > 0", r.id, f"curve a = {r.curve.a}")
        if not r.curve.c > 0:
            bad("c > 0", r.id, f"curve c = {r.curve.c}")
        if r.curve.b < 0:
            bad("b >= 0", r.id, f"curve b = {r.curve.b}")
        if r.branch not in branch_ids:
            bad("referential integrity", r.id, f"unknown branch {r.branch!r}")

    for p in net.pairs:
        subject = f"{p.main}/{p.backup}"
        if p.main == p.backup:
            bad("main != backup", subject, "pair relays identical")
        for rid in (p.main, p.backup):
            if rid not in relay_ids:
                bad("referential integrity", subject,
                    f"unknown relay {rid!r}")
        if p.fault_bus not in bus_ids:
            bad("referential integrity", subject,
                f"unknown bus {p.fault_bus!r}")

    if net.ufcl is not None:
        u = net.ufcl
        if not (u.r_limit > u.r_normal >= 0):
            bad("r_limit > r_normal >= 0", u.tie_branch,
                f"r_limit = {u.r_limit}, r_normal = {u.r_normal}")
        if u.tie_branch not in branch_ids:
            bad("referential integrity", u.tie_branch, "unknown tie branch")
        else:
            tie = net.branch_by_id(u.tie_branch)
            if u.downstream_end not in (tie.from_bus, tie.to_bus):
                bad("downstream_end endpoint of tie_branch", u.downstream_end,
                    f"not an endpoint of {u.tie_branch!r}")

    if not any(s.kind == "infinite_grid" for s in net.sources):
        bad("infinite_grid present", "network", "no infinite_grid source")

    # connectivity over the branch graph
    if net.buses:
        adj: dict[str, set[str]] = {b: set() for b in bus_ids}
        for br in net.branches:
            if br.from_bus in adj and br.to_bus in adj:
                adj[br.from_bus].add(br.to_bus)
                adj[br.to_bus].add(br.from_bus)
        seen = {net.buses[0].id}
        stack = [net.buses[0].id]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        for b in sorted(bus_ids - seen):
            bad("graph connected", b, "bus unreachable from first bus")

    return out


# ---------------------------------------------------------------------------
# per-unit


@dataclass(frozen=True)
class PuNetwork:
    """A network with every impedance on the common power base.

    v_base maps each bus to its zone voltage base (volts line-to-line);
    the impedance maps are per-unit values keyed by element id. The source
    Network is retained for ids, settings and topology.
    """

    net: Network
    s_base_va: float
    v_base: dict[str, float]
    branch_z_pu: dict[str, complex]
    source_z_pu: dict[str, complex]
    load_z_pu: dict[str, complex]

    def z_base(self, bus_id: str) -> float:
        v = self.v_base[bus_id]
        return v * v / self.s_base_va

    def i_base(self, bus_id: str) -> float:
        return self.s_base_va / (math.sqrt(3.0) * self.v_base[bus_id])


def to_per_unit(net: Network) -> PuNetwork:
    """Convert all impedances to per-unit on s_base_va and zone voltages.

    The voltage base of each bus is its nominal voltage. Transformer ohms
    are interpreted on their declared referred_side; any other branch must
    join buses of equal nominal voltage.
    """
    v_base = {b.id: b.nominal_voltage for b in net.buses}

    def z_base(bus_id: str) -> float:
        v = v_base[bus_id]
        return v * v / net.s_base_va

    branch_z = {}
    for br in net.branches:
        if br.kind == "transformer":
            ref_bus = br.from_bus if br.referred_side == "from" else br.to_bus
            branch_z[br.id] = br.impedance / z_base(ref_bus)
        else:
            if v_base[br.from_bus] != v_base[br.to_bus]:
                raise ValueError(
                    f"inconsistent voltage zones across branch {br.id!r}: "
                    f"{v_base[br.from_bus]} V vs {v_base[br.to_bus]} V")
            branch_z[br.id] = br.impedance / z_base(br.from_bus)

    source_z = {s.id: s.internal_impedance / z_base(s.bus)
                for s in net.sources}
    load_z = {l.id: l.impedance / z_base(l.bus) for l in net.loads}

    return PuNetwork(net=net, s_base_va=net.s_base_va, v_base=v_base,
                     branch_z_pu=branch_z, source_z_pu=source_z,
                     load_z_pu=load_z)


def from_per_unit(pu: PuNetwork) -> Network:
    """Inverse of to_per_unit; reproduces the ohmic network."""
    def z_base(bus_id: str) -> float:
        v = pu.v_base[bus_id]
        return v * v / pu.s_base_va

    branches = []
    for br in pu.net.branches:
        if br.kind == "transformer":
            ref_bus = br.from_bus if br.referred_side == "from" else br.to_bus
        else:
            ref_bus = br.from_bus
        branches.append(replace(
            br, impedance=pu.branch_z_pu[br.id] * z_base(ref_bus)))
    sources = [replace(s, internal_impedance=pu.source_z_pu[s.id]
                       * z_base(s.bus)) for s in pu.net.sources]
    loads = [replace(l, impedance=pu.load_z_pu[l.id] * z_base(l.bus))
             for l in pu.net.loads]
    return replace(pu.net, branches=tuple(branches), sources=tuple(sources),
                   loads=tuple(loads))


# ---------------------------------------------------------------------------
# tie partition


def partition_by_tie(net: Network, tie: str) -> tuple[frozenset, frozenset]:
    """Split the bus set in two by removing the tie branch.

    Returns (upstream, downstream) where upstream is the component holding
    the infinite-grid source. Raises if the tie id is unknown or if its
    removal does not split the graph in exactly two.
    """
    tie_branch = None
    for br in net.branches:
        if br.id == tie:
            tie_branch = br
            break
    if tie_branch is None:
        raise ValueError(f"unknown tie branch {tie!r}")

    adj: dict[str, set[str]] = {b.id: set() for b in net.buses}
    for br in net.branches:
        if br.id == tie:
            continue
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)

    def component(start: str) -> frozenset:
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return frozenset(seen)

    side_a = component(tie_branch.from_bus)
    if tie_branch.to_bus in side_a:
        raise ValueError(
            f"tie removal does not disconnect: {tie!r} is inside a loop")
    side_b = component(tie_branch.to_bus)
    if side_a | side_b != set(b.id for b in net.buses):
        raise ValueError(
            f"tie removal leaves more than two components around {tie!r}")

    grid_buses = {s.bus for s in net.sources if s.kind == "infinite_grid"}
    if not grid_buses:
        raise ValueError("network has no infinite_grid source")
    if grid_buses <= side_a:
        return side_a, side_b
    if grid_buses <= side_b:
        return side_b, side_a
    raise ValueError("infinite_grid sources on both sides of the tie")
