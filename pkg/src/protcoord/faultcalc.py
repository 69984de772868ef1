"""Balanced three-phase fault and steady-state solutions.

Single-phase positive-sequence nodal model: every source is an EMF behind
its internal impedance, loads are constant shunt impedances, and a bolted
(or impedance) fault at a bus is solved by superposition on the nodal
admittance matrix. Relay currents come straight out of the post-fault
voltage profile; there is no separate load-flow overlay.

oracle_solve is a deliberately separate second route (explicit EMF nodes,
source-current unknowns, dense inversion) used by the test suite to check
solve_fault. The two share nothing but the per-unit conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netmodel import Network, PuNetwork, to_per_unit

__all__ = [
    "FaultSpec", "FaultResult", "OracleSolution",
    "build_ybus", "injection_vector", "steady_state", "solve_fault",
    "thevenin_at", "oracle_solve",
]

# induction machines present a slightly larger transient impedance than an
# equally rated synchronous unit; the multiplier is configurable per call
INDUCTION_Z_MULT = 1.05

ORACLE_BUS_LIMIT = 12


@dataclass(frozen=True)
class FaultSpec:
    bus: str
    fault_impedance: complex = 0j  # ohms
    type: str = "three_phase"


@dataclass(frozen=True)
class FaultResult:
    """Solved fault: currents in amps on each element's from-side base.

    relay_currents holds magnitudes (relays act on |I|); fault_current_c
    keeps the complex fault current so superposition checks can add
    per-source responses without losing angle.
    """

    fault_bus: str
    fault_current_a: float
    relay_currents: dict[str, float]
    branch_currents: dict[str, complex]
    fault_current_c: complex = 0j


@dataclass(frozen=True)
class OracleSolution:
    fault_bus: str | None
    fault_current_a: float
    fault_current_c: complex
    bus_voltages_pu: dict[str, complex]
    branch_currents: dict[str, complex]


def _tie_branch_id(net: Network) -> str | None:
    if net.ufcl is not None:
        return net.ufcl.tie_branch
    ties = [br.id for br in net.branches if br.kind == "tie"]
    if len(ties) > 1:
        raise ValueError("several tie branches; declare ufcl.tie_branch")
    return ties[0] if ties else None


def _source_z_pu(pu: PuNetwork, induction_z_mult: float) -> dict[str, complex]:
    out = {}
    for s in pu.net.sources:
        z = pu.source_z_pu[s.id]
        if s.kind == "induction_dg":
            z = z * induction_z_mult
        out[s.id] = z
    return out


def build_ybus(pu: PuNetwork, ufcl_state_ohm: float = 0.0,
               induction_z_mult: float = INDUCTION_Z_MULT,
               ) -> tuple[np.ndarray, dict[str, int]]:
    """Assemble the nodal admittance matrix (sources as shunt admittances).

    ufcl_state_ohm is added in series with the tie branch, converted to
    per-unit in the tie's voltage zone. Returns (Y, bus index map).
    """
    index = {b.id: i for i, b in enumerate(pu.net.buses)}
    n = len(index)
    ybus = np.zeros((n, n), dtype=complex)

    tie = _tie_branch_id(pu.net)
    if ufcl_state_ohm != 0.0 and tie is None:
        raise ValueError("no tie branch to carry the limiter resistance")

    for br in pu.net.branches:
        z = pu.branch_z_pu[br.id]
        if br.id == tie and ufcl_state_ohm != 0.0:
            z = z + ufcl_state_ohm / pu.z_base(br.from_bus)
        y = 1.0 / z
        f, t = index[br.from_bus], index[br.to_bus]
        ybus[f, f] += y
        ybus[t, t] += y
        ybus[f, t] -= y
        ybus[t, f] -= y

    for s in pu.net.sources:
        z = pu.source_z_pu[s.id]
        if s.kind == "induction_dg":
            z = z * induction_z_mult
        ybus[index[s.bus], index[s.bus]] += 1.0 / z

    for l in pu.net.loads:
        ybus[index[l.bus], index[l.bus]] += 1.0 / pu.load_z_pu[l.id]

    return ybus, index


def injection_vector(pu: PuNetwork, index: dict[str, int],
                     induction_z_mult: float = INDUCTION_Z_MULT,
                     ) -> np.ndarray:
    """Norton injections of all sources (emf over internal impedance)."""
    inj = np.zeros(len(index), dtype=complex)
    z_eff = _source_z_pu(pu, induction_z_mult)
    for s in pu.net.sources:
        inj[index[s.bus]] += s.emf_pu / z_eff[s.id]
    return inj


def _branch_currents_a(pu: PuNetwork, index: dict[str, int],
                       v: np.ndarray, ufcl_state_ohm: float,
                       tie: str | None) -> dict[str, complex]:
    out = {}
    for br in pu.net.branches:
        z = pu.branch_z_pu[br.id]
        if br.id == tie and ufcl_state_ohm != 0.0:
            z = z + ufcl_state_ohm / pu.z_base(br.from_bus)
        i_pu = (v[index[br.from_bus]] - v[index[br.to_bus]]) / z
        out[br.id] = complex(i_pu * pu.i_base(br.from_bus))
    return out


def _relay_currents(net: Network,
                    branch_currents: dict[str, complex]) -> dict[str, float]:
    # orientation marks the tripping direction; overcurrent elements act on
    # the magnitude regardless
    return {r.id: float(abs(branch_currents[r.branch])) for r in net.relays}


def steady_state(net: Network, ufcl_state_ohm: float = 0.0,
                 induction_z_mult: float = INDUCTION_Z_MULT,
                 ) -> dict[str, complex]:
    """Branch currents (complex amps, from-side base) with no fault applied."""
    pu = to_per_unit(net)
    ybus, index = build_ybus(pu, ufcl_state_ohm, induction_z_mult)
    v = np.linalg.solve(ybus, injection_vector(pu, index, induction_z_mult))
    return _branch_currents_a(pu, index, v, ufcl_state_ohm,
                              _tie_branch_id(net))


def solve_fault(net: Network, fault: FaultSpec, ufcl_state_ohm: float = 0.0,
                induction_z_mult: float = INDUCTION_Z_MULT) -> FaultResult:
    """Solve one bolted or impedance fault by Thevenin superposition.

    The prefault profile and the Thevenin column come from the same nodal
    matrix, so load and DG contributions are inherently superposed; the
    post-fault voltages feed every reported current.
    """
    if fault.type != "three_phase":
        raise ValueError(f"only three_phase faults are supported, "
                         f"not {fault.type!r}")
    pu = to_per_unit(net)
    ybus, index = build_ybus(pu, ufcl_state_ohm, induction_z_mult)
    if fault.bus not in index:
        raise ValueError(f"unknown fault bus {fault.bus!r}")
    k = index[fault.bus]

    v_pre = np.linalg.solve(ybus, injection_vector(pu, index,
                                                   induction_z_mult))
    unit = np.zeros(len(index), dtype=complex)
    unit[k] = 1.0
    z_col = np.linalg.solve(ybus, unit)

    zf_pu = fault.fault_impedance / pu.z_base(fault.bus)
    i_f = v_pre[k] / (z_col[k] + zf_pu)
    v_post = v_pre - i_f * z_col

    tie = _tie_branch_id(net)
    branch_currents = _branch_currents_a(pu, index, v_post, ufcl_state_ohm,
                                         tie)
    i_f_amps = complex(i_f * pu.i_base(fault.bus))
    return FaultResult(
        fault_bus=fault.bus,
        fault_current_a=abs(i_f_amps),
        relay_currents=_relay_currents(net, branch_currents),
        branch_currents=branch_currents,
        fault_current_c=i_f_amps)


def thevenin_at(pu: PuNetwork, bus: str, ufcl_state_ohm: float = 0.0,
                induction_z_mult: float = INDUCTION_Z_MULT) -> complex:
    """Driving-point impedance at a bus in per-unit (EMFs shorted)."""
    ybus, index = build_ybus(pu, ufcl_state_ohm, induction_z_mult)
    if bus not in index:
        raise ValueError(f"unknown bus {bus!r}")
    unit = np.zeros(len(index), dtype=complex)
    unit[index[bus]] = 1.0
    return complex(np.linalg.solve(ybus, unit)[index[bus]])


def oracle_solve(net: Network, fault: FaultSpec | None,
                 ufcl_state_ohm: float = 0.0,
                 induction_z_mult: float = INDUCTION_Z_MULT,
                 ) -> OracleSolution:
    """Second, independent solution route for small networks.

    Formulates the circuit with an explicit EMF node per source and the
    source currents as unknowns; a bolted fault is a zero-volt constraint
    row whose current unknown is the fault current. Solved by dense
    inversion. Kept small and slow on purpose: it exists to disagree with
    solve_fault if either route is wrong.
    """
    if len(net.buses) > ORACLE_BUS_LIMIT:
        raise ValueError(
            f"oracle_solve handles at most {ORACLE_BUS_LIMIT} buses")
    if fault is not None and fault.type != "three_phase":
        raise ValueError(f"only three_phase faults are supported, "
                         f"not {fault.type!r}")

    pu = to_per_unit(net)
    bus_ix = {b.id: i for i, b in enumerate(net.buses)}
    n_bus = len(net.buses)
    n_src = len(net.sources)
    # unknowns: bus voltages, source internal-node voltages, source
    # currents, then the fault current when a bolted row is appended
    n_node = n_bus + n_src
    bolted = fault is not None and fault.fault_impedance == 0
    dim = n_node + n_src + (1 if bolted else 0)

    a = np.zeros((dim, dim), dtype=complex)
    rhs = np.zeros(dim, dtype=complex)

    tie = _tie_branch_id(net)

    def stamp(i: int, j: int, y: complex) -> None:
        a[i, i] += y
        a[j, j] += y
        a[i, j] -= y
        a[j, i] -= y

    def stamp_shunt(i: int, y: complex) -> None:
        a[i, i] += y

    for br in net.branches:
        z = pu.branch_z_pu[br.id]
        if br.id == tie and ufcl_state_ohm != 0.0:
            z = z + ufcl_state_ohm / pu.z_base(br.from_bus)
        stamp(bus_ix[br.from_bus], bus_ix[br.to_bus], 1.0 / z)

    for l in net.loads:
        stamp_shunt(bus_ix[l.bus], 1.0 / pu.load_z_pu[l.id])

    for si, s in enumerate(net.sources):
        z = pu.source_z_pu[s.id]
        if s.kind == "induction_dg":
            z = z * induction_z_mult
        node = n_bus + si
        stamp(node, bus_ix[s.bus], 1.0 / z)
        # ideal EMF between the internal node and ground; its current is
        # unknown number n_node + si
        cur = n_node + si
        a[node, cur] += 1.0
        a[cur, node] += 1.0
        rhs[cur] = s.emf_pu

    if fault is not None and fault.bus not in bus_ix:
        raise ValueError(f"unknown fault bus {fault.bus!r}")

    i_fault_pu = 0j
    if fault is not None and not bolted:
        zf = fault.fault_impedance / pu.z_base(fault.bus)
        stamp_shunt(bus_ix[fault.bus], 1.0 / zf)
    if bolted:
        k = bus_ix[fault.bus]
        cur = dim - 1
        a[k, cur] += 1.0
        a[cur, k] += 1.0
        rhs[cur] = 0.0

    x = np.linalg.inv(a) @ rhs

    if bolted:
        i_fault_pu = x[dim - 1]
    elif fault is not None:
        zf = fault.fault_impedance / pu.z_base(fault.bus)
        i_fault_pu = x[bus_ix[fault.bus]] / zf

    voltages = {b.id: complex(x[bus_ix[b.id]]) for b in net.buses}
    branch_currents = {}
    for br in net.branches:
        z = pu.branch_z_pu[br.id]
        if br.id == tie and ufcl_state_ohm != 0.0:
            z = z + ufcl_state_ohm / pu.z_base(br.from_bus)
        i_pu = (x[bus_ix[br.from_bus]] - x[bus_ix[br.to_bus]]) / z
        branch_currents[br.id] = complex(i_pu * pu.i_base(br.from_bus))

    i_fault_a = 0j
    if fault is not None:
        i_fault_a = complex(i_fault_pu * pu.i_base(fault.bus))
    return OracleSolution(
        fault_bus=None if fault is None else fault.bus,
        fault_current_a=abs(i_fault_a),
        fault_current_c=i_fault_a,
        bus_voltages_pu=voltages,
        branch_currents=branch_currents)
