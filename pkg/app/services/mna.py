"""
MNA Service - complex AC modified nodal analysis and network parameters.

The system matrix is A(s) = G + s*C. Unknowns are the non-ground node
voltages followed by one branch current per voltage source and inductor.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from app.config import config
from app.errors import InvalidNetlistError, InvalidParamsError, PortCountError, SingularSystemError
from app.models.netlist import Element, Netlist
from app.models.network import AcSolution, TwoPort

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12

# Diagnostics that surface as a singular system rather than a rejected netlist.
_SOLVER_DIAGNOSTICS = {"floating_node", "ground_unreferenced"}


@dataclass(frozen=True, eq=False)
class MnaSystem:
    """Frequency-independent stamps of one netlist. Arrays are never mutated after assembly."""
    netlist: Netlist
    node_index: Dict[str, int]
    branch_index: Dict[str, int]
    labels: Tuple[str, ...]
    g: np.ndarray
    c: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def matrix(self, frequency: float) -> np.ndarray:
        return self.g + (2j * math.pi * frequency) * self.c

    def rhs(self, columns: int = 1) -> np.ndarray:
        return np.zeros((self.size, columns), dtype=complex)

    def inject(self, rhs: np.ndarray, node_from: str, node_to: str, value: complex, column: int = 0) -> None:
        """Current source driving `value` from node_from through itself into node_to."""
        i = self.node_index.get(node_from)
        j = self.node_index.get(node_to)
        if i is not None:
            rhs[i, column] -= value
        if j is not None:
            rhs[j, column] += value

    def voltage(self, x: np.ndarray, node: str) -> np.ndarray:
        idx = self.node_index.get(node)
        if idx is None:
            return np.zeros(x.shape[1:], dtype=complex) if x.ndim > 1 else np.complex128(0)
        return x[idx]

    def solve(self, frequency: float, rhs: np.ndarray) -> np.ndarray:
        """
        Solve A(s) x = rhs after row/column equilibration.

        Raises:
            SingularSystemError: structurally singular or condition above CONDITION_LIMIT
        """
        a = self.matrix(frequency)
        row = np.max(np.abs(a), axis=1)
        if np.any(row == 0):
            self._singular(frequency, np.flatnonzero(row == 0), math.inf)
        dr = 1.0 / row
        a = a * dr[:, None]
        col = np.max(np.abs(a), axis=0)
        if np.any(col == 0):
            self._singular(frequency, np.flatnonzero(col == 0), math.inf)
        dc = 1.0 / col
        a = a * dc[None, :]

        _, sv, vh = np.linalg.svd(a)
        cond = math.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
        if cond > CONDITION_LIMIT:
            weight = np.abs(vh[-1])
            self._singular(frequency, np.flatnonzero(weight > 0.1 * weight.max()), cond)

        scale = dr if rhs.ndim == 1 else dr[:, None]
        y = scipy.linalg.solve(a, rhs * scale, check_finite=False)
        logger.debug("solved %d unknowns at %.6g Hz, cond=%.3g", self.size, frequency, cond)
        return y * (dc if rhs.ndim == 1 else dc[:, None])

    def _singular(self, frequency: float, indices, cond: float):
        offending = [self.labels[i] for i in indices]
        logger.warning("singular MNA system at %.6g Hz involving %s", frequency, offending)
        raise SingularSystemError(
            f"singular system at {frequency:.6g} Hz involving {', '.join(sorted(offending))}",
            offending,
            {"frequency": frequency, "condition": cond if math.isfinite(cond) else None},
        )


def check_frequency(frequency: float) -> float:
    if not (isinstance(frequency, (int, float, np.floating)) and math.isfinite(frequency) and frequency > 0):
        raise InvalidParamsError("AC analysis needs a finite frequency above 0 Hz", {"frequency": frequency})
    return float(frequency)


def _needs_branch(e: Element) -> bool:
    return e.kind in ("inductor", "independent-voltage-source")


@lru_cache(maxsize=256)
def assemble(netlist: Netlist) -> MnaSystem:
    """Stamp G and C for a netlist; cached because every sweep point reuses them."""
    from app.services.netlist import validate

    blocking = [d for d in validate(netlist) if d.code not in _SOLVER_DIAGNOSTICS]
    if blocking:
        raise InvalidNetlistError(f"netlist has {len(blocking)} problem(s): {blocking[0].message}", blocking)

    node_index = {n: i for i, n in enumerate(n for n in netlist.nodes if n != netlist.ground)}
    labels: List[str] = list(node_index)
    branch_index: Dict[str, int] = {}
    for e in netlist.elements:
        if _needs_branch(e):
            branch_index[e.name] = len(labels)
            labels.append(f"I({e.name})")

    n = len(labels)
    g = np.zeros((n, n), dtype=complex)
    c = np.zeros((n, n), dtype=complex)

    def stamp(m: np.ndarray, r: Optional[int], col: Optional[int], v: float) -> None:
        if r is not None and col is not None:
            m[r, col] += v

    for e in netlist.elements:
        a = node_index.get(e.nodes[0])
        b = node_index.get(e.nodes[1])
        if e.kind in ("resistor", "capacitor"):
            m = g if e.kind == "resistor" else c
            y = 1.0 / e.value if e.kind == "resistor" else e.value
            stamp(m, a, a, y)
            stamp(m, b, b, y)
            stamp(m, a, b, -y)
            stamp(m, b, a, -y)
        elif _needs_branch(e):
            k = branch_index[e.name]
            stamp(g, a, k, 1.0)
            stamp(g, b, k, -1.0)
            stamp(g, k, a, 1.0)
            stamp(g, k, b, -1.0)
            if e.kind == "inductor":
                c[k, k] -= e.value
        elif e.kind == "vccs":
            cp = node_index.get(e.nodes[2])
            cn = node_index.get(e.nodes[3])
            stamp(g, a, cp, e.value)
            stamp(g, a, cn, -e.value)
            stamp(g, b, cp, -e.value)
            stamp(g, b, cn, e.value)
        # independent current sources only enter the right-hand side

    elements = netlist.element_map()
    for cpl in netlist.couplings:
        la, lb = elements[cpl.inductor_a], elements[cpl.inductor_b]
        m = cpl.k * math.sqrt(la.value * lb.value)
        ka, kb = branch_index[la.name], branch_index[lb.name]
        c[ka, kb] -= m
        c[kb, ka] -= m

    logger.debug("assembled MNA system: %d nodes, %d branches", len(node_index), len(branch_index))
    return MnaSystem(netlist, node_index, branch_index, tuple(labels), g, c)


def _solution(system: MnaSystem, frequency: float, x: np.ndarray, rhs: np.ndarray) -> AcSolution:
    netlist = system.netlist
    voltages = {n: complex(system.voltage(x, n)) for n in netlist.nodes}
    voltages[netlist.ground] = 0j
    currents = {name: complex(x[k]) for name, k in system.branch_index.items()}
    residual_vec = system.matrix(frequency) @ x - rhs
    node_rows = list(system.node_index.values())
    scale = max([abs(i) for i in currents.values()] + [float(np.max(np.abs(rhs)))] + [1e-300])
    residual = float(np.max(np.abs(residual_vec[node_rows]))) / scale if node_rows else 0.0
    return AcSolution(frequency=frequency, node_voltages=voltages, branch_currents=currents, residual=residual)


def solve_ac(netlist: Netlist, frequency: float, excitation: str, amplitude: complex = 1.0) -> AcSolution:
    """
    Solve the circuit with only `excitation` active and every other
    independent source zeroed (voltage sources shorted, current sources open).

    Args:
        netlist: circuit to solve
        frequency: analysis frequency in Hz, strictly positive
        excitation: name of an independent voltage or current source
        amplitude: source amplitude, unit by default

    Returns:
        AcSolution with node voltages and branch currents
    """
    frequency = check_frequency(frequency)
    system = assemble(netlist)
    try:
        source = netlist.element(excitation)
    except KeyError:
        raise InvalidParamsError(f"unknown excitation {excitation!r}", {"excitation": excitation}) from None
    rhs = system.rhs()[:, 0]
    if source.kind == "independent-voltage-source":
        rhs[system.branch_index[source.name]] = amplitude
    elif source.kind == "independent-current-source":
        col = rhs[:, None]
        system.inject(col, source.nodes[0], source.nodes[1], amplitude)
    else:
        raise InvalidParamsError(f"{excitation!r} is a {source.kind}, not an independent source",
                                 {"excitation": excitation})
    x = system.solve(frequency, rhs)
    return _solution(system, frequency, x, rhs)


# ---------------------------------------------------------------------------
# Network parameters
# ---------------------------------------------------------------------------

def network_view(netlist: Netlist) -> Netlist:
    """
    The device under test seen by the ports: termination elements removed and
    nodes left without any attachment pruned. Remaining sources stay zeroed.
    """
    terminations = [p.termination for p in netlist.ports if p.termination]
    if terminations:
        ports = tuple(p.model_copy(update={"termination": None}) for p in netlist.ports)
        view = netlist.without_elements(terminations).model_copy(update={"ports": ports})
    else:
        view = netlist
    used = {netlist.ground}
    for e in view.elements:
        used.update(e.nodes)
    for p in view.ports:
        used.update((p.node, view.port_ref(p)))
    if used.issuperset(view.nodes):
        return view
    return view.model_copy(update={"nodes": tuple(n for n in view.nodes if n in used)})


def _check_ports(netlist: Netlist) -> int:
    n = len(netlist.ports)
    if n not in (1, 2):
        raise PortCountError(f"network parameters need 1 or 2 ports, netlist has {n}", {"ports": n})
    return n


@lru_cache(maxsize=128)
def _terminated(view: Netlist, z0: float) -> Netlist:
    loads = [Element(kind="resistor", name=f"__z0_{p.name}", nodes=(p.node, view.port_ref(p)), value=z0)
             for p in view.ports]
    return view.with_elements(loads)


@lru_cache(maxsize=128)
def _shorted(view: Netlist) -> Netlist:
    shorts = [Element(kind="independent-voltage-source", name=f"__short_{p.name}",
                      nodes=(p.node, view.port_ref(p)), value=0.0) for p in view.ports]
    return view.with_elements(shorts)


def _z_matrix(view: Netlist, frequency: float) -> np.ndarray:
    system = assemble(view)
    rhs = system.rhs(len(view.ports))
    for j, p in enumerate(view.ports):
        system.inject(rhs, view.port_ref(p), p.node, 1.0, column=j)
    x = system.solve(frequency, rhs)
    return np.array([system.voltage(x, p.node) - system.voltage(x, view.port_ref(p)) for p in view.ports])


def _y_matrix(view: Netlist, frequency: float) -> np.ndarray:
    shorted = _shorted(view)
    system = assemble(shorted)
    rhs = system.rhs(len(view.ports))
    rows = [system.branch_index[f"__short_{p.name}"] for p in view.ports]
    for j, k in enumerate(rows):
        rhs[k, j] = 1.0
    x = system.solve(frequency, rhs)
    return -np.array([x[k] for k in rows])


def _s_matrix(view: Netlist, frequency: float, z0: float) -> np.ndarray:
    terminated = _terminated(view, z0)
    system = assemble(terminated)
    rhs = system.rhs(len(view.ports))
    for j, p in enumerate(view.ports):
        system.inject(rhs, view.port_ref(p), p.node, 1.0 / z0, column=j)
    x = system.solve(frequency, rhs)
    v = np.array([system.voltage(x, p.node) - system.voltage(x, view.port_ref(p)) for p in view.ports])
    return 2.0 * v - np.eye(len(view.ports))


def port_parameters(netlist: Netlist, frequency: float, kind: str = "S", z0: Optional[float] = None) -> TwoPort:
    """
    Network parameters of the netlist's ports at one frequency.

    Z drives each port with a unit current, Y shorts every port and drives one
    with a unit voltage, S loads every port with z0 and drives one through it.
    Termination elements named by the ports are removed first.

    Raises:
        PortCountError: the netlist has neither 1 nor 2 ports
        SingularSystemError: the requested representation does not exist
    """
    frequency = check_frequency(frequency)
    _check_ports(netlist)
    z0 = float(config.DEFAULT_Z0 if z0 is None else z0)
    if kind not in ("S", "Y", "Z"):
        raise InvalidParamsError(f"unknown parameter kind {kind!r}", {"kind": kind})
    if not (math.isfinite(z0) and z0 > 0):
        raise InvalidParamsError("reference impedance must be positive", {"z0": z0})
    view = network_view(netlist)
    if kind == "Z":
        return TwoPort("Z", _z_matrix(view, frequency))
    if kind == "Y":
        return TwoPort("Y", _y_matrix(view, frequency))
    return TwoPort("S", _s_matrix(view, frequency, z0), z0)


def input_impedance(netlist: Netlist, frequency: float) -> complex:
    """Port-1 driving-point impedance with every other port open."""
    return complex(port_parameters(netlist, frequency, "Z")[0, 0])


def _checked_solve(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(a)
    if not math.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(f"{what} is singular (condition {cond:.3g})", [what],
                                  {"condition": cond if math.isfinite(cond) else None})
    return np.linalg.solve(a, b)


def _right_divide(num: np.ndarray, den: np.ndarray, what: str) -> np.ndarray:
    """num @ inv(den) without forming the inverse."""
    return _checked_solve(den.T, num.T, what).T


def convert(tp: TwoPort, target_kind: str, z0: Optional[float] = None) -> TwoPort:
    """
    Bilinear conversion between S, Y and Z for equal real reference impedances.
    Converting S to S with a different z0 renormalises through Z.
    """
    if target_kind not in ("S", "Y", "Z"):
        raise InvalidParamsError(f"unknown parameter kind {target_kind!r}", {"kind": target_kind})
    if z0 is None:
        z0 = tp.z0 if tp.z0 is not None else config.DEFAULT_Z0
    if not (math.isfinite(z0) and z0 > 0):
        raise InvalidParamsError("reference impedance must be positive", {"z0": z0})
    if tp.kind == target_kind and (tp.kind != "S" or tp.z0 == z0):
        return tp

    eye = np.eye(tp.nports, dtype=complex)
    m = tp.matrix
    if tp.kind == "S":
        if target_kind == "Y":
            return TwoPort("Y", _right_divide(eye - m, eye + m, "I + S") / tp.z0)
        zm = tp.z0 * _right_divide(eye + m, eye - m, "I - S")
        return convert(TwoPort("Z", zm), target_kind, z0)
    if tp.kind == "Y":
        if target_kind == "S":
            return TwoPort("S", _right_divide(eye - z0 * m, eye + z0 * m, "I + z0*Y"), z0)
        return TwoPort("Z", _checked_solve(m, eye, "Y"))
    if target_kind == "S":
        return TwoPort("S", _right_divide(m - z0 * eye, m + z0 * eye, "Z + z0*I"), z0)
    return TwoPort("Y", _checked_solve(m, eye, "Z"))
