"""
Noise Service - superposition noise analysis of uncorrelated current sources.
"""

import logging
import math
from typing import Callable, Tuple

import numpy as np
from scipy.constants import k as BOLTZMANN

from app.errors import InvalidParamsError, NoiseAnalysisError
from app.models.netlist import Element, Netlist, NoiseSource, OutputSpec
from app.models.network import NoiseReport
from app.services.mna import MnaSystem, assemble, check_frequency

logger = logging.getLogger(__name__)

_AMMETER = "__iout"


def psd(source: NoiseSource, netlist: Netlist) -> float:
    """One-sided current PSD of a source in A^2/Hz."""
    if source.kind == "white-current":
        return source.value
    element = netlist.element(source.element)
    kt4 = 4.0 * BOLTZMANN * source.temperature
    if source.kind == "thermal-resistor":
        return kt4 / element.value
    return kt4 * source.gamma * source.eta * abs(element.value)


def _find_source(netlist: Netlist, name: str) -> NoiseSource:
    for s in netlist.noise_sources:
        if s.name == name:
            return s
    raise InvalidParamsError(f"unknown noise source {name!r}", {"source": name})


def _injection(netlist: Netlist, source: NoiseSource) -> Tuple[str, str]:
    if source.nodes is not None:
        return source.nodes
    return netlist.element(source.element).conducting_nodes


def _observation(netlist: Netlist, output: OutputSpec) -> Tuple[Netlist, Callable[[MnaSystem, np.ndarray], np.ndarray]]:
    """Netlist to solve plus a reader that extracts the observed quantity."""
    if output.kind == "branch_current":
        element = netlist.element_map().get(output.element)
        if element is None or element.kind not in ("inductor", "independent-voltage-source"):
            raise InvalidParamsError("branch_current output needs an inductor or voltage source",
                                     {"element": output.element})
        return netlist, lambda system, x: x[system.branch_index[output.element]]

    for node in (output.node, output.ref):
        if node is not None and node not in netlist.nodes:
            raise InvalidParamsError(f"output node {node!r} is not in the netlist", {"node": node})
    if output.kind == "voltage":
        ref = output.ref if output.ref is not None else netlist.ground
        return netlist, lambda system, x: system.voltage(x, output.node) - system.voltage(x, ref)

    ammeter = Element(kind="independent-voltage-source", name=_AMMETER,
                      nodes=(output.node, netlist.ground), value=0.0)
    return netlist.with_elements([ammeter]), lambda system, x: x[system.branch_index[_AMMETER]]


def _transfers(netlist: Netlist, sources, output: OutputSpec, frequency: float) -> np.ndarray:
    observed, read = _observation(netlist, output)
    system = assemble(observed)
    rhs = system.rhs(len(sources))
    for j, source in enumerate(sources):
        a, b = _injection(netlist, source)
        system.inject(rhs, a, b, 1.0, column=j)
    x = system.solve(frequency, rhs)
    return np.atleast_1d(read(system, x))


def noise_transfer(netlist: Netlist, source: str, output: OutputSpec, frequency: float) -> complex:
    """
    Transfer from a unit current standing in for noise source `source` to the
    observed output, with every independent source zeroed.

    The stand-in flows from the first injection node through the source into
    the second; a VCCS host injects across its output pair.
    """
    frequency = check_frequency(frequency)
    src = _find_source(netlist, source)
    return complex(_transfers(netlist, [src], output, frequency)[0])


def output_noise(netlist: Netlist, output: OutputSpec, frequency: float) -> NoiseReport:
    """
    Total output noise and noise factor by superposition.

    Raises:
        NoiseAnalysisError: no noise sources, none marked as input, or a
            zero input-source contribution
    """
    frequency = check_frequency(frequency)
    sources = list(netlist.noise_sources)
    if not sources:
        raise NoiseAnalysisError("netlist has no noise sources")
    if not any(s.is_input for s in sources):
        raise NoiseAnalysisError("no noise source is marked as the input source",
                                 {"sources": [s.name for s in sources]})

    h = _transfers(netlist, sources, output, frequency)
    parts = [psd(s, netlist) * float(abs(t) ** 2) for s, t in zip(sources, h)]
    contributions = {s.name: v for s, v in zip(sources, parts)}
    total = math.fsum(parts)
    source_part = math.fsum(v for s, v in zip(sources, parts) if s.is_input)
    if source_part <= 0.0:
        logger.warning("input-source noise does not reach the output at %.6g Hz", frequency)
        raise NoiseAnalysisError("input-source noise contribution is zero at the output",
                                 {"frequency": frequency})

    factor = total / source_part
    return NoiseReport(
        frequency=frequency,
        contributions=contributions,
        total_output_psd=total,
        source_contribution=source_part,
        noise_factor=factor,
        noise_figure_db=10.0 * math.log10(factor),
    )
