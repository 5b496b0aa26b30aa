"""
Netlist Service - validation, JSON loading and the LNA small-signal model factories.
"""

import json
import logging
import math
from typing import List, Tuple, Union

import networkx as nx
from pydantic import ValidationError

from app.errors import InvalidJsonError, InvalidNetlistError, InvalidParamsError
from app.models.design import DesignParams
from app.models.netlist import (
    PASSIVE_KINDS,
    Diagnostic,
    Element,
    MutualCoupling,
    Netlist,
    NoiseSource,
    Port,
)

logger = logging.getLogger(__name__)

# Element kinds whose terminals conduct current between nodes.
_CONDUCTING = PASSIVE_KINDS + ("independent-voltage-source", "independent-current-source", "vccs")

# Thermal-noise attachments allowed per noise kind.
_NOISE_HOSTS = {
    "thermal-resistor": ("resistor",),
    "channel-thermal": ("vccs",),
    "white-current": PASSIVE_KINDS + ("vccs",),
}


def validate(netlist: Netlist) -> List[Diagnostic]:
    """
    Check every structural and value invariant of a netlist.

    Returns:
        Diagnostics; an empty list means the netlist can be analysed.
    """
    diags: List[Diagnostic] = []
    node_set = set(netlist.nodes)

    if len(node_set) != len(netlist.nodes):
        diags.append(Diagnostic(code="duplicate_node", message="node identifiers must be unique"))
    if netlist.ground not in node_set:
        diags.append(Diagnostic(code="missing_ground", message=f"ground node {netlist.ground!r} is not declared",
                                subject=netlist.ground))

    names = [e.name for e in netlist.elements]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        diags.append(Diagnostic(code="duplicate_element", message=f"element name {dup!r} is used twice", subject=dup))

    elements = netlist.element_map()
    for e in netlist.elements:
        for node in e.nodes:
            if node not in node_set:
                diags.append(Diagnostic(code="dangling_terminal",
                                        message=f"{e.name} references unknown node {node!r}", subject=e.name))
        if e.kind in PASSIVE_KINDS:
            if not (math.isfinite(e.value) and e.value > 0):
                diags.append(Diagnostic(code="invalid_value",
                                        message=f"{e.kind} {e.name} must have a positive finite value",
                                        subject=e.name))
        elif not math.isfinite(e.value):
            diags.append(Diagnostic(code="invalid_value", message=f"{e.name} value must be finite", subject=e.name))

    for c in netlist.couplings:
        label = c.name or f"{c.inductor_a}-{c.inductor_b}"
        for ref in (c.inductor_a, c.inductor_b):
            if ref not in elements:
                diags.append(Diagnostic(code="coupling_unknown_inductor",
                                        message=f"coupling {label} references unknown element {ref!r}",
                                        subject=label))
            elif elements[ref].kind != "inductor":
                diags.append(Diagnostic(code="coupling_not_inductor",
                                        message=f"coupling {label} references non-inductor {ref!r}", subject=label))
        if c.inductor_a == c.inductor_b:
            diags.append(Diagnostic(code="coupling_self", message=f"coupling {label} couples an inductor to itself",
                                    subject=label))
        if not (math.isfinite(c.k) and abs(c.k) < 1.0):
            diags.append(Diagnostic(code="coupling_out_of_range",
                                    message=f"coupling {label} has |k| = {abs(c.k):g}, must be below 1",
                                    subject=label))

    port_names = [p.name for p in netlist.ports]
    for dup in sorted({n for n in port_names if port_names.count(n) > 1}):
        diags.append(Diagnostic(code="duplicate_port", message=f"port name {dup!r} is used twice", subject=dup))
    for p in netlist.ports:
        for node in (p.node, netlist.port_ref(p)):
            if node not in node_set:
                diags.append(Diagnostic(code="port_unknown_node",
                                        message=f"port {p.name} references unknown node {node!r}", subject=p.name))
        if p.termination is not None and p.termination not in elements:
            diags.append(Diagnostic(code="port_unknown_termination",
                                    message=f"port {p.name} termination {p.termination!r} is not an element",
                                    subject=p.name))

    for n in netlist.noise_sources:
        if n.element is not None:
            host = elements.get(n.element)
            if host is None:
                diags.append(Diagnostic(code="noise_unknown_element",
                                        message=f"noise source {n.name} references unknown element {n.element!r}",
                                        subject=n.name))
            elif host.kind not in _NOISE_HOSTS[n.kind]:
                diags.append(Diagnostic(code="noise_bad_attachment",
                                        message=f"{n.kind} noise cannot attach to {host.kind} {host.name}",
                                        subject=n.name))
        else:
            for node in n.nodes:
                if node not in node_set:
                    diags.append(Diagnostic(code="noise_unknown_node",
                                            message=f"noise source {n.name} references unknown node {node!r}",
                                            subject=n.name))
        if n.value < 0 or n.temperature <= 0 or n.gamma < 0 or n.eta < 0:
            diags.append(Diagnostic(code="noise_negative_psd",
                                    message=f"noise source {n.name} would have a negative PSD", subject=n.name))

    diags.extend(_connectivity(netlist, node_set))
    return diags


def _connectivity(netlist: Netlist, node_set: set) -> List[Diagnostic]:
    graph = nx.Graph()
    graph.add_nodes_from(node_set)
    referenced = False
    for e in netlist.elements:
        if e.kind not in _CONDUCTING:
            continue
        a, b = e.conducting_nodes
        if a in node_set and b in node_set:
            graph.add_edge(a, b)
        referenced = referenced or netlist.ground in e.nodes
    for p in netlist.ports:
        ref = netlist.port_ref(p)
        if p.node in node_set and ref in node_set:
            graph.add_edge(p.node, ref)
        referenced = referenced or ref == netlist.ground or p.node == netlist.ground

    if netlist.ground not in node_set:
        return []
    diags = []
    if not referenced:
        diags.append(Diagnostic(code="ground_unreferenced",
                                message="no element or port touches the ground node", subject=netlist.ground))
    floating = sorted(node_set - nx.node_connected_component(graph, netlist.ground))
    for node in floating:
        diags.append(Diagnostic(code="floating_node", message=f"node {node!r} has no path to ground", subject=node))
    return diags


def require_valid(netlist: Netlist) -> Netlist:
    diags = validate(netlist)
    if diags:
        logger.warning("netlist rejected with %d diagnostic(s): %s", len(diags), diags[0].message)
        raise InvalidNetlistError(f"netlist has {len(diags)} problem(s): {diags[0].message}", diags)
    return netlist


def load_netlist(text: Union[str, bytes]) -> Netlist:
    """
    Parse the JSON netlist schema.

    Raises:
        InvalidJsonError: malformed JSON, with the byte offset of the failure
        InvalidNetlistError: well-formed JSON that does not match the schema
    """
    raw = text.decode("utf-8") if isinstance(text, bytes) else text
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        offset = len(raw[:exc.pos].encode("utf-8"))
        raise InvalidJsonError(f"invalid JSON at byte offset {offset}: {exc.msg}",
                               {"byte_offset": offset, "line": exc.lineno, "column": exc.colno}) from exc
    try:
        return Netlist.model_validate(data)
    except ValidationError as exc:
        errors = [{"loc": ".".join(str(x) for x in err["loc"]), "msg": err["msg"]} for err in exc.errors()]
        raise InvalidNetlistError("netlist does not match the schema", context={"errors": errors}) from exc


def dump_netlist(netlist: Netlist) -> dict:
    return netlist.model_dump(by_alias=True, exclude_none=True)


# ---------------------------------------------------------------------------
# LNA model factories
# ---------------------------------------------------------------------------

def _require_buildable(p: DesignParams) -> None:
    if p.lg <= 0 or p.ls <= 0:
        raise InvalidParamsError("netlist construction needs lg > 0 and ls > 0",
                                 {"lg": p.lg, "ls": p.ls})
    for name in ("gm1", "gm2", "gamma_noise", "eta"):
        if not math.isfinite(getattr(p, name)):
            raise InvalidParamsError(f"{name} must be finite", {name: getattr(p, name)})


def _source_network(p: DesignParams) -> Tuple[List[Element], List[NoiseSource], str, Tuple[str, ...]]:
    """Thevenin source Vs + Rs feeding node `in`; Rs = 0 drives `in` directly."""
    if p.rs > 0:
        elements = [
            Element(kind="independent-voltage-source", name="VS", nodes=("src", "0"), value=1.0),
            Element(kind="resistor", name="RS", nodes=("src", "in"), value=p.rs),
        ]
        noise = [NoiseSource(name="RS", kind="thermal-resistor", element="RS",
                             temperature=p.temperature, is_input=True)]
        return elements, noise, "RS", ("src", "in")
    elements = [Element(kind="independent-voltage-source", name="VS", nodes=("in", "0"), value=1.0)]
    return elements, [], "VS", ("in",)


def _input_network(p: DesignParams, drain: str) -> Tuple[List[Element], Tuple[MutualCoupling, ...]]:
    elements = [
        Element(kind="inductor", name="LG", nodes=("in", "g"), value=p.lg),
        Element(kind="inductor", name="LS", nodes=("s", "0"), value=p.ls),
        Element(kind="capacitor", name="CGS", nodes=("g", "s"), value=p.cgs),
        Element(kind="vccs", name="GM1", nodes=(drain, "s", "g", "s"), value=p.gm1),
    ]
    couplings = (MutualCoupling(name="K1", inductor_a="LG", inductor_b="LS", k=p.k),) if p.k > 0 else ()
    return elements, couplings


def _channel_noise(name: str, element: str, p: DesignParams) -> NoiseSource:
    return NoiseSource(name=name, kind="channel-thermal", element=element,
                       gamma=p.gamma_noise, eta=p.eta, temperature=p.temperature)


def build_input_model(p: DesignParams) -> Netlist:
    """
    Input small-signal model: source, coupled Lg/Ls, Cgs and gm1 with the
    drain held at AC ground through the 0 V ammeter VOUT.
    """
    _require_buildable(p)
    src_elements, noise, termination, src_nodes = _source_network(p)
    core, couplings = _input_network(p, drain="d")
    elements = src_elements + core + [
        Element(kind="independent-voltage-source", name="VOUT", nodes=("d", "0"), value=0.0),
    ]
    netlist = Netlist(
        nodes=("0",) + src_nodes + ("g", "s", "d"),
        elements=tuple(elements),
        couplings=couplings,
        ports=(Port(name="P1", node="in", termination=termination),),
        noise_sources=tuple(noise + [_channel_noise("M1", "GM1", p)]),
    )
    return require_valid(netlist)


def _first_stage(p: DesignParams, ro_vg: float, include_device_noise: bool):
    if not (math.isfinite(ro_vg) and ro_vg > 0):
        raise InvalidParamsError("ro_vg must be a positive finite resistance", {"ro_vg": ro_vg})
    _require_buildable(p)
    src_elements, noise, termination, src_nodes = _source_network(p)
    core, couplings = _input_network(p, drain="d1")
    elements = src_elements + core + [
        Element(kind="resistor", name="RO1", nodes=("d1", "0"), value=p.ro1),
        Element(kind="capacitor", name="C0", nodes=("d1", "x1"), value=p.c0),
        Element(kind="resistor", name="RVG", nodes=("x1", "0"), value=ro_vg),
        Element(kind="vccs", name="GM2", nodes=("o1", "d1", "0", "d1"), value=p.gm2),
        Element(kind="resistor", name="RO2", nodes=("o1", "d1"), value=p.ro2),
        Element(kind="resistor", name="RD1", nodes=("o1", "0"), value=p.rd),
    ]
    noise = noise + [_channel_noise("M1", "GM1", p)]
    if include_device_noise:
        noise += [
            _channel_noise("M2", "GM2", p),
            NoiseSource(name="MVG", kind="thermal-resistor", element="RVG", temperature=p.temperature),
        ]
    nodes = ("0",) + src_nodes + ("g", "s", "d1", "x1", "o1")
    return nodes, elements, couplings, noise, termination


def build_first_stage_model(p: DesignParams, ro_vg: float, include_device_noise: bool = False) -> Netlist:
    """
    First stage with the gain-control branch: coupled Lg/Ls input, gm1 into
    the cascode node d1 loaded by ro1 and C0 + ro_vg, cascode gm2/ro2 and
    the drain load at the stage output o1.

    Args:
        p: design parameters
        ro_vg: small-signal resistance of the gain-control transistor
        include_device_noise: also attach M2 channel noise and ro_vg thermal noise
    """
    nodes, elements, couplings, noise, termination = _first_stage(p, ro_vg, include_device_noise)
    netlist = Netlist(
        nodes=nodes,
        elements=tuple(elements),
        couplings=couplings,
        ports=(Port(name="P1", node="in", termination=termination), Port(name="P2", node="o1")),
        noise_sources=tuple(noise),
    )
    return require_valid(netlist)


def build_two_stage_model(p: DesignParams, vctrl: float, include_device_noise: bool = False) -> Netlist:
    """
    First stage, interstage tank and DC block, then a cascode common-source
    replica (no gain-control branch, no degeneration) driving port 2.
    """
    from app.services.lna import ro_vg as ro_vg_law

    ro_vg = ro_vg_law(vctrl, p.vg_device)
    nodes, elements, couplings, noise, termination = _first_stage(p, ro_vg, include_device_noise)
    elements = elements + [
        Element(kind="inductor", name="LD1", nodes=("o1", "0"), value=p.ld),
        Element(kind="capacitor", name="CC", nodes=("o1", "g2"), value=p.c_couple),
        Element(kind="capacitor", name="CGS2", nodes=("g2", "0"), value=p.cgs),
        Element(kind="vccs", name="GM3", nodes=("d2", "0", "g2", "0"), value=p.gm1),
        Element(kind="resistor", name="RO3", nodes=("d2", "0"), value=p.ro1),
        Element(kind="vccs", name="GM4", nodes=("o2", "d2", "0", "d2"), value=p.gm2),
        Element(kind="resistor", name="RO4", nodes=("o2", "d2"), value=p.ro2),
        Element(kind="resistor", name="RD2", nodes=("o2", "0"), value=p.rd),
    ]
    if include_device_noise:
        noise = noise + [_channel_noise("M3", "GM3", p), _channel_noise("M4", "GM4", p)]
    netlist = Netlist(
        nodes=nodes + ("g2", "d2", "o2"),
        elements=tuple(elements),
        couplings=couplings,
        ports=(Port(name="P1", node="in", termination=termination), Port(name="P2", node="o2")),
        noise_sources=tuple(noise),
    )
    logger.debug("two-stage model at vctrl=%.3f V: ro_vg=%.4g ohm", vctrl, ro_vg)
    return require_valid(netlist)


def build_gain_model(p: DesignParams, ro_vg: float) -> Netlist:
    """
    Gain small-signal model: ideal gate drive VIN, Ls degeneration without
    coupling or Cgs, ro1 in parallel with C0 + ro_vg, open-circuit cascode.
    V(o1)/V(g) is the inverted stage gain.
    """
    if not (math.isfinite(ro_vg) and ro_vg > 0):
        raise InvalidParamsError("ro_vg must be a positive finite resistance", {"ro_vg": ro_vg})
    source = "s" if p.ls > 0 else "0"
    elements = [Element(kind="independent-voltage-source", name="VIN", nodes=("g", "0"), value=1.0)]
    if p.ls > 0:
        elements.append(Element(kind="inductor", name="LS", nodes=("s", "0"), value=p.ls))
    elements += [
        Element(kind="vccs", name="GM1", nodes=("d1", source, "g", source), value=p.gm1),
        Element(kind="resistor", name="RO1", nodes=("d1", "0"), value=p.ro1),
        Element(kind="capacitor", name="C0", nodes=("d1", "x1"), value=p.c0),
        Element(kind="resistor", name="RVG", nodes=("x1", "0"), value=ro_vg),
        Element(kind="vccs", name="GM2", nodes=("o1", "d1", "0", "d1"), value=p.gm2),
        Element(kind="resistor", name="RO2", nodes=("o1", "d1"), value=p.ro2),
    ]
    nodes = ("0", "g") + (("s",) if p.ls > 0 else ()) + ("d1", "x1", "o1")
    return require_valid(Netlist(nodes=nodes, elements=tuple(elements)))
