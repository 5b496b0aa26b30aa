"""
Pydantic models for the linear AC circuit description.
Netlists are frozen after construction and safe to share between threads.
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

ElementKind = Literal[
    "resistor",
    "capacitor",
    "inductor",
    "vccs",
    "independent-voltage-source",
    "independent-current-source",
]

NoiseKind = Literal["white-current", "thermal-resistor", "channel-thermal"]

PASSIVE_KINDS = ("resistor", "capacitor", "inductor")
SOURCE_KINDS = ("independent-voltage-source", "independent-current-source")


class Element(BaseModel):
    """
    A two-terminal element, or a VCCS with (out+, out-, ctrl+, ctrl-) terminals.
    The VCCS current gm*(V(ctrl+) - V(ctrl-)) flows from out+ through the
    element to out-; an independent current source likewise drives its value
    from the first terminal to the second through itself.
    """
    model_config = ConfigDict(frozen=True)

    kind: ElementKind = Field(..., description="Element type")
    name: str = Field(..., min_length=1, description="Unique element identifier")
    nodes: Tuple[str, ...] = Field(..., description="Terminal node identifiers")
    value: float = Field(..., description="Ohms, farads, henries, siemens, volts or amperes")

    @model_validator(mode="after")
    def _terminal_count(self):
        expected = 4 if self.kind == "vccs" else 2
        if len(self.nodes) != expected:
            raise ValueError(f"{self.kind} {self.name!r} needs {expected} terminals, got {len(self.nodes)}")
        return self

    @property
    def conducting_nodes(self) -> Tuple[str, str]:
        """Terminals that carry the element current (output pair for a VCCS)."""
        return self.nodes[0], self.nodes[1]


class MutualCoupling(BaseModel):
    """Magnetic coupling between two inductors; dots sit on each inductor's first terminal."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = Field(default="", description="Optional identifier")
    inductor_a: str = Field(..., alias="a", description="First inductor element name")
    inductor_b: str = Field(..., alias="b", description="Second inductor element name")
    k: float = Field(..., description="Coupling coefficient")


class Port(BaseModel):
    """
    Ground-referenced port. `termination` names the bench element (source or
    load resistor) that is stripped before network parameters are extracted.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    node: str = Field(...)
    ref: Optional[str] = Field(default=None, description="Reference node, ground when omitted")
    termination: Optional[str] = Field(default=None)


class NoiseSource(BaseModel):
    """
    Uncorrelated noise current source, either attached to an element
    (resistor or VCCS output pair) or injected between two nodes.
    """
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    kind: NoiseKind = Field(...)
    element: Optional[str] = Field(default=None, description="Attached element")
    nodes: Optional[Tuple[str, str]] = Field(default=None, description="Standalone injection pair")
    value: float = Field(default=0.0, description="White-current PSD in A^2/Hz")
    temperature: float = Field(default=290.0, description="Kelvin")
    gamma: float = Field(default=1.0, description="Excess channel thermal noise coefficient")
    eta: float = Field(default=1.0, description="gms/gm ratio")
    is_input: bool = Field(default=False, description="Marks the input-source noise")

    @model_validator(mode="after")
    def _placement(self):
        if (self.element is None) == (self.nodes is None):
            raise ValueError(f"noise source {self.name!r} needs exactly one of 'element' or 'nodes'")
        if self.kind != "white-current" and self.element is None:
            raise ValueError(f"{self.kind} noise source {self.name!r} must be attached to an element")
        return self


class OutputSpec(BaseModel):
    """Observed quantity for noise analysis."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["voltage", "branch_current", "short_circuit_current"] = "short_circuit_current"
    node: Optional[str] = None
    ref: Optional[str] = None
    element: Optional[str] = None

    @model_validator(mode="after")
    def _target(self):
        if self.kind == "branch_current" and not self.element:
            raise ValueError("branch_current output needs an element")
        if self.kind != "branch_current" and not self.node:
            raise ValueError(f"{self.kind} output needs a node")
        return self


class Diagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    message: str
    subject: str = ""


class Netlist(BaseModel):
    """Linear AC circuit: nodes, elements, couplings, ports and noise sources."""
    model_config = ConfigDict(frozen=True)

    nodes: Tuple[str, ...] = Field(...)
    ground: str = Field(default="0")
    elements: Tuple[Element, ...] = Field(default=())
    couplings: Tuple[MutualCoupling, ...] = Field(default=())
    ports: Tuple[Port, ...] = Field(default=())
    noise_sources: Tuple[NoiseSource, ...] = Field(default=())

    def element_map(self) -> Dict[str, Element]:
        return {e.name: e for e in self.elements}

    def element(self, name: str) -> Element:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    def port_ref(self, port: Port) -> str:
        return port.ref if port.ref is not None else self.ground

    def without_couplings(self) -> "Netlist":
        return self.model_copy(update={"couplings": ()})

    def with_coupling(self, coupling: MutualCoupling) -> "Netlist":
        kept = tuple(c for c in self.couplings if c.name != coupling.name or not c.name)
        return self.model_copy(update={"couplings": kept + (coupling,)})

    def without_elements(self, names: List[str]) -> "Netlist":
        """Drop elements together with the couplings and noise attached to them."""
        drop = set(names)
        return self.model_copy(update={
            "elements": tuple(e for e in self.elements if e.name not in drop),
            "couplings": tuple(c for c in self.couplings
                               if c.inductor_a not in drop and c.inductor_b not in drop),
            "noise_sources": tuple(n for n in self.noise_sources if n.element not in drop),
        })

    def with_elements(self, extra: List[Element], new_nodes: Tuple[str, ...] = ()) -> "Netlist":
        nodes = self.nodes + tuple(n for n in new_nodes if n not in self.nodes)
        return self.model_copy(update={"nodes": nodes, "elements": self.elements + tuple(extra)})
