"""Tests for the AC MNA engine and network-parameter extraction."""

import math

import numpy as np
import pytest

from app.errors import InvalidParamsError, PortCountError, SingularSystemError
from app.models.design import DesignParams
from app.models.netlist import Element, MutualCoupling, Netlist, Port
from app.models.network import TwoPort
from app.services.lna import input_impedance_cf
from app.services.mna import convert, input_impedance, network_view, port_parameters, solve_ac
from app.services.netlist import build_first_stage_model, build_input_model, build_two_stage_model, validate
from app.services.reference_design import reference_design


def resistor(name, a, b, value):
    return Element(kind="resistor", name=name, nodes=(a, b), value=value)


def two_port(*elements, nodes=("0", "a", "b")) -> Netlist:
    return Netlist(nodes=nodes, elements=tuple(elements),
                   ports=(Port(name="P1", node="a"), Port(name="P2", node="b")))


def random_design(rng) -> DesignParams:
    return DesignParams(
        gm1=rng.uniform(5e-3, 40e-3),
        gm2=rng.uniform(5e-3, 40e-3),
        cgs=rng.uniform(10e-15, 60e-15),
        lg=rng.uniform(100e-12, 2e-9),
        ls=rng.uniform(10e-12, 300e-12),
        k=rng.uniform(0.0, 0.8),
        rs=rng.uniform(25.0, 100.0),
        gamma_noise=rng.uniform(0.5, 2.0),
        eta=rng.uniform(0.8, 1.2),
    )


def random_passive(rng) -> Netlist:
    """Random RLC network with couplings; every node has a resistive path to ground."""
    nodes = ["0", "n1", "n2", "n3", "n4"]
    elements = [resistor(f"RG{i}", n, "0", rng.uniform(10.0, 1e3)) for i, n in enumerate(nodes[1:])]
    inductors = []
    for i in range(int(rng.integers(3, 8))):
        a, b = rng.choice(nodes, size=2, replace=False)
        kind = str(rng.choice(["resistor", "capacitor", "inductor"]))
        value = {"resistor": rng.uniform(10.0, 1e3),
                 "capacitor": rng.uniform(10e-15, 1e-12),
                 "inductor": rng.uniform(0.1e-9, 5e-9)}[kind]
        elements.append(Element(kind=kind, name=f"X{i}", nodes=(str(a), str(b)), value=value))
        if kind == "inductor":
            inductors.append(f"X{i}")
    couplings = []
    if len(inductors) >= 2:
        couplings.append(MutualCoupling(name="K1", a=inductors[0], b=inductors[1], k=rng.uniform(-0.8, 0.8)))
    return Netlist(nodes=tuple(nodes), elements=tuple(elements), couplings=tuple(couplings),
                   ports=(Port(name="P1", node="n1"), Port(name="P2", node="n2")))


def test_ohms_law():
    netlist = Netlist(nodes=("0", "a"), elements=(
        Element(kind="independent-voltage-source", name="V1", nodes=("a", "0"), value=1.0),
        resistor("R1", "a", "0", 50.0),
    ))
    for f in (1e3, 1e9, 1e11):
        sol = solve_ac(netlist, f, "V1")
        # branch current flows from a through the source to ground
        assert sol.branch_currents["V1"] == pytest.approx(-0.02, rel=1e-12)
        assert sol.node_voltages["0"] == 0
        assert sol.residual < 1e-9


def test_series_lc_resonance():
    netlist = Netlist(nodes=("0", "a", "b"), elements=(
        Element(kind="independent-current-source", name="I1", nodes=("0", "a"), value=1.0),
        Element(kind="inductor", name="L1", nodes=("a", "b"), value=1e-9),
        Element(kind="capacitor", name="C1", nodes=("b", "0"), value=1e-12),
    ))
    f0 = 1.0 / (2.0 * math.pi * math.sqrt(1e-9 * 1e-12))
    sol = solve_ac(netlist, f0, "I1")
    assert abs(sol.node_voltages["a"]) < 1e-6
    assert sol.branch_currents["L1"] == pytest.approx(1.0)


def test_solution_is_linear_in_amplitude():
    netlist = build_input_model(reference_design())
    one = solve_ac(netlist, 40e9, "VS")
    two = solve_ac(netlist, 40e9, "VS", amplitude=2.0)
    for node, v in one.node_voltages.items():
        assert two.node_voltages[node] == pytest.approx(2.0 * v, rel=1e-12, abs=1e-15)


def test_gate_source_voltage_follows_input_divider():
    p = reference_design()
    f = 40e9
    sol = solve_ac(build_input_model(p), f, "VS")
    vgs = sol.node_voltages["g"] - sol.node_voltages["s"]
    s = 2j * math.pi * f
    expected = 1.0 / (p.rs + input_impedance_cf(p, f)) / (s * p.cgs)
    assert abs(vgs - expected) <= 1e-9 * abs(expected)


def test_unknown_excitation_and_zero_frequency():
    netlist = build_input_model(reference_design())
    with pytest.raises(InvalidParamsError):
        solve_ac(netlist, 40e9, "RS")
    with pytest.raises(InvalidParamsError):
        solve_ac(netlist, 0.0, "VS")


def test_floating_island_is_singular():
    netlist = Netlist(nodes=("0", "a", "b", "c"), elements=(
        Element(kind="independent-current-source", name="I1", nodes=("0", "a"), value=1.0),
        resistor("R1", "a", "0", 50.0),
        resistor("R2", "b", "c", 50.0),
    ))
    with pytest.raises(SingularSystemError) as exc:
        solve_ac(netlist, 1e9, "I1")
    assert {"b", "c"} <= set(exc.value.offending)
    assert exc.value.to_dict()["code"] == "singular_system"


def test_matched_through():
    netlist = Netlist(nodes=("0", "a"), ports=(Port(name="P1", node="a"), Port(name="P2", node="a")))
    s = port_parameters(netlist, 10e9, "S", 50.0)
    np.testing.assert_allclose(s.matrix, [[0, 1], [1, 0]], atol=1e-12)


def test_series_resistor_s_matrix():
    s = port_parameters(two_port(resistor("R1", "a", "b", 50.0)), 1e9, "S", 50.0)
    assert s[0, 0] == pytest.approx(1 / 3)
    assert s[1, 0] == pytest.approx(2 / 3)
    assert s[0, 1] == pytest.approx(2 / 3)


def test_shunt_resistor_one_port():
    netlist = Netlist(nodes=("0", "a"), elements=(resistor("R1", "a", "0", 50.0),),
                      ports=(Port(name="P1", node="a"),))
    s = port_parameters(netlist, 1e9, "S", 50.0)
    assert s.matrix.shape == (1, 1)
    assert abs(s[0, 0]) < 1e-12
    assert port_parameters(netlist, 1e9, "Z")[0, 0] == pytest.approx(50.0)
    assert port_parameters(netlist, 1e9, "Y")[0, 0] == pytest.approx(0.02)


def test_port_count_is_checked():
    netlist = Netlist(nodes=("0", "a"), elements=(resistor("R1", "a", "0", 50.0),),
                      ports=tuple(Port(name=f"P{i}", node="a") for i in range(3)))
    with pytest.raises(PortCountError):
        port_parameters(netlist, 1e9)


def test_through_has_no_impedance_matrix():
    netlist = Netlist(nodes=("0", "a"), ports=(Port(name="P1", node="a"), Port(name="P2", node="a")))
    with pytest.raises(SingularSystemError):
        port_parameters(netlist, 1e9, "Z")


def test_terminations_are_removed():
    p = reference_design()
    netlist = build_first_stage_model(p, 45.0)
    zin = input_impedance(netlist, 40e9)
    assert zin.real == pytest.approx(50.0, abs=1e-6)
    assert abs(zin.imag) < 1e-6


def test_network_view_drops_terminations_and_stays_valid():
    netlist = build_two_stage_model(reference_design(), 0.35)
    assert netlist.ports[0].termination is not None
    view = network_view(netlist)
    assert all(p.termination is None for p in view.ports)
    assert [p.name for p in view.ports] == ["P1", "P2"]
    assert netlist.ports[0].termination not in {e.name for e in view.elements}
    assert validate(view) == []


def test_terminated_input_model_reflection_follows_closed_form():
    p = reference_design()
    s11 = port_parameters(build_input_model(p), 40e9, "S", 50.0).matrix[0, 0]
    zin = input_impedance_cf(p, 40e9)
    assert abs(s11 - (zin - 50.0) / (zin + 50.0)) <= 1e-6


def test_terminated_two_stage_gives_s_parameters():
    s = port_parameters(build_two_stage_model(reference_design(), 0.0), 40e9, "S", 50.0)
    assert s.matrix.shape == (2, 2)
    assert np.all(np.isfinite(s.matrix))
    assert abs(s.matrix[1, 0]) > 0.0


def test_convert_identity_is_same_object():
    tp = TwoPort("Z", np.array([[50.0, 10.0], [10.0, 80.0]]))
    assert convert(tp, "Z") is tp


def test_matched_diagonal_converts_to_zero():
    s = convert(TwoPort("Z", np.diag([50.0, 50.0])), "S", 50.0)
    np.testing.assert_allclose(s.matrix, np.zeros((2, 2)), atol=1e-15)


def test_conversion_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        r = rng.uniform(10.0, 200.0, size=(2, 2))
        r = r @ r.T / 100.0 + np.eye(2) * 5.0
        x = rng.uniform(-100.0, 100.0, size=(2, 2))
        z = r + 1j * (x + x.T) / 2.0
        tp = TwoPort("Z", z)
        s = convert(tp, "S", 50.0)
        y = convert(s, "Y")
        back = convert(convert(y, "S", 50.0), "Z")
        np.testing.assert_allclose(back.matrix, z, rtol=1e-9, atol=1e-9 * np.abs(z).max())


def test_renormalising_s_keeps_impedances():
    z = np.array([[60.0 + 5j, 12.0], [12.0, 45.0 - 20j]])
    s75 = convert(TwoPort("Z", z), "S", 75.0)
    s50 = convert(s75, "S", 50.0)
    np.testing.assert_allclose(convert(s50, "Z").matrix, z, rtol=1e-9)


def test_random_passive_networks_are_reciprocal_and_passive():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        netlist = random_passive(rng)
        f = rng.uniform(1e9, 50e9)
        s = port_parameters(netlist, f, "S", 50.0).matrix
        z = port_parameters(netlist, f, "Z").matrix
        assert abs(s[0, 1] - s[1, 0]) <= 1e-9
        assert abs(z[0, 1] - z[1, 0]) <= 1e-9 * np.abs(z).max()
        assert np.linalg.svd(s, compute_uv=False).max() <= 1.0 + 1e-9


def test_input_impedance_matches_closed_form():
    rng = np.random.default_rng(11)
    freqs = np.geomspace(1e9, 100e9, 200)
    designs = [reference_design()] + [random_design(rng) for _ in range(99)]
    for p in designs:
        netlist = build_input_model(p)
        for f in freqs:
            z_mna = input_impedance(netlist, f)
            z_cf = input_impedance_cf(p, f)
            assert abs(z_mna - z_cf) <= 1e-9 * abs(z_cf)
