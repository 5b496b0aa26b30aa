"""Tests for netlist validation, JSON loading and the LNA model factories."""

import json

import pytest

from app.errors import InvalidJsonError, InvalidNetlistError, InvalidParamsError
from app.models.netlist import Element, MutualCoupling, Netlist, Port
from app.services.lna import ro_vg
from app.services.netlist import (
    build_first_stage_model,
    build_gain_model,
    build_input_model,
    build_two_stage_model,
    dump_netlist,
    load_netlist,
    validate,
)
from app.services.reference_design import reference_design


def divider(r2_nodes=("b", "0")) -> Netlist:
    return Netlist(
        nodes=("0", "a", "b"),
        elements=(
            Element(kind="independent-voltage-source", name="V1", nodes=("a", "0"), value=1.0),
            Element(kind="resistor", name="R1", nodes=("a", "b"), value=100.0),
            Element(kind="resistor", name="R2", nodes=r2_nodes, value=100.0),
        ),
    )


def codes(netlist):
    return [d.code for d in validate(netlist)]


def test_divider_is_valid():
    assert validate(divider()) == []


def test_unknown_node_gives_single_dangling_terminal():
    assert codes(divider(("b", "zz"))) == ["dangling_terminal"]


def test_coupling_out_of_range():
    netlist = Netlist(
        nodes=("0", "a", "b"),
        elements=(
            Element(kind="inductor", name="L1", nodes=("a", "0"), value=1e-9),
            Element(kind="inductor", name="L2", nodes=("b", "0"), value=1e-9),
        ),
        couplings=(MutualCoupling(a="L1", b="L2", k=1.2),),
    )
    assert codes(netlist) == ["coupling_out_of_range"]


def test_coupling_must_name_inductors():
    netlist = divider().model_copy(update={"couplings": (MutualCoupling(a="R1", b="L9", k=0.5),)})
    assert sorted(codes(netlist)) == ["coupling_not_inductor", "coupling_unknown_inductor"]


@pytest.mark.parametrize("value", [0.0, -5.0, float("inf")])
def test_passive_values_must_be_positive_and_finite(value):
    netlist = divider().model_copy(update={"elements": (
        Element(kind="independent-voltage-source", name="V1", nodes=("a", "0"), value=1.0),
        Element(kind="resistor", name="R1", nodes=("a", "b"), value=value),
        Element(kind="resistor", name="R2", nodes=("b", "0"), value=100.0),
    )})
    assert codes(netlist) == ["invalid_value"]


def test_floating_island_is_reported():
    netlist = Netlist(
        nodes=("0", "a", "b", "c"),
        elements=(
            Element(kind="resistor", name="R1", nodes=("a", "0"), value=50.0),
            Element(kind="resistor", name="R2", nodes=("b", "c"), value=50.0),
        ),
    )
    assert codes(netlist) == ["floating_node", "floating_node"]


def test_missing_ground_and_duplicate_port():
    netlist = Netlist(
        nodes=("a", "b"),
        elements=(Element(kind="resistor", name="R1", nodes=("a", "b"), value=50.0),),
        ports=(Port(name="P1", node="a", ref="b"), Port(name="P1", node="b", ref="a")),
    )
    assert "missing_ground" in codes(netlist)
    assert "duplicate_port" in codes(netlist)


def test_vccs_needs_four_terminals():
    with pytest.raises(ValueError):
        Element(kind="vccs", name="G1", nodes=("a", "0"), value=1e-3)


def test_load_netlist_reports_byte_offset():
    with pytest.raises(InvalidJsonError) as exc:
        load_netlist('{"nodes": [}')
    assert exc.value.context["byte_offset"] == 11

    # multi-byte characters count in bytes, not characters
    with pytest.raises(InvalidJsonError) as exc:
        load_netlist('{"é": [}')
    assert exc.value.context["byte_offset"] == 8


def test_load_netlist_schema_errors():
    text = '{"nodes": ["0", "a"], "elements": [{"kind": "resistor", "name": "R1", "nodes": ["a"], "value": 5}]}'
    with pytest.raises(InvalidNetlistError) as exc:
        load_netlist(text)
    assert exc.value.context["errors"]


def test_load_netlist_accepts_documented_schema():
    text = """
    {
      "nodes": ["0", "a", "b"],
      "elements": [
        {"kind": "inductor", "name": "L1", "nodes": ["a", "0"], "value": 1e-9},
        {"kind": "inductor", "name": "L2", "nodes": ["b", "0"], "value": 2e-9}
      ],
      "couplings": [{"a": "L1", "b": "L2", "k": 0.4}],
      "ports": [{"name": "P1", "node": "a"}, {"name": "P2", "node": "b"}],
      "noise_sources": []
    }
    """
    netlist = load_netlist(text)
    assert netlist.couplings[0].inductor_b == "L2"
    assert validate(netlist) == []
    assert load_netlist(json.dumps(dump_netlist(netlist))).model_dump() == netlist.model_dump()


def test_first_stage_without_coupling():
    p = reference_design().model_copy(update={"k": 0.0})
    netlist = build_first_stage_model(p, 45.0)
    assert netlist.couplings == ()
    assert validate(netlist) == []


def test_first_stage_is_deterministic():
    p = reference_design()
    assert build_first_stage_model(p, 100.0) == build_first_stage_model(p, 100.0)


def test_coupling_round_trip_is_idempotent():
    netlist = build_first_stage_model(reference_design(), 100.0)
    coupling = netlist.couplings[0]
    again = netlist.without_couplings().with_coupling(coupling)
    assert again.elements == netlist.elements
    assert again.couplings == netlist.couplings
    assert again.with_coupling(coupling).couplings == netlist.couplings


def test_first_stage_ports_and_noise():
    netlist = build_first_stage_model(reference_design(), 100.0, include_device_noise=True)
    assert [p.node for p in netlist.ports] == ["in", "o1"]
    elements = netlist.element_map()
    assert {n.name for n in netlist.noise_sources} == {"RS", "M1", "M2", "MVG"}
    for source in netlist.noise_sources:
        assert source.element in elements
    assert [n.name for n in netlist.noise_sources if n.is_input] == ["RS"]


@pytest.mark.parametrize("vctrl", [0.0, 0.35, 0.7])
def test_two_stage_model_is_valid(vctrl):
    netlist = build_two_stage_model(reference_design(), vctrl)
    assert validate(netlist) == []
    assert netlist.element("RVG").value == pytest.approx(ro_vg(vctrl))


def test_two_stage_gain_control_endpoints():
    p = reference_design()
    assert build_two_stage_model(p, 0.0).element("RVG").value == pytest.approx(p.vg_device.r_off, rel=1e-6)
    assert build_two_stage_model(p, 0.7).element("RVG").value == pytest.approx(45.0, rel=1e-9)


def test_two_stage_rejects_out_of_range_vctrl():
    with pytest.raises(InvalidParamsError):
        build_two_stage_model(reference_design(), 0.9)


def test_builders_need_both_inductors():
    p = reference_design().model_copy(update={"ls": 0.0})
    with pytest.raises(InvalidParamsError):
        build_input_model(p)
    # the gain model drops Ls instead
    assert "LS" not in build_gain_model(p, 45.0).element_map()


def test_zero_source_resistance_drives_the_input_directly():
    netlist = build_input_model(reference_design().model_copy(update={"rs": 0.0}))
    assert "RS" not in netlist.element_map()
    assert netlist.ports[0].termination == "VS"
    assert [n.name for n in netlist.noise_sources] == ["M1"]
