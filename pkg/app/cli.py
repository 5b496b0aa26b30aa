"""
RFSS command line: netlist analysis, LNA reports and sweeps, input-match
synthesis and the figure-of-merit calculator.

Exit codes: 0 ok, 1 numeric failure, 2 input error. Failures print a JSON
object with "code", "message" and "context" on stderr.
"""

import functools
import json
import sys
from pathlib import Path
from typing import List, Literal, Optional

import click
from pydantic import BaseModel, Field, ValidationError

from app.config import config
from app.errors import (
    InvalidJsonError,
    InvalidNetlistError,
    InvalidParamsError,
    PortCountError,
    RfssError,
)
from app.models.design import FomInputs
from app.models.network import FrequencyGrid
from app.models.schemas import DesignFile
from app.services.lna import design_input_match, fom, iip3_from_p1db, match_residuals
from app.services.netlist import load_netlist, require_valid
from app.services.reference_design import ReferenceDesigns
from app.services.report import build_report, metrics_csv, nf_csv, report_json, resolve_design
from app.services.sweep import corner_sweep, netlist_sweep, summarize_vctrl, vctrl_tables
from app.services.touchstone import touchstone_write

INPUT_ERRORS = (InvalidJsonError, InvalidNetlistError, InvalidParamsError, PortCountError)

FOM_EXPLANATION = (
    "FoM = 20*log10(G * BW[GHz] * f0[GHz] * IIP3[mW] / ((F - 1) * Pdc[mW]))",
    "G is the power ratio 10^(gain_dB/10); reading the gain as a voltage ratio misses the "
    "published lowest-gain row by about 21 dB.",
    "The published highest-gain row prints 63.15 dB while its own inputs give 63.00 dB; "
    "the gap is attributed to rounding in the table.",
    "Rows for other designs in the same table do not reconcile under either gain convention.",
)


class RunConfig(BaseModel):
    """Resolved options of one file-producing command."""
    command: Literal["analyze", "report", "sweep"]
    input: Optional[Path] = None
    output: str = Field(..., min_length=1, description="Output path prefix")
    grid: FrequencyGrid
    vctrl: List[float] = Field(default_factory=lambda: [0.0])
    corners: List[str] = Field(default_factory=list)
    z0: float = Field(default=50.0, gt=0)


def _emit_failure(payload: dict, exit_code: int) -> None:
    click.echo(json.dumps(payload, sort_keys=True, default=str), err=True)
    sys.exit(exit_code)


def handle_errors(fn):
    """Map domain errors onto exit codes and a JSON diagnostic on stderr."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except INPUT_ERRORS as e:
            _emit_failure(e.to_dict(), 2)
        except ValidationError as e:
            errors = [{"loc": ".".join(str(x) for x in err["loc"]), "msg": err["msg"]} for err in e.errors()]
            _emit_failure({"code": "invalid_input", "message": "input failed validation",
                           "context": {"errors": errors}}, 2)
        except RfssError as e:
            _emit_failure(e.to_dict(), 1)
        except OSError as e:
            _emit_failure({"code": "io_error", "message": str(e),
                           "context": {"path": getattr(e, "filename", None)}}, 2)
    return wrapper


def _read(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _float_list(raw: str, what: str) -> List[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise InvalidParamsError(f"{what} must be a comma-separated list of numbers", {what: raw}) from None
    if not values:
        raise InvalidParamsError(f"{what} list is empty", {what: raw})
    return values


def _load_design_file(path: Optional[Path]) -> DesignFile:
    if path is None:
        return DesignFile()
    text = _read(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise InvalidJsonError(f"invalid JSON at byte offset {offset}: {exc.msg}",
                               {"byte_offset": offset, "path": str(path)}) from exc
    return DesignFile.model_validate(data)


def _prefix(run: RunConfig, suffix: str) -> Path:
    return Path(f"{run.output}{suffix}")


def cmd_analyze(run: RunConfig) -> List[Path]:
    """Touchstone file for a JSON netlist, plus an NF table when it carries input noise."""
    netlist = require_valid(load_netlist(_read(run.input)))
    if len(netlist.ports) not in (1, 2):
        raise PortCountError(f"analyze needs a 1- or 2-port netlist, got {len(netlist.ports)} ports",
                             {"ports": len(netlist.ports)})
    table = netlist_sweep(netlist, run.grid, run.z0)
    written = [touchstone_write(table, run.z0, _prefix(run, f".s{len(netlist.ports)}p"))]
    if any(r.nf_db is not None for r in table.rows):
        written.append(_write(_prefix(run, "_nf.csv"), nf_csv([table])))
    return written


def cmd_report(run: RunConfig) -> List[Path]:
    """Per-vctrl metrics CSV and the JSON report."""
    params = _load_design_file(run.input)
    report, _ = build_report(params, run.vctrl, run.grid, run.z0)
    return [
        _write(_prefix(run, "_metrics.csv"), metrics_csv(report.result.entries)),
        _write(_prefix(run, "_report.json"), report_json(report)),
    ]


def cmd_sweep(run: RunConfig) -> List[Path]:
    """One Touchstone file per vctrl, NF and metrics tables, corner table on request."""
    params = _load_design_file(run.input)
    p = resolve_design(params)
    corners = [ReferenceDesigns.corner(name) for name in run.corners]
    tables = vctrl_tables(p, run.vctrl, run.grid, run.z0)
    written = [touchstone_write(t, run.z0, _prefix(run, f"_v{t.vctrl:.3f}.s2p")) for t in tables]
    written.append(_write(_prefix(run, "_nf.csv"), nf_csv(tables)))
    written.append(_write(_prefix(run, "_metrics.csv"), metrics_csv(summarize_vctrl(tables).entries)))
    if corners:
        entries = corner_sweep(p, corners, run.grid, run.vctrl[0], run.z0)
        written.append(_write(_prefix(run, "_corners.csv"), metrics_csv(entries)))
    return written


def _grid_options(fn):
    fn = click.option("--log", "log_spacing", is_flag=True, help="Logarithmic frequency spacing")(fn)
    fn = click.option("--points", default=81, show_default=True, type=int, help="Grid points")(fn)
    fn = click.option("--fmax", default=50.0, show_default=True, type=float, help="Stop frequency (GHz)")(fn)
    fn = click.option("--fmin", default=30.0, show_default=True, type=float, help="Start frequency (GHz)")(fn)
    return fn


def _run_config(command, input_path, output, fmin, fmax, points, log_spacing, z0,
                vctrl="0", corners="") -> RunConfig:
    grid = FrequencyGrid(start=fmin * 1e9, stop=fmax * 1e9, points=points,
                         spacing="log" if log_spacing else "linear")
    return RunConfig(
        command=command,
        input=Path(input_path) if input_path else None,
        output=output,
        grid=grid,
        vctrl=_float_list(vctrl, "vctrl"),
        corners=[c.strip() for c in corners.split(",") if c.strip()],
        z0=config.DEFAULT_Z0 if z0 is None else z0,
    )


def _report_written(paths: List[Path]) -> None:
    for p in paths:
        click.echo(str(p))


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr")
def cli(verbose: bool):
    """Small-signal analysis toolkit for the variable-gain cascode LNA."""
    config.configure_logging(None if verbose else "CRITICAL")


@cli.command()
@click.option("--input", "input_path", required=True, help="JSON netlist")
@click.option("--output", required=True, help="Output prefix")
@_grid_options
@click.option("--z0", type=float, default=None, help="Reference impedance (ohms)")
@handle_errors
def analyze(input_path, output, fmin, fmax, points, log_spacing, z0):
    """S-parameters (and NF when available) of a JSON netlist."""
    run = _run_config("analyze", input_path, output, fmin, fmax, points, log_spacing, z0)
    _report_written(cmd_analyze(run))


@cli.command()
@click.option("--input", "input_path", default=None, help="Design parameter file (JSON)")
@click.option("--output", required=True, help="Output prefix")
@_grid_options
@click.option("--vctrl", default="0,0.7", show_default=True, help="Comma-separated control voltages")
@click.option("--z0", type=float, default=None, help="Reference impedance (ohms)")
@handle_errors
def report(input_path, output, fmin, fmax, points, log_spacing, vctrl, z0):
    """Per-vctrl metrics table and JSON report of the two-stage LNA."""
    run = _run_config("report", input_path, output, fmin, fmax, points, log_spacing, z0, vctrl)
    _report_written(cmd_report(run))


@cli.command()
@click.option("--input", "input_path", default=None, help="Design parameter file (JSON)")
@click.option("--output", required=True, help="Output prefix")
@_grid_options
@click.option("--vctrl", default="0,0.35,0.7", show_default=True, help="Comma-separated control voltages")
@click.option("--corners", default="", help="Comma-separated corners (TT, FF, SS)")
@click.option("--z0", type=float, default=None, help="Reference impedance (ohms)")
@handle_errors
def sweep(input_path, output, fmin, fmax, points, log_spacing, vctrl, corners, z0):
    """Touchstone files per control voltage plus NF, metrics and corner tables."""
    run = _run_config("sweep", input_path, output, fmin, fmax, points, log_spacing, z0, vctrl, corners)
    _report_written(cmd_sweep(run))


@cli.command("design-match")
@click.option("--gm1", default=20e-3, show_default=True, type=float, help="Transconductance (S)")
@click.option("--cgs", default=20e-15, show_default=True, type=float, help="Gate-source capacitance (F)")
@click.option("--k", "k", default=0.3, show_default=True, type=float, help="Lg/Ls coupling coefficient")
@click.option("--f0", default=40.0, show_default=True, type=float, help="Match frequency (GHz)")
@click.option("--rs", default=50.0, show_default=True, type=float, help="Source resistance (ohms)")
@handle_errors
def design_match(gm1, cgs, k, f0, rs):
    """Size Lg and Ls for a real rs match at f0."""
    lg, ls = design_input_match(gm1, cgs, k, f0 * 1e9, rs)
    residuals = match_residuals(gm1, cgs, k, f0 * 1e9, rs, lg, ls)
    payload = {
        "lg_h": lg,
        "ls_h": ls,
        "lg_ph": lg * 1e12,
        "ls_ph": ls * 1e12,
        "mutual_h": k * (lg * ls) ** 0.5,
        "residual_real_part": residuals.real_part,
        "residual_resonance": residuals.resonance,
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@cli.command("fom")
@click.option("--gain-db", required=True, type=float)
@click.option("--bw-ghz", required=True, type=float)
@click.option("--f0-ghz", required=True, type=float)
@click.option("--iip3-dbm", type=float, default=None)
@click.option("--p1db-dbm", type=float, default=None, help="Used as P1dB + 9.6 dB when --iip3-dbm is absent")
@click.option("--nf-db", required=True, type=float)
@click.option("--pdc-mw", required=True, type=float)
@click.option("--explain", is_flag=True, help="Print the expression and convention notes")
@handle_errors
def fom_command(gain_db, bw_ghz, f0_ghz, iip3_dbm, p1db_dbm, nf_db, pdc_mw, explain):
    """Figure of merit in dB, printed with two decimals."""
    estimated = iip3_dbm is None
    if estimated:
        if p1db_dbm is None:
            raise InvalidParamsError("one of --iip3-dbm or --p1db-dbm is required")
        iip3_dbm = iip3_from_p1db(p1db_dbm)
    value = fom(FomInputs(gain_db=gain_db, bw_3db_ghz=bw_ghz, f0_ghz=f0_ghz,
                          iip3_dbm=iip3_dbm, nf_db=nf_db, pdc_mw=pdc_mw))
    click.echo(f"{round(value, 2) + 0.0:.2f}")
    if explain:
        for line in FOM_EXPLANATION:
            click.echo(line)
        if estimated:
            click.echo(f"IIP3 estimated from P1dB: {iip3_dbm:.2f} dBm")


def main():
    cli()


if __name__ == "__main__":
    main()
