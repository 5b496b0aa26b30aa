"""
Touchstone v1 reader and writer for 1- and 2-port S-parameter sweeps.
Written files use GHz, RI pairs and eight significant digits.
"""

import logging
import math
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from app.errors import TouchstoneError
from app.models.network import SweepTable

logger = logging.getLogger(__name__)

FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
FORMATS = ("ri", "ma", "db")


class TouchstoneData(NamedTuple):
    frequencies: np.ndarray
    s: np.ndarray
    z0: float


def _ordered_entries(m: np.ndarray):
    """Touchstone v1 order: S11 for one port, S11 S21 S12 S22 for two."""
    if m.shape == (1, 1):
        return [m[0, 0]]
    return [m[0, 0], m[1, 0], m[0, 1], m[1, 1]]


def format_touchstone(table: SweepTable, z0: Optional[float] = None) -> str:
    """
    Render a sweep table as Touchstone text.

    Raises:
        TouchstoneError: empty table, non-increasing frequencies or non-finite values
    """
    z0 = table.z0 if z0 is None else z0
    if not table.rows:
        raise TouchstoneError("cannot write an empty sweep")
    f = table.frequencies
    if np.any(np.diff(f) <= 0):
        bad = int(np.flatnonzero(np.diff(f) <= 0)[0]) + 1
        raise TouchstoneError("frequencies must be strictly increasing",
                              {"row": bad, "frequency": float(f[bad])})
    s = table.s_matrices()
    if s.shape[1] not in (1, 2):
        raise TouchstoneError("only 1- and 2-port data is supported", {"ports": int(s.shape[1])})
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(f))):
        raise TouchstoneError("sweep contains non-finite values")

    lines = [f"# GHz S RI R {z0:g}"]
    for freq, m in zip(f, s):
        fields = [f"{freq / 1e9:.8g}"]
        for v in _ordered_entries(m):
            fields.append(f"{v.real:.8g}")
            fields.append(f"{v.imag:.8g}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def touchstone_write(table: SweepTable, z0: Optional[float], path: Union[str, Path]) -> Path:
    """Write `table` to `path`; nothing is written when the table is rejected."""
    text = format_touchstone(table, z0)
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %d Touchstone rows to %s", len(table.rows), path)
    return path


def _parse_options(line: str, state: dict) -> None:
    toks = line[1:].lower().split()
    i = 0
    while i < len(toks):
        tok = toks[i]
        if tok in FREQ_UNITS:
            state["unit"] = tok
        elif tok in FORMATS:
            state["format"] = tok
        elif tok == "r":
            if i + 1 >= len(toks):
                raise TouchstoneError("option line has 'R' without a value")
            try:
                state["z0"] = float(toks[i + 1])
            except ValueError as exc:
                raise TouchstoneError(f"invalid reference impedance {toks[i + 1]!r}") from exc
            i += 1
        elif tok in ("y", "z", "g", "h"):
            raise TouchstoneError(f"only S-parameter files are supported, got {tok.upper()}")
        elif tok != "s":
            raise TouchstoneError(f"unknown option {tok!r}")
        i += 1


def _to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "ri":
        return a + 1j * b
    mag = a if fmt == "ma" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.radians(b))


def parse_touchstone(text: str, nports: int = 2) -> TouchstoneData:
    if nports not in (1, 2):
        raise TouchstoneError("only 1- and 2-port data is supported", {"ports": nports})
    state = {"unit": "ghz", "format": "ma", "z0": 50.0}
    seen_options = False
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if not seen_options:
                _parse_options(line, state)
                seen_options = True
            continue
        try:
            values.extend(float(tok) for tok in line.split())
        except ValueError as exc:
            raise TouchstoneError(f"non-numeric data on line {lineno}", {"line": lineno}) from exc

    width = 1 + 2 * nports * nports
    if not values or len(values) % width:
        raise TouchstoneError(f"data does not divide into {width}-value records",
                              {"values": len(values)})
    data = np.array(values).reshape(-1, width)
    freqs = data[:, 0] * FREQ_UNITS[state["unit"]]
    entries = _to_complex(data[:, 1::2], data[:, 2::2], state["format"])
    if nports == 1:
        s = entries.reshape(-1, 1, 1)
    else:
        # columns are S11 S21 S12 S22
        s = entries[:, [0, 2, 1, 3]].reshape(-1, 2, 2)
    if not math.isfinite(state["z0"]) or state["z0"] <= 0:
        raise TouchstoneError("reference impedance must be positive", {"z0": state["z0"]})
    return TouchstoneData(freqs, s, state["z0"])


def touchstone_read(path: Union[str, Path]) -> TouchstoneData:
    """Read a .s1p/.s2p file; the port count comes from the extension (2 if unknown)."""
    path = Path(path)
    suffix = path.suffix.lower()
    nports = 1 if suffix == ".s1p" else 2
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TouchstoneError(f"cannot read {path}: {exc.strerror}", {"path": str(path)}) from exc
    return parse_touchstone(text, nports)
