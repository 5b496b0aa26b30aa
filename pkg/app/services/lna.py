"""
LNA Service - closed-form expressions and design tools for the
variable-gain cascode LNA: input impedance, noise, stage gain, the
gain-control resistance law, body-biased threshold, input-match synthesis,
DC-block sizing and the figure of merit.
"""

import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from app.errors import InvalidParamsError, MatchingError
from app.models.design import (
    SUPPLY_V,
    BodyBiasParams,
    DesignParams,
    FomInputs,
    PublishedRow,
    RoVgCalibration,
    softplus_overdrive,
)

logger = logging.getLogger(__name__)

DC_BLOCK_THRESHOLD = 8.0
P1DB_TO_IIP3_DB = 9.6
VCTRL_TOLERANCE = 1e-9

THIS_WORK_ROWS: Tuple[PublishedRow, ...] = (
    PublishedRow(label="highest gain", band_low_ghz=37.0, band_high_ghz=43.8, f0_ghz=40.5, gain_db=21.0,
                 nf_db=2.8, iip3_dbm=-7.8, p1db_dbm=-21.0, supply_v=0.7, pdc_mw=4.5, printed_fom_db=63.15),
    PublishedRow(label="lowest gain", band_low_ghz=34.8, band_high_ghz=44.6, f0_ghz=39.75, gain_db=15.0,
                 nf_db=5.5, iip3_dbm=1.2, p1db_dbm=-14.8, supply_v=0.7, pdc_mw=4.5, printed_fom_db=63.02),
)


def _s(frequency: float) -> complex:
    if not (math.isfinite(frequency) and frequency >= 0):
        raise InvalidParamsError("frequency must be finite and non-negative", {"frequency": frequency})
    return 2j * math.pi * frequency


def _loop_polynomial(p: DesignParams, s: complex) -> complex:
    """1 + s*Cgs*Rs + s^2*Cgs*(Lg + Ls + 2M)."""
    return 1.0 + s * p.cgs * p.rs + s * s * p.cgs * p.total_loop_inductance


def _denominator(p: DesignParams, s: complex) -> complex:
    return _loop_polynomial(p, s) + s * p.gm1 * (p.ls + p.mutual)


def input_impedance_cf(p: DesignParams, frequency: float) -> complex:
    """Zin = gm1(Ls+M)/Cgs + 1/(sCgs) + s(Lg+Ls+2M)."""
    if not frequency > 0:
        raise InvalidParamsError("input impedance needs frequency > 0", {"frequency": frequency})
    s = _s(frequency)
    return p.gm1 * (p.ls + p.mutual) / p.cgs + 1.0 / (s * p.cgs) + s * p.total_loop_inductance


def feedback_noise_current_cf(p: DesignParams, frequency: float) -> complex:
    """
    Gate-loop current per unit M1 channel-noise current, -s^2*Cgs*(Ls+M)/D(s).
    On the jw axis the leading term is +w^2*Cgs*(Ls+M), in phase with the noise current.
    """
    s = _s(frequency)
    return -s * s * p.cgs * (p.ls + p.mutual) / _denominator(p, s)


def m1_noise_transfer_cf(p: DesignParams, frequency: float) -> float:
    """|H|^2 from the M1 channel-noise current to the output drain current."""
    s = _s(frequency)
    return float(abs(_loop_polynomial(p, s) / _denominator(p, s)) ** 2)


def noise_factor_cf(p: DesignParams, frequency: float) -> float:
    """
    Noise factor with only the source resistance and M1 channel noise:
    F = 1 + eta*gamma*|1 + sCgsRs + s^2 Cgs(Lg+Ls+2M)|^2 / (gm1*Rs).
    """
    if p.rs <= 0 or p.gm1 <= 0:
        raise InvalidParamsError("noise factor needs rs > 0 and gm1 > 0", {"rs": p.rs, "gm1": p.gm1})
    s = _s(frequency)
    return 1.0 + p.eta * p.gamma_noise * abs(_loop_polynomial(p, s)) ** 2 / (p.gm1 * p.rs)


def optimum_noise_frequency(p: DesignParams) -> float:
    """
    Frequency minimising the loop-polynomial magnitude, which is where
    noise_factor_cf reaches its minimum. Returns 0.0 when the minimum sits at DC.
    """
    a = p.cgs * p.total_loop_inductance
    b = (p.cgs * p.rs) ** 2
    if a <= 0:
        return 0.0
    u = 1.0 / a - b / (2.0 * a * a)
    return math.sqrt(u) / (2.0 * math.pi) if u > 0 else 0.0


def _vg_branch_admittance(c0: float, ro_vg: float, s: complex) -> complex:
    """Admittance of C0 in series with ro_vg."""
    if math.isinf(ro_vg) or s == 0:
        return 0j
    if math.isinf(c0):
        return 1.0 / ro_vg
    return 1.0 / (ro_vg + 1.0 / (s * c0))


def stage_gain_cf(p: DesignParams, ro_vg: float, frequency: float) -> complex:
    """
    Approximate first-stage voltage gain
    gm1/(1 + s*gm1*Ls) * [ro1 || (ro_vg + 1/(sC0))] * (1 + gm2*ro2),
    without the inversion sign.
    """
    if not ro_vg > 0:
        raise InvalidParamsError("ro_vg must be positive", {"ro_vg": ro_vg})
    s = _s(frequency)
    degeneration = p.gm1 / (1.0 + s * p.gm1 * p.ls)
    load = 1.0 / (1.0 / p.ro1 + _vg_branch_admittance(p.c0, ro_vg, s))
    return degeneration * load * (1.0 + p.gm2 * p.ro2)


def check_vctrl(vctrl: float) -> float:
    if not (math.isfinite(vctrl) and -VCTRL_TOLERANCE <= vctrl <= SUPPLY_V + VCTRL_TOLERANCE):
        raise InvalidParamsError(f"vctrl must lie in [0, {SUPPLY_V}] V", {"vctrl": vctrl})
    return min(max(float(vctrl), 0.0), SUPPLY_V)


def ro_vg(vctrl: float, cal: Optional[RoVgCalibration] = None) -> float:
    """
    Small-signal resistance of the gain-control transistor: the off-state
    plateau in parallel with a triode conductance beta*(vctrl - vth),
    the overdrive smoothed over `blend` volts around threshold.
    """
    cal = cal or RoVgCalibration.calibrate()
    vctrl = check_vctrl(vctrl)
    vov = softplus_overdrive(vctrl, cal.vth, cal.blend)
    return 1.0 / (1.0 / cal.r_off + cal.beta * vov)


def threshold_voltage(b: BodyBiasParams, vsb: float) -> float:
    """VT = vt0 + gamma*(sqrt(2*phi_f + vsb) - sqrt(2*phi_f)); forward body bias is vsb < 0."""
    radicand = 2.0 * b.phi_f + vsb
    if radicand < 0:
        raise InvalidParamsError("2*phi_f + vsb must be non-negative", {"phi_f": b.phi_f, "vsb": vsb})
    return b.vt0 + b.gamma_body * (math.sqrt(radicand) - math.sqrt(2.0 * b.phi_f))


def fit_body_bias(vt0: float, vsb: float, vt_target: float, phi_f: float = 0.40) -> BodyBiasParams:
    """Body-effect coefficient that moves the threshold from vt0 to vt_target at vsb."""
    if phi_f <= 0 or 2.0 * phi_f + vsb < 0:
        raise InvalidParamsError("bias point outside the body-effect domain", {"phi_f": phi_f, "vsb": vsb})
    bracket = math.sqrt(2.0 * phi_f + vsb) - math.sqrt(2.0 * phi_f)
    if bracket == 0:
        raise InvalidParamsError("vsb = 0 cannot shift the threshold", {"vsb": vsb})
    gamma = (vt_target - vt0) / bracket
    if gamma < 0:
        raise InvalidParamsError("anchors imply a negative body-effect coefficient",
                                 {"vt0": vt0, "vt_target": vt_target, "vsb": vsb})
    return BodyBiasParams(vt0=vt0, gamma_body=gamma, phi_f=phi_f)


class MatchResiduals(NamedTuple):
    real_part: float
    resonance: float


def match_residuals(gm1: float, cgs: float, k: float, f0: float, rs: float,
                    lg: float, ls: float) -> MatchResiduals:
    """Relative residuals of Re{Zin} = rs and resonance at f0."""
    m = k * math.sqrt(lg * ls)
    w0 = 2.0 * math.pi * f0
    return MatchResiduals(
        real_part=(gm1 * (ls + m) / cgs - rs) / rs,
        resonance=w0 * w0 * cgs * (lg + ls + 2.0 * m) - 1.0,
    )


def _newton_match(k: float, p: float, max_iter: int = 50, tol: float = 1e-12):
    """Solve t(t + k w) = 1 - p, w(w + k t) = p for t, w > 0; residuals are relative."""
    x = np.array([math.sqrt(1.0 - p), math.sqrt(p)])
    scale = np.array([1.0 / (1.0 - p), 1.0 / p])

    def residual(v):
        t, w = v
        return scale * np.array([t * t + k * t * w - (1.0 - p), w * w + k * t * w - p])

    r = residual(x)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return x
        t, w = x
        jac = scale[:, None] * np.array([[2.0 * t + k * w, k * t], [k * w, 2.0 * w + k * t]])
        step = np.linalg.solve(jac, -r)
        damping = 1.0
        while damping > 1e-6:
            trial = x + damping * step
            if np.all(trial > 0):
                r_trial = residual(trial)
                if np.linalg.norm(r_trial) < np.linalg.norm(r):
                    x, r = trial, r_trial
                    break
            damping *= 0.5
        else:
            return None
    return x if np.max(np.abs(r)) < tol else None


def _bracketed_match(k: float, p: float):
    top = math.sqrt(1.0 - p)

    def g(t):
        w = (1.0 - p - t * t) / (k * t)
        return w * w + k * t * w - p

    t = brentq(g, top * 1e-9, top, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return np.array([t, (1.0 - p - t * t) / (k * t)])


def design_input_match(gm1: float, cgs: float, k: float, f0: float, rs: float) -> Tuple[float, float]:
    """
    Size Lg and Ls so that Re{Zin(f0)} = rs and Im{Zin(f0)} = 0 with the
    gate and source inductors coupled by k.

    Works in t = sqrt(Lg/LT), w = sqrt(Ls/LT), LT = 1/(w0^2 Cgs), which turns
    the two conditions into a pair of quadratics. Damped Newton from the
    uncoupled solution, with a bracketed fallback.

    Returns:
        (lg, ls) in henries

    Raises:
        MatchingError: no positive (lg, ls) exists for these electricals
    """
    for name, value in (("gm1", gm1), ("cgs", cgs), ("f0", f0), ("rs", rs)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidParamsError(f"{name} must be positive", {name: value})
    if not 0.0 <= k < 1.0:
        raise InvalidParamsError("k must satisfy 0 <= k < 1", {"k": k})

    w0 = 2.0 * math.pi * f0
    loop = 1.0 / (w0 * w0 * cgs)
    target = rs * cgs / gm1
    p = target / loop
    context = {"gm1": gm1, "cgs": cgs, "k": k, "f0": f0, "rs": rs}
    if p >= 1.0:
        logger.warning("no input match: Ls + M = %.4g H exceeds the loop inductance %.4g H", target, loop)
        raise MatchingError("required Lg would be non-positive at this f0 and Cgs", context)

    if k == 0.0:
        ls = target
        return loop - ls, ls

    x = _newton_match(k, p)
    if x is None:
        logger.debug("Newton match did not converge for k=%.3g, p=%.4g; bracketing", k, p)
        x = _bracketed_match(k, p)
    t, w = x
    lg, ls = t * t * loop, w * w * loop

    res = match_residuals(gm1, cgs, k, f0, rs, lg, ls)
    if not (lg > 0 and ls > 0) or max(abs(res.real_part), abs(res.resonance)) > 1e-9:
        raise MatchingError("input match did not converge", dict(context, residuals=res._asdict()))
    return lg, ls


class DcBlockCheck(NamedTuple):
    corner_hz: float
    ratio: float
    passed: bool


def dc_block_check(c0: float, ro_vg_min: float, f0: float, threshold: float = DC_BLOCK_THRESHOLD) -> DcBlockCheck:
    """High-pass corner of C0 with the smallest gain-control resistance, against f0."""
    if not (c0 > 0 and ro_vg_min > 0 and f0 > 0):
        raise InvalidParamsError("dc_block_check needs positive inputs",
                                 {"c0": c0, "ro_vg_min": ro_vg_min, "f0": f0})
    corner = 1.0 / (2.0 * math.pi * ro_vg_min * c0)
    ratio = math.inf if corner == 0 else f0 / corner
    return DcBlockCheck(corner, ratio, ratio >= threshold)


def fom(inputs: FomInputs) -> float:
    """
    20*log10(G * BW * f0 * IIP3 / ((F - 1) * Pdc)) with G as a power ratio,
    BW and f0 in GHz, IIP3 and Pdc in mW.
    """
    if inputs.nf_db <= 0:
        raise InvalidParamsError("nf_db must be positive so that F - 1 > 0", {"nf_db": inputs.nf_db})
    gain = 10.0 ** (inputs.gain_db / 10.0)
    iip3_mw = 10.0 ** (inputs.iip3_dbm / 10.0)
    excess = 10.0 ** (inputs.nf_db / 10.0) - 1.0
    return 20.0 * math.log10(gain * inputs.bw_3db_ghz * inputs.f0_ghz * iip3_mw / (excess * inputs.pdc_mw))


def iip3_from_p1db(p1db_dbm: float) -> float:
    """Rule-of-thumb IIP3 estimate from the input 1-dB compression point."""
    return p1db_dbm + P1DB_TO_IIP3_DB
