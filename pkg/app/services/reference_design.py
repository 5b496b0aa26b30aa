"""
Reference design and process-corner profiles.

The device values are synthesized: they satisfy the input-match equations at
the chosen centre frequency and are cached per frequency.
"""

import logging
import threading
from typing import Dict, List, Optional

from app.errors import InvalidParamsError
from app.models.design import CornerFactors, DesignParams
from app.services.lna import design_input_match

logger = logging.getLogger(__name__)

REFERENCE_F0 = 40e9


class ReferenceDesigns:
    """In-memory cache of matched reference designs with seeded corner profiles."""

    _cache: Dict[float, DesignParams] = {}
    _lock = threading.Lock()

    _electricals = {"gm1": 20e-3, "gm2": 20e-3, "cgs": 20e-15, "k": 0.3, "rs": 50.0}

    # Seeded corner profiles
    _corners: Dict[str, CornerFactors] = {
        "TT": CornerFactors(name="TT"),
        "FF": CornerFactors(name="FF", gm_scale=1.15, cgs_scale=0.95, vt_shift=-0.030),
        "SS": CornerFactors(name="SS", gm_scale=0.87, cgs_scale=1.05, vt_shift=0.030),
    }

    @classmethod
    def get_design(cls, f0: float = REFERENCE_F0) -> DesignParams:
        key = float(f0)
        with cls._lock:
            existing = cls._cache.get(key)
            if existing is not None:
                return existing

        e = cls._electricals
        lg, ls = design_input_match(e["gm1"], e["cgs"], e["k"], key, e["rs"])
        design = DesignParams(gm1=e["gm1"], gm2=e["gm2"], cgs=e["cgs"], k=e["k"], rs=e["rs"], lg=lg, ls=ls)
        logger.info("synthesized reference design at %.4g GHz: Lg=%.4g pH, Ls=%.4g pH",
                    key / 1e9, lg * 1e12, ls * 1e12)
        with cls._lock:
            cls._cache[key] = design
        return design

    @classmethod
    def refresh(cls, f0: float = REFERENCE_F0) -> DesignParams:
        with cls._lock:
            cls._cache.pop(float(f0), None)
        return cls.get_design(f0)

    @classmethod
    def corner(cls, name: str) -> CornerFactors:
        key = (name or "").strip().upper()
        profile = cls._corners.get(key)
        if profile is None:
            raise InvalidParamsError(f"unknown corner {name!r}", {"corner": name, "known": cls.corner_names()})
        return profile

    @classmethod
    def corner_names(cls) -> List[str]:
        return list(cls._corners.keys())


def reference_design(f0: float = REFERENCE_F0) -> DesignParams:
    return ReferenceDesigns.get_design(f0)


def apply_corner(p: DesignParams, corner: Optional[CornerFactors]) -> DesignParams:
    """Scale gm1/gm2 and Cgs and shift the gain-control threshold; inductors stay as drawn."""
    if corner is None:
        return p
    return p.model_copy(update={
        "gm1": p.gm1 * corner.gm_scale,
        "gm2": p.gm2 * corner.gm_scale,
        "cgs": p.cgs * corner.cgs_scale,
        "vg_device": p.vg_device.model_copy(update={"vth": p.vg_device.vth + corner.vt_shift}),
        "corner_scale": corner,
    })
