"""One record for every tunable constant in the machinery.

The inequalities this package checks come with unspecified absolute constants
("<<", "Omega(.)"). Thresholds marked *calibrated* are artifact-local values
produced by `km verify <suite> --calibrate` sweeps at pinned seeds and stored
in constants.json next to this module; they are empirical engineering
constants, not mathematical claims. Runs compare against the committed ledger
and fail on regression.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

_LEDGER_PATH = Path(__file__).with_name("constants.json")

# fields whose values come from calibration sweeps
CALIBRATED_FIELDS = ("k_unb", "k_lporth", "k_regconv", "c_cover", "k_hold", "c_narrow")


@dataclass(frozen=True)
class Constants:
    # regularity definition constant (the "100" in (1 +- 100 d |kappa|))
    reg_const: float = 100.0
    # density-increment certificate: ||1_A * mu_V||_inf >= (1 + eps/c_inc) alpha
    c_inc: float = 100.0
    # Holder lifting: search even p up to 2*ceil(k_hold * log(2/gamma))  [calibrated]
    k_hold: float = 2.0
    # unbalancing: p' <= ceil(k_unb * (1/eps) * log(e/eps) * p)  [calibrated]
    k_unb: float = 8.0
    # Bohr-relative unbalancing p' bound, same shape  [calibrated]
    k_lporth: float = 8.0
    # narrowing-hypothesis constant: rho <= c_narrow * alpha * eps / d  [calibrated]
    c_narrow: float = 0.25
    # regularity convolution: ||mu_B * mu - mu_B||_1 <= k_regconv * rho * d  [calibrated]
    k_regconv: float = 4.0
    # covering hypothesis: rho <= c_cover / (L d); the regularity definition
    # forces c_cover <= 1/reg_const for the 2x bound  [calibrated]
    c_cover: float = 0.01
    # caps / search budgets
    drc_exhaustive_cap: int = 1 << 17
    sift_default_trials: int = 20000
    smoothing_widths: tuple = (1.0, 0.5, 0.25, 0.125)
    smoothing_freqs: int = 3

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["smoothing_widths"] = list(self.smoothing_widths)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Constants":
        kwargs = dict(obj)
        if "smoothing_widths" in kwargs:
            kwargs["smoothing_widths"] = tuple(kwargs["smoothing_widths"])
        return cls(**kwargs)


def load_constants(path: Path | None = None) -> Constants:
    """Defaults overlaid with the committed calibration ledger, when present."""
    p = path or _LEDGER_PATH
    base = Constants()
    if p.exists():
        ledger = json.loads(p.read_text())
        values = {k: v for k, v in ledger.get("calibrated", {}).items() if k in CALIBRATED_FIELDS}
        base = replace(base, **values)
    return base


def save_ledger(calibrated: dict, meta: dict, path: Path | None = None) -> Path:
    p = path or _LEDGER_PATH
    obj = {"calibrated": calibrated, "meta": meta}
    p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return p


def ledger_values(path: Path | None = None) -> dict:
    p = path or _LEDGER_PATH
    if not p.exists():
        return {}
    return json.loads(p.read_text()).get("calibrated", {})


def ledger_meta(path: Path | None = None) -> dict:
    p = path or _LEDGER_PATH
    if not p.exists():
        return {}
    return json.loads(p.read_text()).get("meta", {})
