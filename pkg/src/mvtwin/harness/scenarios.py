"""Scenario descriptions and the standard scenario catalogue."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from ..errors import ConfigurationError
from ..twin import SIM_50KVA, FaultContext, TransformerParams

LOAD_TRAJECTORIES = ("constant", "increase", "decrease")
PAPER_FS = (5_000.0, 10_000.0, 30_000.0, 52_000.0)
FAULT_TYPES = ("LG", "LL", "LLG")
FAULT_SIDES = ("MV", "LV")
# (vector group, MV star grounded, LV star grounded)
TOPOLOGIES = {
    "Dy11g": ("Dy11", False, True),
    "Dy11u": ("Dy11", False, False),
    "Yy0gg": ("Yy0", True, True),
    "Yy0gu": ("Yy0", True, False),
    "Yy0ug": ("Yy0", False, True),
    "Yy0uu": ("Yy0", False, False),
}
SUBSTATIONS = {"pc": "petersen", "ug": "none"}
_LOAD_TAG = {"constant": "0", "increase": "inc", "decrease": "dec"}
_SUB_TAG = {v: k for k, v in SUBSTATIONS.items()}

DESK_TRIALS = 500
PAPER_TRIALS = 17_000


@dataclass(frozen=True)
class ScenarioConfig:
    """One test case. ``trials`` is the fixed count (or the cap when
    ``confidence`` stopping is on).

    ``load_trajectory`` refers to the load impedance magnitude: under
    ``"increase"`` the post-event impedance is the larger of two draws.
    """

    id: str
    load_trajectory: str = "constant"
    harmonics: bool = False
    fs: float = 30_000.0
    vector_group: str = "Dy11"
    source_grounding: str = "solid"
    tf_mv_grounded: bool = False
    tf_lv_grounded: bool = True
    fault_type: str = "none"
    fault_side: str = "MV"
    fault_time: float = 0.2
    event_time: float = 0.2
    duration: float = 0.4
    load_mode: str = "random"  # random | rated
    source_asymmetry: float = 0.0
    load_asymmetry: bool = False
    tap_step: tuple[float, float] | None = None
    noise_mode: str = "gain"
    voltage_accuracy: float = 0.001
    current_accuracy: float = 0.01
    lv_voltage_reference: str = "neutral"
    trials: int = DESK_TRIALS
    confidence: float | None = None
    min_trials: int = 30
    seed: int = 0
    dt: float = 1e-6
    paper: bool = False
    params: TransformerParams = field(default=SIM_50KVA, compare=False)

    def __post_init__(self):
        if self.load_trajectory not in LOAD_TRAJECTORIES:
            raise ConfigurationError(f"load_trajectory must be one of {LOAD_TRAJECTORIES}")
        if self.load_mode not in ("random", "rated"):
            raise ConfigurationError("load_mode must be 'random' or 'rated'")
        if self.lv_voltage_reference not in ("neutral", "ground"):
            raise ConfigurationError("lv_voltage_reference must be 'neutral' or 'ground'")
        if self.fault_type != "none" and not 0 < self.fault_time < self.duration:
            raise ConfigurationError("fault_time must fall inside the run")
        if self.vector_group != self.params.vector_group:
            object.__setattr__(self, "params", replace(self.params, vector_group=self.vector_group))
        if self.vector_group.startswith("D") and self.tf_mv_grounded:
            raise ConfigurationError("a delta MV winding cannot be grounded")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")

    @property
    def has_event(self) -> bool:
        return self.load_trajectory != "constant"

    @property
    def family(self) -> str:
        """Id without the sampling rate; trials of one family share circuits."""
        return self.id.rsplit("-", 1)[0] if self.id.endswith("k") else self.id

    def fault_context(self) -> FaultContext:
        return FaultContext(
            fault_type=self.fault_type,
            fault_side=self.fault_side,
            substation_mv_grounded=self.source_grounding != "none",
            tf_vector_group=self.vector_group,
            tf_lv_grounded=self.tf_lv_grounded,
            tf_mv_grounded=self.tf_mv_grounded,
        )


def _fs_tag(fs: float) -> str:
    return f"{fs / 1000:g}k"


def normal_scenarios(trials: int = DESK_TRIALS, seed: int = 0) -> list[ScenarioConfig]:
    out = []
    for load, harm, fs in itertools.product(LOAD_TRAJECTORIES, (False, True), PAPER_FS):
        sid = f"N-{_LOAD_TAG[load]}-{'h' if harm else 'nh'}-{_fs_tag(fs)}"
        out.append(ScenarioConfig(id=sid, load_trajectory=load, harmonics=harm, fs=fs,
                                  trials=trials, seed=seed, paper=True))
    return out


def fault_scenarios(trials: int = 3, seed: int = 0, fs: float = 30_000.0) -> list[ScenarioConfig]:
    out = []
    for ftype, side, sub, topo in itertools.product(FAULT_TYPES, FAULT_SIDES, SUBSTATIONS,
                                                    TOPOLOGIES):
        vg, mv_g, lv_g = TOPOLOGIES[topo]
        sid = f"F-{ftype}-{side}-{sub}-{topo}"
        out.append(ScenarioConfig(
            id=sid, harmonics=True, fs=fs, vector_group=vg,
            source_grounding=SUBSTATIONS[sub], tf_mv_grounded=mv_g, tf_lv_grounded=lv_g,
            fault_type=ftype, fault_side=side, load_mode="rated",
            trials=trials, seed=seed, paper=True))
    return out


def enumerate_paper_scenarios(trials: int = DESK_TRIALS, fault_trials: int = 3,
                              seed: int = 0) -> list[ScenarioConfig]:
    """The 24 normal-operation and 72 fault scenarios, in a fixed order."""
    return normal_scenarios(trials, seed) + fault_scenarios(fault_trials, seed)


def supplementary_scenarios(trials: int = 50, seed: int = 0) -> list[ScenarioConfig]:
    """Unbalance and tap-change cases (not part of the 96-case catalogue)."""
    base = dict(harmonics=False, fs=30_000.0, trials=trials, seed=seed)
    return [
        ScenarioConfig(id="S-asym-source", source_asymmetry=0.1, **base),
        ScenarioConfig(id="S-asym-load", load_asymmetry=True, **base),
        ScenarioConfig(id="S-tap-up", tap_step=(0.2, 1.05), load_mode="rated", **base),
        ScenarioConfig(id="S-tap-down", tap_step=(0.2, 0.95), load_mode="rated", **base),
    ]


def paper_scale(cfg: ScenarioConfig) -> ScenarioConfig:
    """17000-trial cap with 99% confidence stopping at 1% relative half-width."""
    return replace(cfg, trials=PAPER_TRIALS, confidence=0.99)


def find_scenario(sid: str, catalogue=None) -> ScenarioConfig:
    for cfg in catalogue or (enumerate_paper_scenarios() + supplementary_scenarios()):
        if cfg.id == sid:
            return cfg
    raise KeyError(sid)
