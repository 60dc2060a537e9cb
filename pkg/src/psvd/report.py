"""Run reports shared by the CLI and the benchmark harnesses."""

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List

SCHEMA_ID = "psvd-report/1"

# fields that depend on the machine rather than on the computation; they are
# left out when comparing two runs for reproducibility
TIMING_FIELDS = ("wall_time_ms", "timing")


@dataclass
class RunReport:
    command: str
    inputs: Dict[str, object]
    singular_values: List[float] = field(default_factory=list)
    iterations: int = 0
    matvecs: int = 0
    wall_time_ms: float = 0.0
    truncated: bool = False
    unconverged: bool = False
    extra: Dict[str, object] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)
    runs: List["RunReport"] = field(default_factory=list)

    def __post_init__(self):
        sv = [float(s) for s in self.singular_values]
        if any(a < b for a, b in zip(sv, sv[1:])):
            raise ValueError("singular_values must be in descending order")
        if self.matvecs < 0:
            raise ValueError("matvecs must be non-negative")
        self.singular_values = sv

    def to_dict(self, top=True):
        d = {}
        if top:
            d["schema"] = SCHEMA_ID
        d.update(
            command=self.command,
            inputs=dict(self.inputs),
            singular_values=list(self.singular_values),
            iterations=int(self.iterations),
            matvecs=int(self.matvecs),
            wall_time_ms=float(self.wall_time_ms),
            flags={"truncated": bool(self.truncated), "unconverged": bool(self.unconverged)},
            extra=_plain(self.extra),
            timing={k: float(v) for k, v in self.timing.items()},
        )
        if self.runs:
            d["runs"] = [r.to_dict(top=False) for r in self.runs]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _plain(obj):
    """Convert numpy scalars and arrays inside ``obj`` to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _plain(obj.tolist())
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return int(obj)
    return float(obj)


def strip_timing(d):
    """Copy of a report dict without machine-dependent fields."""
    out = {k: v for k, v in d.items() if k not in TIMING_FIELDS}
    if "runs" in out:
        out["runs"] = [strip_timing(r) for r in out["runs"]]
    return out


def load_schema():
    """The JSON schema every report validates against."""
    text = resources.files("psvd").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)
