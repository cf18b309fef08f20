from dataclasses import dataclass, field
from enum import Enum, unique
import json
import math
from typing import Any, Dict, List, Optional


# Let this enum inherit from string to enable JSON serialization.
@unique
class Method(str, Enum):
    CLOSED_FORM = "closed-form"
    FOXH = "foxh"
    GCQ = "gcq"
    QUADRATURE = "quadrature"
    SERIES = "series"
    MONTE_CARLO = "monte-carlo"
    FAILED = "failed"


@dataclass(frozen=True)
class MetricResult:
    """
    A computed statistic together with the path that produced it. `note`
    records method downgrades (e.g. a Fox-H evaluation that fell back to
    quadrature) and guarded divisions.
    """

    value: float
    method: Method
    err_est: Optional[float] = None
    note: str = ""


@dataclass
class RunRecord:
    """
    Everything needed to reproduce an emitted result: the echoed inputs, the
    results, the tool version, the seed and a timestamp (ISO-8601, UTC).
    """

    inputs: Dict[str, Any]
    results: List[Any] = field(default_factory=list)
    tool_version: str = ""
    seed: Optional[int] = None
    timestamp: str = ""


def json_number(value: Optional[float]):
    """JSON has no inf/nan; emit them as strings"""
    if value is None:
        return None
    if math.isfinite(value):
        return value
    return str(value)


class MetricResultEncoder(json.JSONEncoder):
    """
    Encodes MetricResult objects to JSON strings
    """

    def default(self, res: MetricResult):
        if type(res) is not MetricResult:
            # let the base class default method raise the TypeError
            return json.JSONEncoder.default(self, res)
        encoded = {
            "type": MetricResult.__name__.lower(),
            "value": json_number(res.value),
            "method": res.method.value,
            "err_est": json_number(res.err_est),
        }
        if res.note:
            encoded["note"] = res.note
        return encoded


class MetricResultDecoder(json.JSONDecoder):
    """
    Decodes JSON strings to MetricResult objects
    """

    def __init__(self, *args, **kwargs):
        json.JSONDecoder.__init__(self, object_hook=self.decode_hook, *args, **kwargs)

    def decode_hook(self, dct: dict):
        type_ = dct.get("type", None)
        if not type_ or type_ != MetricResult.__name__.lower():
            return dct
        err = dct.get("err_est", None)
        return MetricResult(
            float(dct["value"]),
            Method(dct["method"]),
            None if err is None else float(err),
            dct.get("note", ""),
        )


class RunRecordEncoder(MetricResultEncoder):
    """
    Encodes RunRecord objects (and the MetricResults they carry) to JSON
    """

    def default(self, rec: RunRecord):
        if type(rec) is not RunRecord:
            return super(RunRecordEncoder, self).default(rec)
        return {
            "type": RunRecord.__name__.lower(),
            "tool_version": rec.tool_version,
            "seed": rec.seed,
            "timestamp": rec.timestamp,
            "inputs": rec.inputs,
            "results": rec.results,
        }
