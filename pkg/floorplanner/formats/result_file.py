"""
Result file format.

A JSON document; floats are written with their shortest round-trip
representation so every numeric field reads back bit-identical.
"""
import json
from typing import Any, Dict

import numpy as np

from floorplanner.errors import ResultParseError
from floorplanner.models import IterationRecord, SolveResult

FORMAT_TAG = "floorplan-result/1"


def result_to_dict(result: SolveResult, include_timings: bool = True) -> Dict[str, Any]:
    """Plain-data view of a SolveResult."""
    data = {
        "format": FORMAT_TAG,
        "instance": result.instance_name,
        "seed": result.seed,
        "config": result.config,
        "hpwl": float(result.hpwl),
        "overlap": float(result.overlap),
        "feasible": bool(result.feasible),
        "converged": bool(result.converged),
        "stalled": bool(result.stalled),
        "iterations": int(result.iterations),
        "post_iterations": int(result.post_iterations),
        "decay_index": int(result.decay_index),
        "anchored_components": int(result.anchored_components),
        "pcg_converged": bool(result.pcg_converged),
        "placement": [float(v) for v in np.asarray(result.placement, dtype=float)],
        "trace": [record.to_dict(include_timings) for record in result.trace],
    }
    if include_timings:
        data["timings"] = {phase: float(seconds) for phase, seconds in result.timings.items()}
    return data


def write_result(result: SolveResult, include_timings: bool = True) -> str:
    """
    Serialize a result.

    Args:
        result: Solve outcome.
        include_timings: Omit every wall-clock field when False, so equal-seed
            runs produce byte-identical files.

    Returns:
        JSON text ending with a newline.
    """
    return json.dumps(result_to_dict(result, include_timings), indent=2) + "\n"


def parse_result(text: str) -> SolveResult:
    """
    Parse a result document written by write_result.

    Raises:
        ResultParseError: Malformed JSON, wrong format tag or missing fields.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ResultParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict) or data.get("format") != FORMAT_TAG:
        raise ResultParseError(f"not a {FORMAT_TAG} document")
    try:
        return SolveResult(
            placement=np.array(data["placement"], dtype=float),
            hpwl=float(data["hpwl"]),
            overlap=float(data["overlap"]),
            iterations=int(data["iterations"]),
            trace=[IterationRecord.from_dict(record) for record in data["trace"]],
            config=data["config"],
            seed=int(data["seed"]),
            feasible=bool(data["feasible"]),
            converged=bool(data["converged"]),
            stalled=bool(data.get("stalled", False)),
            decay_index=int(data.get("decay_index", 0)),
            post_iterations=int(data.get("post_iterations", 0)),
            timings=dict(data.get("timings", {})),
            instance_name=data.get("instance", ""),
            anchored_components=int(data.get("anchored_components", 0)),
            pcg_converged=bool(data.get("pcg_converged", True)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ResultParseError(f"missing or invalid field: {e}") from None
