"""JSON run reports with a fixed key order and a bundled schema."""

from __future__ import annotations

import json
from importlib import resources

from .checker import Counterexample, Verdict
from .circuit import Circuit

EXIT_EQUIVALENT = 0
EXIT_NOT_EQUIVALENT = 1
EXIT_PROBABLY_EQUIVALENT = 2
EXIT_USAGE = 3
EXIT_INPUT = 4


def _seconds(t: float | None, timings: bool) -> float | None:
    return round(t, 3) if timings and t is not None else None


def _state(amps: dict[int, complex] | None, n: int, limit: int = 256):
    if amps is None:
        return None
    items = list(amps.items())[:limit]
    return [[format(i, f"0{n}b"), a.real, a.imag] for i, a in items]


def counterexample_dict(cex: Counterexample | None):
    if cex is None:
        return None
    return {
        "kind": cex.kind.value,
        "indices": list(cex.indices),
        "input": cex.describe(),
        "fidelity": cex.fidelity,
        "input_state": _state(cex.input_state, cex.n),
        "output_g": _state(cex.output_g, cex.n),
        "output_g2": _state(cex.output_g2, cex.n),
    }


def run_report(name: str, g: Circuit, g2: Circuit, verdict: Verdict, seed: int,
               timings: bool = True) -> dict:
    """Report for one check; keys always appear in this order."""
    s = verdict.stats
    return {
        "benchmark": name,
        "n": g.n,
        "gates_g": len(g.gates),
        "gates_g2": len(g2.gates),
        "verdict": verdict.outcome.value,
        "phase": verdict.phase,
        "counterexample": counterexample_dict(verdict.counterexample),
        "num_sims": s.num_sims,
        "t_sim": _seconds(s.t_sim, timings),
        "t_ec": _seconds(s.t_ec, timings),
        "t_total": _seconds(s.t_total, timings),
        "max_nodes": s.max_nodes,
        "avg_nodes": round(s.avg_nodes, 6),
        "strategy": verdict.strategy.value if verdict.strategy else None,
        "seed": seed,
        "timed_out": verdict.timed_out,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def load_schema(name: str = "report_schema.json") -> dict:
    return json.loads(resources.files("ddequiv").joinpath(name).read_text())
