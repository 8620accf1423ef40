"""JSON serialization of selection results.

Floats are written with Python's shortest round-trip representation, so a
re-read reproduces every value bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .lattice import members_of

SCHEMA_VERSION = 1


def set_entry(bits: int, names: Sequence[str], loss: float, cost: float = 0.0,
              inclusion=None) -> dict:
    members = members_of(int(bits))
    entry = {
        "bits": int(bits),
        "members": [names[j] for j in members],
        "loss": float(loss),
        "cost": float(cost),
        "total": float(loss) + float(cost),
    }
    if inclusion is not None:
        entry["inclusion"] = {names[j]: float(inclusion[j]) for j in members}
    return entry


def results_document(outcome=None, names: Sequence[str] = (), inclusion_all=None,
                     top: Optional[int] = None) -> dict:
    """Rank-ordered result document for a :class:`~econsel.econ.SelectionOutcome`.

    ``inclusion_all`` (shape ``(2**p, p)``) supplies within-set inclusion
    probabilities; the optimum always carries its own.
    """
    doc = {"schema_version": SCHEMA_VERSION, "sets": []}
    if outcome is None:
        return doc
    for s, loss, cost, _ in outcome.entries(top):
        incl = None if inclusion_all is None else inclusion_all[s.bits]
        doc["sets"].append(set_entry(s.bits, names, loss, cost, incl))
    opt = outcome.optimum.bits
    doc["optimum"] = set_entry(opt, names, outcome.loss[opt], outcome.cost[opt],
                               outcome.inclusion)
    return doc


def sweep_document(sweep, names) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "sweep": [
            {"price": float(res.price),
             "optimum": set_entry(res.optimum.bits, names, res.loss[res.optimum.bits],
                                  res.cost[res.optimum.bits], res.inclusion)}
            for res in sweep
        ],
    }


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, default=_default, allow_nan=False) + "\n"


def export_results(doc: dict, path=None) -> str:
    """Serialize ``doc``; also write it to ``path`` when given."""
    text = dumps(doc)
    if path is not None:
        path = Path(path)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc}") from exc
    return text


def load_results(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
