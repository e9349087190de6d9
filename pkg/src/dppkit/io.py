"""Plain-text kernel and cost files, and the JSON model file."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import SymmetricKernel, as_kernel
from .learn import ConditionalModel

__all__ = ["read_kernel", "write_kernel", "read_costs", "write_costs", "save_model", "load_model"]

MODEL_FORMAT = "dppkit-model/1"


def write_kernel(path, L) -> None:
    """First line ``n``, then ``n`` rows of ``%.17g`` floats."""
    M = as_kernel(L).matrix
    lines = [str(M.shape[0])]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_kernel(path, check: bool = True) -> SymmetricKernel:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty kernel file")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise ValueError(f"{path}: first line must be the item count, got {lines[0]!r}") from None
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], 2):
        vals = ln.split()
        if len(vals) != n:
            raise ValueError(f"{path}:{k}: expected {n} values, found {len(vals)}")
        rows.append([float(v) for v in vals])
    return SymmetricKernel(np.array(rows, dtype=float).reshape(n, n), check=check)


def write_costs(path, costs) -> None:
    Path(path).write_text("".join(f"{float(c):.17g}\n" for c in costs))


def read_costs(path) -> np.ndarray:
    vals = []
    for k, ln in enumerate(Path(path).read_text().splitlines(), 1):
        if ln.strip():
            try:
                vals.append(float(ln))
            except ValueError:
                raise ValueError(f"{path}:{k}: not a number: {ln!r}") from None
    return np.array(vals, dtype=float)


def _num(x: float):
    return "inf" if math.isinf(x) else float(x)


def save_model(path, model: ConditionalModel, config=None, logistic=None) -> None:
    """Write a model (plus feature settings and the MMR quality model) as JSON."""
    doc = {
        "format": MODEL_FORMAT,
        "m": model.m,
        "theta": [float(t) for t in model.theta],
        "sigma2": _num(model.sigma2),
        "rho": None if model.rho is None else float(model.rho),
        "feature_names": list(model.feature_names),
        "bin_edges": model.bin_edges,
        "status": model.status,
    }
    if config is not None:
        doc["features"] = {
            "rho": config.rho,
            "local_sim_bins": config.local_sim_bins,
            "local_lex_bins": config.local_lex_bins,
            "bin_edges": config.bin_edges(),
            "idf": config.idf.to_dict(),
        }
    if logistic is not None:
        doc["logistic_quality"] = logistic.to_dict()
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path):
    """Returns ``(model, config, logistic)``; the last two may be ``None``."""
    from .text.features import FeatureConfig, IdfTable
    from .text.pipeline import LogisticQuality

    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    theta = np.array(doc["theta"], dtype=float)
    if theta.shape[0] != doc["m"]:
        raise ValueError(f"{path}: m={doc['m']} but {theta.shape[0]} theta entries")
    sigma2 = math.inf if doc["sigma2"] == "inf" else float(doc["sigma2"])
    model = ConditionalModel(
        theta=theta,
        sigma2=sigma2,
        rho=doc.get("rho"),
        feature_names=tuple(doc.get("feature_names", ())),
        bin_edges=doc.get("bin_edges", {}),
        status=doc.get("status", {}),
    )
    config = None
    if "features" in doc:
        f = doc["features"]
        edges = f["bin_edges"]
        config = FeatureConfig(
            rho=float(f["rho"]),
            idf=IdfTable.from_dict(f["idf"]),
            length_edges=edges["length"],
            meansim_edges=edges["meansim"],
            lexrank_edges=edges["lexrank"],
            local_sim_bins=int(f["local_sim_bins"]),
            local_lex_bins=int(f["local_lex_bins"]),
        )
    logistic = LogisticQuality.from_dict(doc["logistic_quality"]) if "logistic_quality" in doc else None
    return model, config, logistic
