"""Network JSON schema and sweep CSV output.

The JSON layout is strict: unknown fields are rejected at both the document
and node level, node values are per-unit floats, and the base declarations
(s_base_mva, v_base_kv) travel with the file for SI conversion bookkeeping.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import InvalidNetwork
from .network import Network, NodeSpec, build_network

_DOC_FIELDS = {"s_base_mva", "v_base_kv", "mu_lo", "mu_hi", "nu0", "nodes"}
_NODE_FIELDS = {
    "id", "parent", "r_pu", "x_pu", "pc_nom", "qc_nom",
    "der_cap", "nu_lo", "nu_hi", "W", "C", "gamma_lo",
}

CSV_HEADER = (
    "M,wc_ratio,gamma_lo,model,lovr,voll,ll,total,"
    "iterations,converged,delta_star,runtime_ms,error"
)


def network_to_json(
    net: Network,
    s_base_mva: float = 1.0,
    v_base_kv: float = 4.0,
) -> str:
    doc = {
        "s_base_mva": s_base_mva,
        "v_base_kv": v_base_kv,
        "mu_lo": net.mu_lo,
        "mu_hi": net.mu_hi,
        "nu0": net.nu0,
        "nodes": [
            {
                "id": i,
                "parent": None if i == 0 else int(net.parent[i]),
                "r_pu": float(net.r[i]),
                "x_pu": float(net.x[i]),
                "pc_nom": float(net.sc_nom[i].real),
                "qc_nom": float(net.sc_nom[i].imag),
                "der_cap": float(net.der_cap[i]),
                "nu_lo": float(net.nu_lo[i]),
                "nu_hi": float(net.nu_hi[i]),
                "W": float(net.W[i]),
                "C": float(net.C[i]),
                "gamma_lo": float(net.gamma_lo[i]),
            }
            for i in range(net.n + 1)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def network_from_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidNetwork(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidNetwork("top-level JSON value must be an object")
    unknown = set(doc) - _DOC_FIELDS
    if unknown:
        raise InvalidNetwork(f"unknown fields {sorted(unknown)} in network document")
    missing = _DOC_FIELDS - set(doc)
    if missing:
        raise InvalidNetwork(f"missing fields {sorted(missing)} in network document")

    specs = []
    for row in doc["nodes"]:
        unknown = set(row) - _NODE_FIELDS
        if unknown:
            raise InvalidNetwork(f"unknown node fields {sorted(unknown)}")
        missing = _NODE_FIELDS - set(row)
        if missing:
            raise InvalidNetwork(f"missing node fields {sorted(missing)}")
        specs.append(
            NodeSpec(
                id=int(row["id"]),
                parent=None if row["parent"] is None else int(row["parent"]),
                r_pu=float(row["r_pu"]),
                x_pu=float(row["x_pu"]),
                pc_nom=float(row["pc_nom"]),
                qc_nom=float(row["qc_nom"]),
                der_cap=float(row["der_cap"]),
                nu_lo=float(row["nu_lo"]),
                nu_hi=float(row["nu_hi"]),
                W=float(row["W"]),
                C=float(row["C"]),
                gamma_lo=float(row["gamma_lo"]),
            )
        )
    return build_network(
        specs,
        nu0=float(doc["nu0"]),
        mu_lo=float(doc["mu_lo"]),
        mu_hi=float(doc["mu_hi"]),
    )


def save_network(net: Network, path: str | Path, **bases) -> None:
    Path(path).write_text(network_to_json(net, **bases), encoding="utf-8")


def load_network(path: str | Path) -> Network:
    return network_from_json(Path(path).read_text(encoding="utf-8"))


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def sweep_rows_to_csv(rows) -> str:
    """Render sweep rows with the fixed header and 9-significant-digit floats."""
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row.M),
                    _fmt(row.wc_ratio),
                    _fmt(row.gamma_lo),
                    row.model,
                    _fmt(row.lovr) if row.error == "" else "",
                    _fmt(row.voll) if row.error == "" else "",
                    _fmt(row.ll) if row.error == "" else "",
                    _fmt(row.total) if row.error == "" else "",
                    str(row.iterations) if row.error == "" else "",
                    str(row.converged).lower() if row.error == "" else "",
                    row.delta_star,
                    _fmt(row.runtime_ms),
                    row.error,
                ]
            )
        )
    return "\n".join(lines) + "\n"
