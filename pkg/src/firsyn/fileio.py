"""File formats: system/controller/gains documents, sweep CSV, sweep SVG.

Documents are strict-UTF-8 JSON with decimal numbers only (NaN/Infinity
tokens are rejected).  Floats are written with ``repr`` so parsing them
back is bit-exact.  The sweep CSV is RFC-4180-style (CRLF line endings,
mandatory header); the sweep SVG holds exactly one polyline per statistic
series plus a min-max band polygon.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import ContractError
from .sysmodel import (
    DynamicController,
    FirGains,
    StateSpaceSystem,
    TransferFunction,
)

SWEEP_CSV_HEADER = ("order", "median_rho", "best_rho", "worst_rho", "runs", "evals")
BENCH_CSV_HEADER = ("system", "check", "expected", "observed", "ok")


def _reject_constant(token: str):
    raise ContractError(f"non-decimal numeric token {token!r} is not allowed")


def _loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:  # message carries line/column
        raise ContractError(f"invalid document: {exc}") from exc


def _numeric_matrix(value, field: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ContractError(f"field {field!r}: not a rectangular numeric array ({exc})")
    if arr.ndim != 2:
        raise ContractError(f"field {field!r}: expected a nested (2-D) array")
    return arr


def _numeric_vector(value, field: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ContractError(f"field {field!r}: not a numeric array ({exc})")
    if arr.ndim != 1:
        raise ContractError(f"field {field!r}: expected a flat coefficient array")
    return arr


def _require(doc: dict, field: str):
    if field not in doc:
        raise ContractError(f"missing field {field!r}")
    return doc[field]


def load_system_text(text: str) -> tuple[str, object]:
    """Parse a system document; returns (name, model)."""
    doc = _loads(text)
    if not isinstance(doc, dict):
        raise ContractError("system document must be a JSON object")
    name = str(doc.get("name", "unnamed"))
    kind = _require(doc, "kind")
    if kind == "state_space":
        return name, StateSpaceSystem(
            A=_numeric_matrix(_require(doc, "A"), "A"),
            B=_numeric_matrix(_require(doc, "B"), "B"),
            C=_numeric_matrix(_require(doc, "C"), "C"),
        )
    if kind == "transfer_function":
        return name, TransferFunction(
            num=_numeric_vector(_require(doc, "num"), "num"),
            den=_numeric_vector(_require(doc, "den"), "den"),
        )
    raise ContractError(f"unknown system kind {kind!r}")


def load_system(path) -> tuple[str, object]:
    with open(path, encoding="utf-8") as fh:
        return load_system_text(fh.read())


def system_document(name: str, model) -> str:
    if isinstance(model, StateSpaceSystem):
        doc = {
            "name": name,
            "kind": "state_space",
            "A": model.A.tolist(),
            "B": model.B.tolist(),
            "C": model.C.tolist(),
        }
    elif isinstance(model, TransferFunction):
        doc = {
            "name": name,
            "kind": "transfer_function",
            "num": model.num.tolist(),
            "den": model.den.tolist(),
        }
    else:
        raise ContractError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def save_system(path, name: str, model) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(system_document(name, model))


def gains_document(name: str, gains: FirGains, diagnostics: dict | None = None) -> str:
    doc = {
        "name": name,
        "kind": "fir_gains",
        "order": gains.order,
        "gains": [g.tolist() for g in gains.gains],
    }
    if diagnostics:
        doc.update(diagnostics)
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def save_gains(path, name: str, gains: FirGains, diagnostics: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(gains_document(name, gains, diagnostics))


def load_gains(path) -> tuple[str, FirGains, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = _loads(fh.read())
    if not isinstance(doc, dict) or doc.get("kind") != "fir_gains":
        raise ContractError("not a gains document")
    blocks = [_numeric_matrix(g, f"gains[{i}]") for i, g in enumerate(_require(doc, "gains"))]
    extra = {k: v for k, v in doc.items() if k not in ("name", "kind", "order", "gains")}
    return str(doc.get("name", "unnamed")), FirGains(tuple(blocks)), extra


def load_controller(path) -> tuple[str, DynamicController]:
    """Parse a dynamic-controller document holding H, G, E, D."""
    with open(path, encoding="utf-8") as fh:
        doc = _loads(fh.read())
    if not isinstance(doc, dict) or doc.get("kind") != "dynamic_controller":
        raise ContractError("not a dynamic-controller document")
    name = str(doc.get("name", "unnamed"))
    return name, DynamicController(
        H=_numeric_matrix(_require(doc, "H"), "H"),
        G=_numeric_matrix(_require(doc, "G"), "G"),
        E=_numeric_matrix(_require(doc, "E"), "E"),
        D=_numeric_matrix(_require(doc, "D"), "D"),
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_csv(outcomes) -> str:
    """CSV rows (order, median_rho, best_rho, worst_rho, runs, evals)."""
    lines = [",".join(SWEEP_CSV_HEADER)]
    for out in outcomes:
        lines.append(",".join(_fmt(v) for v in (
            out.order,
            float(out.median_rho),
            float(out.best_rho),
            float(max(out.per_run_rhos)),
            len(out.per_run_rhos),
            out.evals_used,
        )))
    return "\r\n".join(lines) + "\r\n"


def write_sweep_csv(path, outcomes) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sweep_csv(outcomes))


def bench_csv(rows) -> str:
    """Summary CSV for the benchmark reproduction run."""
    lines = [",".join(BENCH_CSV_HEADER)]
    for system, check, expected, observed, ok in rows:
        lines.append(",".join((system, check, str(expected), str(observed),
                               "pass" if ok else "FAIL")))
    return "\r\n".join(lines) + "\r\n"


def write_bench_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(bench_csv(rows))


def sweep_svg(outcomes, title: str = "") -> str:
    """Line plot of the median closed-loop spectral radius vs FIR order
    with a min-max band; one polyline per statistic series."""
    width, height = 640, 420
    left, right, top, bottom = 60, 20, 40, 50
    orders = [out.order for out in outcomes]
    medians = [float(out.median_rho) for out in outcomes]
    bests = [float(out.best_rho) for out in outcomes]
    worsts = [float(max(out.per_run_rhos)) for out in outcomes]
    x_lo, x_hi = min(orders), max(orders)
    x_span = max(x_hi - x_lo, 1)
    y_hi = max(max(worsts), 1.0) * 1.05
    y_lo = 0.0

    def px(order):
        return left + (order - x_lo) / x_span * (width - left - right)

    def py(rho):
        return height - bottom - (rho - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    def pts(values):
        return " ".join(f"{px(o):.2f},{py(v):.2f}" for o, v in zip(orders, values))

    band = pts(worsts) + " " + " ".join(
        f"{px(o):.2f},{py(v):.2f}" for o, v in zip(reversed(orders), reversed(bests))
    )
    unit_y = py(1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">'
        f"{title or 'closed-loop spectral radius vs FIR order'}</text>",
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{unit_y:.2f}" x2="{width - right}" y2="{unit_y:.2f}" '
        'stroke="#999999" stroke-dasharray="4 3"/>',
        f'<text x="{width - right}" y="{unit_y - 4:.2f}" text-anchor="end" '
        'font-size="11" fill="#666666">rho = 1</text>',
        f'<polygon points="{band}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>',
        f'<polyline points="{pts(medians)}" fill="none" stroke="#08519c" stroke-width="2"/>',
        f'<polyline points="{pts(bests)}" fill="none" stroke="#31a354" stroke-width="1"/>',
        f'<polyline points="{pts(worsts)}" fill="none" stroke="#de2d26" stroke-width="1"/>',
    ]
    for o in orders:
        parts.append(
            f'<text x="{px(o):.2f}" y="{height - bottom + 18}" text-anchor="middle" '
            f'font-size="11">{o}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        val = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{left - 8}" y="{py(val) + 4:.2f}" text-anchor="end" '
            f'font-size="11">{val:.2f}</text>'
        )
    parts.append(
        f'<text x="{(left + width - right) / 2:.0f}" y="{height - 10}" '
        'text-anchor="middle" font-size="12">FIR order</text>'
    )
    legend_y = top + 8
    parts.append(
        f'<text x="{width - right - 4}" y="{legend_y}" text-anchor="end" font-size="11">'
        "median (blue) / best = min (green) / worst = max (red); "
        "band: min-max across runs</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_sweep_svg(path, outcomes, title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sweep_svg(outcomes, title))
