"""CSV exports.

Every writer uses ``\\n`` line endings and fixed column order so two runs with
the same inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

from superdist.core.market import CurveRow
from superdist.core.overlay import CdoGraph, HomogeneityReport, RonLedger, party_label

PathLike = Union[str, Path]

EDGES_HEADER = ["seller", "buyer", "price_cents", "quality", "entry_index"]
LEDGER_HEADER = ["payer", "payee", "amount_cents", "reason", "transaction_index"]
CURVE_HEADER = ["saturation", "price_cents", "expected_revenue", "effective_price"]
ADOPTION_HEADER = ["bucket_start_saturation", "legit_fraction"]
REVENUE_HEADER = ["entry_index", "mean_cents", "std_error"]
HOMOGENEITY_HEADER = ["metric", "value"]


def _write(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return target


def _real(value: float) -> str:
    return f"{value:.6f}"


def write_edges(graph: CdoGraph, path: PathLike) -> Path:
    rows = (
        [e.seller, e.buyer, e.price_paid, _real(e.quality), e.entry_index] for e in graph.edges
    )
    return _write(path, EDGES_HEADER, rows)


def write_ledger(ledger: RonLedger, path: PathLike) -> Path:
    rows = (
        [
            party_label(e.payer),
            party_label(e.payee),
            e.amount,
            e.reason_label,
            e.transaction_index,
        ]
        for e in ledger.entries
    )
    return _write(path, LEDGER_HEADER, rows)


def write_curve(rows: List[CurveRow], path: PathLike) -> Path:
    data = (
        [_real(r.saturation), r.price, _real(r.expected_revenue), _real(r.effective_price)]
        for r in rows
    )
    return _write(path, CURVE_HEADER, data)


def write_adoption(adoption: List[Tuple[float, float]], path: PathLike) -> Path:
    return _write(path, ADOPTION_HEADER, ([_real(s), _real(f)] for s, f in adoption))


def write_revenue_by_index(
    means: Sequence[float], errors: Sequence[float], path: PathLike
) -> Path:
    rows = ([n, _real(m), _real(e)] for n, (m, e) in enumerate(zip(means, errors)))
    return _write(path, REVENUE_HEADER, rows)


def write_homogeneity(report: HomogeneityReport, path: PathLike) -> Path:
    rows = (
        [name, value if isinstance(value, int) else _real(value)]
        for name, value in report.to_dict().items()
    )
    return _write(path, HOMOGENEITY_HEADER, rows)
