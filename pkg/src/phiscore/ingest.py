"""CSV ingestion, cleaning filters and corpus-level statistics.

Amounts are parsed into :class:`decimal.Decimal` (pence precision) and
only converted to float inside numerical routines. Malformed rows go to
a rejects list with their line number instead of aborting the run.
"""

from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

# logical field -> CSV header in the council transparency-feed layout
DEFAULT_COLUMNS = {
    "organisation": "Organisation Name",
    "directorate": "Directorate",
    "department": "Department",
    "service_plan": "Service Plan",
    "creditor_name": "Creditor Name",
    "payment_date": "Payment Date",
    "transaction_no": "Transaction No",
    "net_amount": "Net Amount",
    "subjective_group": "Subjective Group",
    "subjective_subgroup": "Subjective Subgroup",
    "subjective_detail": "Subjective Detail",
}
REQUIRED_FIELDS = ("creditor_name", "net_amount")
DEFAULT_DATE_FORMATS = ("%d/%m/%Y", "%Y-%m-%d", "%d-%b-%Y", "%d/%m/%y", "%d %B %Y")

_STRIP_CHARS = re.compile(r"[£$€,\s]")


class ConfigError(ValueError):
    """Bad column mapping or other configuration problem."""


class IngestError(RuntimeError):
    """Input could not be read or produced no usable rows."""


@dataclass(frozen=True)
class RawRow:
    line_no: int
    organisation: str
    directorate: str
    department: str
    service_plan: str
    creditor_name: str
    payment_date: date | None
    transaction_no: str
    net_amount: Decimal
    subjective_group: str
    subjective_subgroup: str
    subjective_detail: str


@dataclass(frozen=True)
class Reject:
    source: str
    line_no: int
    reason: str
    raw: str


@dataclass(frozen=True)
class PaymentRecord:
    supplier_raw: str
    supplier_id: str
    amount: Decimal
    directorate: str
    subjective_detail: str


@dataclass
class CorpusStats:
    n_rows_raw: int
    n_rows_rejected: int
    n_rows_dropped_nonpositive: int
    n_rows_clean: int
    n_raw_names: int
    total_spend: Decimal
    min_amount: Decimal
    max_amount: Decimal
    median_amount: Decimal
    n_duplicate_transaction_no: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if k == "extra":
                continue
            out[k] = str(v) if isinstance(v, Decimal) else v
        out.update(self.extra)
        return out


def parse_amount(text: str) -> Decimal:
    """Parse a currency string such as '£1,234.50' or '(12.00)'."""
    s = _STRIP_CHARS.sub("", text or "")
    neg = s.startswith("(") and s.endswith(")")
    if neg:
        s = s[1:-1]
    if not s:
        raise InvalidOperation("empty amount")
    value = Decimal(s)
    if not value.is_finite():
        raise InvalidOperation("non-finite amount")
    return -value if neg else value


def parse_date(text: str, formats: Iterable[str] = DEFAULT_DATE_FORMATS) -> date | None:
    text = (text or "").strip()
    if not text:
        return None
    for fmt in formats:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


def parse_csv(
    path,
    columns: Mapping[str, str] = DEFAULT_COLUMNS,
    delimiter: str = ",",
    encoding: str = "utf-8-sig",
    date_formats: Iterable[str] = DEFAULT_DATE_FORMATS,
) -> tuple[list[RawRow], list[Reject]]:
    """Read one payment CSV into RawRows plus a list of rejected lines."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"input file not found: {path}")
    rows: list[RawRow] = []
    rejects: list[Reject] = []
    date_formats = tuple(date_formats)
    with path.open(newline="", encoding=encoding) as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        absent = [f for f in REQUIRED_FIELDS if f not in columns]
        if absent:
            raise ConfigError(f"column mapping lacks required field(s) {absent}")
        missing = [col for col in columns.values() if col not in header]
        if missing:
            raise ConfigError(f"{path}: missing mapped column(s) {missing}")
        index = {f: header.index(col) for f, col in columns.items()}
        for rec in reader:
            line_no = reader.line_num
            if not any(c.strip() for c in rec):
                continue

            def get(f):
                i = index.get(f)
                return rec[i].strip() if i is not None and i < len(rec) else ""

            raw = delimiter.join(rec)
            name = get("creditor_name")
            if not name:
                rejects.append(Reject(str(path), line_no, "empty creditor name", raw))
                continue
            try:
                amount = parse_amount(get("net_amount"))
            except (InvalidOperation, ValueError):
                rejects.append(Reject(str(path), line_no, f"unparseable amount {get('net_amount')!r}", raw))
                continue
            rows.append(
                RawRow(
                    line_no=line_no,
                    organisation=get("organisation"),
                    directorate=get("directorate"),
                    department=get("department"),
                    service_plan=get("service_plan"),
                    creditor_name=name,
                    payment_date=parse_date(get("payment_date"), date_formats),
                    transaction_no=get("transaction_no"),
                    net_amount=amount,
                    subjective_group=get("subjective_group"),
                    subjective_subgroup=get("subjective_subgroup"),
                    subjective_detail=get("subjective_detail"),
                )
            )
    logger.info("%s: %d rows, %d rejects", path, len(rows), len(rejects))
    return rows, rejects


def write_rejects(rejects: list[Reject], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "line_no", "reason", "raw"])
        for r in rejects:
            w.writerow([r.source, r.line_no, r.reason, r.raw])


def filter_positive(rows: list[RawRow]) -> tuple[list[RawRow], int]:
    kept = [r for r in rows if r.net_amount > 0]
    return kept, len(rows) - len(kept)


def group_by_supplier(records: Iterable[PaymentRecord]) -> dict[str, list[PaymentRecord]]:
    groups: dict[str, list[PaymentRecord]] = {}
    for r in records:
        groups.setdefault(r.supplier_id, []).append(r)
    return groups


def select_high_volume(groups: Mapping[str, list], min_n: int = 50) -> set[str]:
    return {sid for sid, recs in groups.items() if len(recs) >= min_n}


def _decimal_median(values: list[Decimal]) -> Decimal:
    s = sorted(values)
    n = len(s)
    mid = n // 2
    return s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2


def corpus_stats(raw_rows: list[RawRow], clean_rows: list[RawRow], n_rejected: int = 0) -> CorpusStats:
    if not clean_rows:
        raise IngestError("no positive-amount rows after cleaning")
    amounts = [r.net_amount for r in clean_rows]
    tx = Counter(r.transaction_no for r in raw_rows if r.transaction_no)
    dupes = sum(c - 1 for c in tx.values() if c > 1)
    return CorpusStats(
        n_rows_raw=len(raw_rows),
        n_rows_rejected=n_rejected,
        n_rows_dropped_nonpositive=len(raw_rows) - len(clean_rows),
        n_rows_clean=len(clean_rows),
        n_raw_names=len({r.creditor_name for r in raw_rows}),
        total_spend=sum(amounts, Decimal(0)),
        min_amount=min(amounts),
        max_amount=max(amounts),
        median_amount=_decimal_median(amounts),
        n_duplicate_transaction_no=dupes,
    )
