"""Financial-impact statistics over block-explorer transaction exports.

Money stays in integer wei until the final USD conversion, which applies a
per-day close price (exact rational arithmetic, floated only for output).
Transaction CSV header: ``hash,from,to,value_wei,timestamp,method,is_error``
with epoch-second timestamps; price CSV header: ``date,usd``.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from datetime import date, datetime
from fractions import Fraction
from pathlib import Path

from . import stats
from .timefmt import from_epoch

WEI_PER_ETH = 10 ** 18
_MAX_VALUE = 2 ** 256
_HASH_RE = re.compile(r"^0x[0-9a-fA-F]{64}$")
_ADDR_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")

TX_HEADER = ["hash", "from", "to", "value_wei", "timestamp", "method", "is_error"]


class LedgerError(ValueError):
    pass


class PriceError(KeyError):
    """Price table does not cover a required day."""


@dataclass(frozen=True)
class ChainTransaction:
    hash: str
    from_address: str
    to_address: str
    value_wei: int
    timestamp: datetime
    method: str | None
    is_error: bool

    def __post_init__(self):
        if not _HASH_RE.match(self.hash):
            raise LedgerError(f"malformed transaction hash: {self.hash!r}")
        if not _ADDR_RE.match(self.from_address) or not _ADDR_RE.match(self.to_address):
            raise LedgerError(f"{self.hash}: malformed from/to address")
        if not 0 <= self.value_wei < _MAX_VALUE:
            raise LedgerError(f"{self.hash}: value_wei out of 256-bit range")


def parse_transactions(path: str | Path) -> list[ChainTransaction]:
    """Parse a ledger CSV; rejects malformed rows and duplicate hashes."""
    path = Path(path)
    txs: list[ChainTransaction] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TX_HEADER:
            raise LedgerError(
                f"{path}: expected header {','.join(TX_HEADER)}, "
                f"got {','.join(reader.fieldnames or [])}"
            )
        for row in reader:
            line = reader.line_num
            try:
                tx = ChainTransaction(
                    hash=row["hash"].strip(),
                    from_address=row["from"].strip(),
                    to_address=row["to"].strip(),
                    value_wei=int(row["value_wei"].strip()),
                    timestamp=from_epoch(float(row["timestamp"].strip())),
                    method=(row["method"] or "").strip() or None,
                    is_error=row["is_error"].strip() in ("1", "true", "True"),
                )
            except (LedgerError, ValueError, KeyError) as exc:
                raise LedgerError(f"{path}:{line}: malformed row: {exc}") from exc
            if tx.hash.lower() in seen:
                raise LedgerError(f"{path}:{line}: duplicate hash {tx.hash}")
            seen.add(tx.hash.lower())
            txs.append(tx)
    return txs


class PriceTable:
    """Per-day USD close price of the chain's native currency."""

    def __init__(self, prices: dict[date, Fraction]):
        self._prices = dict(prices)

    @classmethod
    def load(cls, path: str | Path) -> "PriceTable":
        prices: dict[date, Fraction] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                prices[date.fromisoformat(row["date"].strip())] = Fraction(
                    row["usd"].strip()
                )
        return cls(prices)

    def price_for(self, at: datetime) -> Fraction:
        day = at.date()
        if day not in self._prices:
            raise PriceError(f"no USD price for {day.isoformat()}")
        return self._prices[day]


@dataclass(frozen=True)
class WalletSummary:
    wallet: str
    inbound_tx_count: int
    inbound_total_wei: int
    inbound_total_usd: float
    zero_value_tx_count: int
    mint_intent_count: int
    window: tuple[datetime | None, datetime | None]

    def as_dict(self) -> dict:
        return {
            "wallet": self.wallet,
            "inbound_tx_count": self.inbound_tx_count,
            "inbound_total_wei": str(self.inbound_total_wei),
            "inbound_total_usd": self.inbound_total_usd,
            "zero_value_tx_count": self.zero_value_tx_count,
            "mint_intent_count": self.mint_intent_count,
        }


def wallet_summary(
    txs,
    wallet: str,
    prices: PriceTable,
    window: tuple[datetime | None, datetime | None] = (None, None),
) -> WalletSummary:
    """Inbound totals for one wallet over an optional [from, to) window.

    Only non-error transactions with ``to == wallet`` count. Zero-value
    transactions are tallied separately, with the mint-intent subset
    identified by "mint" occurring in the method name.
    """
    wallet_lc = wallet.lower()
    start, end = window
    total_wei = 0
    total_usd = Fraction(0)
    count = zero_count = mint_count = 0
    seen_ts: list[datetime] = []
    for tx in txs:
        if tx.to_address.lower() != wallet_lc or tx.is_error:
            continue
        if start is not None and tx.timestamp < start:
            continue
        if end is not None and tx.timestamp >= end:
            continue
        count += 1
        seen_ts.append(tx.timestamp)
        total_wei += tx.value_wei
        if tx.value_wei == 0:
            zero_count += 1
            if tx.method and "mint" in tx.method.lower():
                mint_count += 1
        else:
            total_usd += Fraction(tx.value_wei, WEI_PER_ETH) * prices.price_for(
                tx.timestamp
            )
    if start is None and seen_ts:
        start = min(seen_ts)
    if end is None and seen_ts:
        end = max(seen_ts)
    return WalletSummary(
        wallet=wallet,
        inbound_tx_count=count,
        inbound_total_wei=total_wei,
        inbound_total_usd=float(total_usd),
        zero_value_tx_count=zero_count,
        mint_intent_count=mint_count,
        window=(start, end),
    )


@dataclass(frozen=True)
class CategoryStats:
    category: str
    n_wallets: int
    funds: stats.Descriptive
    tx_counts: stats.Descriptive
    excluded: tuple[tuple[str, float], ...]  # (wallet, usd) dropped by IQR rule

    def as_dict(self) -> dict:
        return {
            "category": self.category,
            "n_wallets": self.n_wallets,
            "funds_usd": self.funds.as_dict(),
            "transactions": self.tx_counts.as_dict(),
            "excluded_wallets": [
                {"wallet": w, "usd": v} for w, v in self.excluded
            ],
        }


def category_stats(
    summaries_by_category: dict[str, list[WalletSummary]],
    iqr_categories=(),
    iqr_k: float = 1.5,
) -> dict[str, CategoryStats]:
    """Descriptive funds/transaction statistics per category.

    Categories named in ``iqr_categories`` drop wallets whose USD total
    falls outside the k*IQR fences before computing statistics; exclusions
    are reported, not silently discarded.
    """
    out: dict[str, CategoryStats] = {}
    for category, summaries in summaries_by_category.items():
        if not summaries:
            raise LedgerError(f"category {category!r} has no wallets")
        kept = list(summaries)
        excluded: list[tuple[str, float]] = []
        if category in iqr_categories and len(kept) >= 2:
            lo, hi = stats.iqr_bounds([s.inbound_total_usd for s in kept], iqr_k)
            excluded = [
                (s.wallet, s.inbound_total_usd)
                for s in kept
                if not lo <= s.inbound_total_usd <= hi
            ]
            kept = [s for s in kept if lo <= s.inbound_total_usd <= hi]
            if not kept:  # refuse to exclude everything
                kept, excluded = list(summaries), []
        out[category] = CategoryStats(
            category=category,
            n_wallets=len(kept),
            funds=stats.Descriptive.of([s.inbound_total_usd for s in kept]),
            tx_counts=stats.Descriptive.of([s.inbound_tx_count for s in kept]),
            excluded=tuple(excluded),
        )
    return out


__all__ = [
    "TX_HEADER",
    "WEI_PER_ETH",
    "CategoryStats",
    "ChainTransaction",
    "LedgerError",
    "PriceError",
    "PriceTable",
    "WalletSummary",
    "category_stats",
    "parse_transactions",
    "wallet_summary",
]
