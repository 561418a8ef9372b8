"""The ten classifier features computed per snapshot.

f1  URL matches a known collection's official domain
f2  any embedded contract address matches a known collection
f3  number of unique chain addresses in the source
f4  a resolvable twitter link is present (empty hrefs do not count)
f5  the linked twitter account is active (config-gated)
f6  twitter link belongs to a known collection
f7  opensea link belongs to a known collection
f8  follower count of the linked twitter account (0 when absent)
f9  age of the linked twitter account in days (0 when absent)
f10 an embedded contract's collection name is resolvable

Account and contract-name data arrive through providers; the bundled
fixture providers read the CSV formats documented alongside them, and a
provider outage degrades to an exists=false sentinel instead of aborting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from urllib.parse import urlsplit

from .registry import CollectionRegistry, match_official
from .siteanalysis import AttackVectorReport, LinkAudit
from .snapshot import SiteSnapshot
from .timefmt import parse_rfc3339

FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10")

MATRIX_HEADER = ["snapshot_id", *FEATURE_NAMES, "label"]


@dataclass(frozen=True)
class AccountInfo:
    handle: str
    exists: bool
    active: bool
    followers: int
    created_at: datetime | None
    fetched_at: datetime

    def __post_init__(self):
        if not self.exists and (self.active or self.followers):
            raise ValueError("nonexistent account cannot be active or have followers")


def missing_account(handle: str, fetched_at: datetime) -> AccountInfo:
    return AccountInfo(
        handle=handle, exists=False, active=False, followers=0,
        created_at=None, fetched_at=fetched_at,
    )


class FixtureAccountProvider:
    """Account lookups from a CSV fixture: handle,exists,active,followers,created_at.

    ``as_of`` stands in for the live fetch time and determines account age.
    Unknown handles resolve to the exists=false sentinel.
    """

    def __init__(self, path: str | Path, as_of: datetime):
        self.as_of = as_of
        self._rows: dict[str, dict] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                self._rows[row["handle"].lstrip("@").lower()] = row

    def lookup(self, handle: str) -> AccountInfo:
        row = self._rows.get(handle.lstrip("@").lower())
        if row is None:
            return missing_account(handle, self.as_of)
        exists = row["exists"].strip() in ("1", "true", "True")
        if not exists:
            return missing_account(handle, self.as_of)
        return AccountInfo(
            handle=handle,
            exists=True,
            active=row["active"].strip() in ("1", "true", "True"),
            followers=int(row["followers"] or 0),
            created_at=parse_rfc3339(row["created_at"]) if row["created_at"] else None,
            fetched_at=self.as_of,
        )


class FixtureContractNameProvider:
    """Contract-name lookups from a CSV fixture: contract_address,name."""

    def __init__(self, path: str | Path):
        self._names: dict[str, str] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                self._names[row["contract_address"].strip().lower()] = row["name"].strip()

    def lookup(self, contract_address: str) -> str | None:
        return self._names.get(contract_address.lower())


class EmptyProvider:
    """Provider with no data; every lookup misses."""

    def __init__(self, as_of: datetime | None = None):
        self.as_of = as_of

    def lookup(self, key: str):
        return None


@dataclass
class FeatureConfig:
    disable_f5: bool = False


@dataclass
class FeatureVector:
    f1_url_matches_known: bool
    f2_contract_matches_known: bool
    f3_eth_address_count: int
    f4_has_twitter_link: bool
    f5_twitter_active: bool
    f6_twitter_is_known: bool
    f7_opensea_is_known: bool
    f8_twitter_followers: int
    f9_twitter_age_days: float
    f10_contract_name_resolvable: bool
    label: str | None = None  # phishing | benign
    notes: dict = field(default_factory=dict)

    def values(self) -> list[float]:
        """Numeric row in FEATURE_NAMES order (booleans as 0/1)."""
        return [
            float(self.f1_url_matches_known),
            float(self.f2_contract_matches_known),
            float(self.f3_eth_address_count),
            float(self.f4_has_twitter_link),
            float(self.f5_twitter_active),
            float(self.f6_twitter_is_known),
            float(self.f7_opensea_is_known),
            float(self.f8_twitter_followers),
            float(self.f9_twitter_age_days),
            float(self.f10_contract_name_resolvable),
        ]


def _twitter_handle_of(href: str) -> str | None:
    path = [p for p in urlsplit(href).path.split("/") if p]
    return path[0].lstrip("@") if path else None


def extract_features(
    snapshot: SiteSnapshot,
    report: AttackVectorReport,
    audit: LinkAudit,
    reg: CollectionRegistry,
    accounts,
    names,
    cfg: FeatureConfig = FeatureConfig(),
    *,
    label: str | None = None,
) -> FeatureVector:
    """Compute the feature vector from one analyzed snapshot.

    Deterministic given fixed providers. When several twitter links exist,
    the first resolvable one in document order supplies f5/f8/f9.
    """
    notes: dict[str, str] = {}

    try:
        f1 = match_official(snapshot.url, reg) is not None
    except ValueError:
        f1 = False
        notes["f1"] = "unparseable URL treated as no match"

    addresses = report.wallet_addresses
    f2 = report.embedded_contract_count > 0
    f3 = len(addresses)

    resolvable_tw = [
        (href, cls) for href, cls in audit.twitter_links if cls in ("official", "unofficial")
    ]
    f4 = bool(resolvable_tw)
    f6 = any(cls == "official" for _, cls in audit.twitter_links)
    f7 = any(cls == "official" for _, cls in audit.opensea_links)

    f5, f8, f9 = False, 0, 0.0
    if resolvable_tw:
        handle = _twitter_handle_of(resolvable_tw[0][0])
        if handle:
            try:
                info = accounts.lookup(handle)
            except Exception as exc:  # provider outage → sentinel
                info = None
                notes["f5"] = notes["f8"] = notes["f9"] = f"provider failure: {exc}"
            if info is None:
                info = missing_account(handle, getattr(accounts, "as_of", snapshot.fetched_at))
                notes.setdefault("f5", "account data unavailable")
            f5 = info.exists and info.active
            f8 = info.followers
            if info.created_at is not None:
                f9 = max(0.0, (info.fetched_at - info.created_at).total_seconds() / 86400.0)

    if cfg.disable_f5:
        f5 = False
        notes["f5"] = "disabled by config"

    f10 = f2
    if not f10:
        for addr in addresses:
            try:
                if names.lookup(addr.hex) is not None:
                    f10 = True
                    break
            except Exception as exc:
                notes["f10"] = f"provider failure: {exc}"
                break

    return FeatureVector(
        f1_url_matches_known=f1,
        f2_contract_matches_known=f2,
        f3_eth_address_count=f3,
        f4_has_twitter_link=f4,
        f5_twitter_active=f5,
        f6_twitter_is_known=f6,
        f7_opensea_is_known=f7,
        f8_twitter_followers=f8,
        f9_twitter_age_days=f9,
        f10_contract_name_resolvable=f10,
        label=label,
        notes=notes,
    )


def _fmt_cell(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def write_feature_matrix(path: str | Path, rows) -> None:
    """rows: iterable of (snapshot_id, FeatureVector). Booleans as 0/1."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATRIX_HEADER)
        for snapshot_id, vec in rows:
            writer.writerow(
                [snapshot_id, *(_fmt_cell(v) for v in vec.values()), vec.label or ""]
            )


def read_feature_matrix(path: str | Path) -> list[tuple[str, FeatureVector]]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MATRIX_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(MATRIX_HEADER)}"
            )
        for row in reader:
            vec = FeatureVector(
                f1_url_matches_known=row["f1"] == "1",
                f2_contract_matches_known=row["f2"] == "1",
                f3_eth_address_count=int(row["f3"]),
                f4_has_twitter_link=row["f4"] == "1",
                f5_twitter_active=row["f5"] == "1",
                f6_twitter_is_known=row["f6"] == "1",
                f7_opensea_is_known=row["f7"] == "1",
                f8_twitter_followers=int(row["f8"]),
                f9_twitter_age_days=float(row["f9"]),
                f10_contract_name_resolvable=row["f10"] == "1",
                label=row["label"] or None,
            )
            out.append((row["snapshot_id"], vec))
    return out


__all__ = [
    "FEATURE_NAMES",
    "MATRIX_HEADER",
    "AccountInfo",
    "EmptyProvider",
    "FeatureConfig",
    "FeatureVector",
    "FixtureAccountProvider",
    "FixtureContractNameProvider",
    "extract_features",
    "missing_account",
    "read_feature_matrix",
    "write_feature_matrix",
]
