"""Known-collection registry: loading, indexing and exact-match lookups.

The registry is a static CSV input (the "top collections" list). Candidate
generation uses it for seed domains, the link audit for official handles,
and feature extraction for URL/contract matching.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from .psl import DomainError, registrable_domain_of_url

CSV_HEADER = [
    "slug",
    "name",
    "official_domain",
    "contract_address",
    "twitter_handle",
    "opensea_slug",
    "sales_rank",
]

_CONTRACT_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")


class RegistryError(ValueError):
    """Malformed registry file or row."""


class AddressError(ValueError):
    """Malformed chain address."""


@dataclass(frozen=True)
class CollectionRecord:
    slug: str
    name: str
    official_domain: str
    contract_address: str
    twitter_handle: str | None
    opensea_slug: str | None
    sales_rank: int

    def __post_init__(self):
        if not self.slug or self.slug != self.slug.lower():
            raise RegistryError(f"slug must be non-empty lowercase: {self.slug!r}")
        if not self.official_domain:
            raise RegistryError(f"{self.slug}: official_domain is empty")
        if not _CONTRACT_RE.match(self.contract_address):
            raise RegistryError(
                f"{self.slug}: contract_address must be 0x + 40 hex chars, "
                f"got {self.contract_address!r}"
            )
        if self.sales_rank < 1:
            raise RegistryError(f"{self.slug}: sales_rank must be >= 1")


@dataclass
class CollectionRegistry:
    """Ordered records with case-normalized lookup indexes."""

    records: list[CollectionRecord]
    _by_domain: dict[str, CollectionRecord] = field(default_factory=dict, repr=False)
    _by_contract: dict[str, CollectionRecord] = field(default_factory=dict, repr=False)
    _by_handle: dict[str, CollectionRecord] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen_slugs: set[str] = set()
        seen_ranks: set[int] = set()
        for rec in self.records:
            if rec.slug in seen_slugs:
                raise RegistryError(f"duplicate slug: {rec.slug}")
            if rec.sales_rank in seen_ranks:
                raise RegistryError(f"duplicate sales_rank: {rec.sales_rank}")
            seen_slugs.add(rec.slug)
            seen_ranks.add(rec.sales_rank)
            self._by_domain.setdefault(rec.official_domain.lower(), rec)
            self._by_contract.setdefault(rec.contract_address.lower(), rec)
            if rec.twitter_handle:
                self._by_handle.setdefault(rec.twitter_handle.lower(), rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_twitter_handle(self, handle: str) -> CollectionRecord | None:
        return self._by_handle.get(handle.lstrip("@").lower())

    def by_opensea_slug(self, slug: str) -> CollectionRecord | None:
        slug = slug.lower()
        for rec in self.records:
            if rec.opensea_slug and rec.opensea_slug.lower() == slug:
                return rec
        return None

    def seed_domains(self, top_n: int | None = None) -> list[str]:
        """Official domains ordered by sales rank, optionally truncated."""
        ranked = sorted(self.records, key=lambda r: r.sales_rank)
        if top_n is not None:
            ranked = ranked[:top_n]
        return [r.official_domain for r in ranked]


def load_registry(path: str | Path) -> CollectionRegistry:
    """Parse the registry CSV, preserving row order.

    Raises RegistryError with the offending line number for malformed rows
    and for duplicate slugs or ranks.
    """
    path = Path(path)
    records: list[CollectionRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise RegistryError(
                f"{path}: expected header {','.join(CSV_HEADER)}, "
                f"got {','.join(reader.fieldnames or [])}"
            )
        for row in reader:
            line = reader.line_num
            try:
                records.append(
                    CollectionRecord(
                        slug=(row["slug"] or "").strip(),
                        name=(row["name"] or "").strip(),
                        official_domain=(row["official_domain"] or "").strip().lower(),
                        contract_address=(row["contract_address"] or "").strip(),
                        twitter_handle=(row["twitter_handle"] or "").strip() or None,
                        opensea_slug=(row["opensea_slug"] or "").strip() or None,
                        sales_rank=int((row["sales_rank"] or "").strip()),
                    )
                )
            except (RegistryError, ValueError, KeyError) as exc:
                raise RegistryError(f"{path}:{line}: malformed row: {exc}") from exc
    return CollectionRegistry(records)


def match_official(url: str, reg: CollectionRegistry) -> CollectionRecord | None:
    """Record whose official_domain equals the URL's registrable domain.

    Exact, case-insensitive comparison at registrable-domain granularity;
    no fuzzy matching. Raises DomainError for unparseable URLs.
    """
    domain = registrable_domain_of_url(url)
    return reg._by_domain.get(domain)


def match_contract(address: str, reg: CollectionRegistry) -> CollectionRecord | None:
    """Case-insensitive contract-address lookup."""
    if not _CONTRACT_RE.match(address):
        raise AddressError(f"malformed chain address: {address!r}")
    return reg._by_contract.get(address.lower())


__all__ = [
    "CSV_HEADER",
    "AddressError",
    "CollectionRecord",
    "CollectionRegistry",
    "DomainError",
    "RegistryError",
    "load_registry",
    "match_contract",
    "match_official",
]
