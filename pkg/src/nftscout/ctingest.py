"""Certificate-transparency stream parsing and candidate filtering.

Wire format is one JSON object per line with the firehose shape
``{"data":{"leaf_cert":{"all_domains":[...],"not_before":<epoch>,
"issuer":{"O":"..."}}}}``; an optional ``data.seen`` epoch carries the
stream receipt time. Wildcard prefixes are stripped and domains lowercased
on parse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta

from .psl import is_valid_domain
from .squatgen import CandidateDomain, is_nft_related
from .timefmt import from_epoch

CLOCK_SKEW_ALLOWANCE = timedelta(seconds=300)


class CtParseError(ValueError):
    """Malformed CT stream record."""


@dataclass(frozen=True)
class CtRecord:
    all_domains: tuple[str, ...]
    not_before: datetime
    issuer: str
    seen_at: datetime

    def __post_init__(self):
        if not self.all_domains:
            raise CtParseError("record has an empty domain list")
        if self.not_before > self.seen_at + CLOCK_SKEW_ALLOWANCE:
            raise CtParseError(
                "not_before is after stream receipt beyond clock-skew allowance"
            )


def parse_ct_record(line: str) -> CtRecord:
    """Parse one NDJSON message into a CtRecord.

    Strips ``*.`` wildcard prefixes, lowercases and dedups domains
    (first occurrence wins, order otherwise preserved).
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CtParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CtParseError("record is not a JSON object")
    leaf = obj.get("data", {}).get("leaf_cert")
    if not isinstance(leaf, dict):
        raise CtParseError("missing data.leaf_cert")
    raw_domains = leaf.get("all_domains")
    if raw_domains is None:
        raise CtParseError("missing field all_domains")
    if not isinstance(raw_domains, list) or not raw_domains:
        raise CtParseError("all_domains must be a non-empty list")
    not_before = leaf.get("not_before")
    if not_before is None:
        raise CtParseError("missing field not_before")
    issuer = (leaf.get("issuer") or {}).get("O") or ""
    seen = obj.get("data", {}).get("seen", not_before)

    domains: list[str] = []
    for d in raw_domains:
        d = str(d).lower()
        if d.startswith("*."):
            d = d[2:]
        if d and d not in domains:
            domains.append(d)
    if not domains:
        raise CtParseError("all_domains is empty after normalization")
    return CtRecord(
        all_domains=tuple(domains),
        not_before=from_epoch(float(not_before)),
        issuer=str(issuer),
        seen_at=from_epoch(float(seen)),
    )


def serialize_ct_record(record: CtRecord) -> str:
    """Inverse of parse_ct_record over the documented wire subset."""
    return json.dumps(
        {
            "data": {
                "leaf_cert": {
                    "all_domains": list(record.all_domains),
                    "not_before": record.not_before.timestamp(),
                    "issuer": {"O": record.issuer},
                },
                "seen": record.seen_at.timestamp(),
            }
        },
        sort_keys=True,
    )


def parse_ct_stream(lines) -> tuple[list[CtRecord], int]:
    """Parse a line iterator, skipping malformed records with a count."""
    records: list[CtRecord] = []
    malformed = 0
    for line in lines:
        if not line.strip():
            continue
        try:
            records.append(parse_ct_record(line))
        except CtParseError:
            malformed += 1
    return records, malformed


def filter_stream(
    records,
    watch_candidates: set[str],
    terms,
    since: datetime,
) -> list[CandidateDomain]:
    """Emit ct_stream candidates for newly issued, watched or NFT-flavored domains.

    A domain is emitted when its certificate's not_before is >= ``since``
    and it either appears in the candidate watch set or matches a
    perturbation term. Each domain is emitted at most once per run (first
    occurrence wins) and output order follows stream order.
    """
    seen: set[str] = set()
    hits: list[CandidateDomain] = []
    for rec in records:
        if rec.not_before < since:
            continue
        for domain in rec.all_domains:
            if domain in seen or not is_valid_domain(domain):
                continue
            if domain in watch_candidates or is_nft_related(domain, terms):
                seen.add(domain)
                hits.append(
                    CandidateDomain(
                        domain=domain,
                        source="ct_stream",
                        seed=None,
                        rule=None,
                        first_seen=rec.seen_at,
                    )
                )
    return hits


__all__ = [
    "CLOCK_SKEW_ALLOWANCE",
    "CtParseError",
    "CtRecord",
    "filter_stream",
    "parse_ct_record",
    "parse_ct_stream",
    "serialize_ct_record",
]
