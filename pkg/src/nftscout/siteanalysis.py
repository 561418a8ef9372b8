"""Static analysis of snapshots: chain addresses, link audit, attack vector.

All pattern matching is lexical (regex/token over raw source, case handled
explicitly), which survives the inconsistent minification of phishing kits
better than AST approaches. Four-byte method ids complement the function
name signatures.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from urllib.parse import urlsplit

from .keccak import keccak_256
from .registry import CollectionRecord, CollectionRegistry
from .snapshot import SiteSnapshot

# Wallet address: 0x + 40 hex, not embedded in a longer hex run (rejects
# 64-hex transaction hashes and identifiers).
_ADDRESS_RE = re.compile(r"(?<![0-9a-zA-Z])0x[0-9a-fA-F]{40}(?![0-9a-fA-F])")

# Transfer/approval signatures; method ids per the ERC-20/721 ABI.
METHOD_ID_APPROVAL_FOR_ALL = "0xa22cb465"
METHOD_ID_TRANSFER_FROM = "0x23b872dd"
METHOD_ID_SAFE_TRANSFER_FROM = "0x42842e0e"

_TRANSFER_PATTERNS = (
    re.compile(r"\bsafeTransferFrom\b"),
    re.compile(r"\btransferFrom\b"),
    re.compile(r"\bSend\b"),
    re.compile(re.escape(METHOD_ID_TRANSFER_FROM), re.IGNORECASE),
    re.compile(re.escape(METHOD_ID_SAFE_TRANSFER_FROM), re.IGNORECASE),
)
_FULL_RIGHTS_PATTERNS = (
    re.compile(r"\bsetApprovalForAll\b"),
    re.compile(re.escape(METHOD_ID_APPROVAL_FOR_ALL), re.IGNORECASE),
)
_WALLET_CONNECT_PATTERNS = (
    re.compile(r"window\.ethereum\b"),
    re.compile(r"\beth_requestAccounts\b"),
)
_VALUE_TRANSFER_PATTERNS = (
    re.compile(r"\beth_sendTransaction\b"),
    re.compile(r"\bvalue\s*:"),
    re.compile(r"\bpayable\b"),
)

_EMPTY_HREFS = {"", "#", "javascript:void(0)", "javascript:void(0);"}

_TWITTER_HOSTS = {"twitter.com", "www.twitter.com", "mobile.twitter.com", "x.com", "www.x.com"}
_OPENSEA_HOSTS = {"opensea.io", "www.opensea.io"}

DEFAULT_TOKEN_STEAL_MIN_CONTRACTS = 5


class ChecksumError(ValueError):
    """Malformed hex body passed to checksum validation."""


@dataclass(frozen=True)
class ChainAddress:
    hex: str
    casing: str  # all_lower | all_upper | mixed
    checksum_valid: bool | None = None  # meaningful for mixed casing only
    role_hint: str = "unknown"  # unknown | wallet | contract

    def __post_init__(self):
        if not re.fullmatch(r"0x[0-9a-fA-F]{40}", self.hex):
            raise ChecksumError(f"malformed chain address: {self.hex!r}")


@dataclass(frozen=True)
class Evidence:
    file: str  # "page.html" or the script URL
    offset: int
    pattern: str


@dataclass
class LinkAudit:
    twitter_links: list[tuple[str, str]] = field(default_factory=list)
    opensea_links: list[tuple[str, str]] = field(default_factory=list)
    has_wallet_connect: bool = False
    requests_full_rights: bool = False


@dataclass
class AttackVectorReport:
    vector: str  # fund_transfer | token_steal | none
    wallet_addresses: list[ChainAddress]
    embedded_contract_count: int
    evidence: list[Evidence]
    dual_evidence: bool = False  # both vectors' signals present


def _classify_casing(body: str) -> str:
    letters = [c for c in body if c.isalpha()]
    if not letters or all(c.islower() for c in letters):
        return "all_lower"
    if all(c.isupper() for c in letters):
        return "all_upper"
    return "mixed"


def checksum_address(lower_body: str) -> str:
    """Mixed-case form of a 40-hex body per the standard address checksum.

    Hash the lowercase hex body; uppercase each letter whose corresponding
    hash nibble is >= 8.
    """
    if not re.fullmatch(r"[0-9a-f]{40}", lower_body):
        raise ChecksumError(f"expected 40 lowercase hex chars, got {lower_body!r}")
    digest = keccak_256(lower_body.encode("ascii")).hex()
    out = []
    for ch, nibble in zip(lower_body, digest):
        out.append(ch.upper() if ch.isalpha() and int(nibble, 16) >= 8 else ch)
    return "0x" + "".join(out)


def validate_checksum(address: ChainAddress | str) -> bool:
    """True when casing is consistent with the checksum (vacuous for
    single-case addresses)."""
    hex_str = address.hex if isinstance(address, ChainAddress) else address
    if not re.fullmatch(r"0x[0-9a-fA-F]{40}", hex_str):
        raise ChecksumError(f"malformed chain address: {hex_str!r}")
    body = hex_str[2:]
    if _classify_casing(body) != "mixed":
        return True
    return checksum_address(body.lower()) == "0x" + body


def _blobs(snapshot: SiteSnapshot):
    """(file label, decoded text) for html plus each script."""
    yield "page.html", snapshot.html.decode("utf-8", "replace")
    for url, payload in snapshot.scripts:
        yield url, payload.decode("utf-8", "replace")


def scan_addresses(
    snapshot: SiteSnapshot,
) -> tuple[list[ChainAddress], dict[str, int], list[Evidence]]:
    """Extract unique chain addresses with occurrence counts and evidence.

    Uniqueness is keyed on the lowercased hex; the representative casing is
    the lexicographically smallest occurrence so results do not depend on
    html/script ordering.
    """
    variants: dict[str, set[str]] = {}
    counts: dict[str, int] = {}
    evidence: list[Evidence] = []
    for file_label, text in _blobs(snapshot):
        for m in _ADDRESS_RE.finditer(text):
            raw = m.group(0)
            key = raw.lower()
            variants.setdefault(key, set()).add(raw)
            counts[key] = counts.get(key, 0) + 1
            evidence.append(Evidence(file=file_label, offset=m.start(), pattern=raw))

    addresses = []
    for key in sorted(variants):
        rep = min(variants[key])
        casing = _classify_casing(rep[2:])
        addresses.append(
            ChainAddress(
                hex=rep,
                casing=casing,
                checksum_valid=validate_checksum(rep) if casing == "mixed" else None,
            )
        )
    return addresses, counts, evidence


def extract_chain_addresses(snapshot: SiteSnapshot) -> list[ChainAddress]:
    addresses, _, _ = scan_addresses(snapshot)
    return addresses


class _AnchorCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.anchors: list[dict] = []
        self._open: dict | None = None

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag == "a":
            self._open = {
                "href": (attrs.get("href") or "").strip(),
                "text": "",
                "context": " ".join(
                    v for k, v in attrs.items() if k in ("class", "title", "aria-label") and v
                ),
            }
            self.anchors.append(self._open)
        elif self._open is not None and tag == "img":
            for k in ("src", "alt"):
                if attrs.get(k):
                    self._open["context"] += " " + attrs[k]

    def handle_endtag(self, tag):
        if tag == "a":
            self._open = None

    def handle_data(self, data):
        if self._open is not None:
            self._open["text"] += data


def _collect_anchors(html: bytes) -> list[dict]:
    parser = _AnchorCollector()
    parser.feed(html.decode("utf-8", "replace"))
    return parser.anchors


def _mentions(anchor: dict, word: str) -> bool:
    hay = (anchor["text"] + " " + anchor["context"] + " " + anchor["href"]).lower()
    return word in hay


def _search_patterns(snapshot: SiteSnapshot, patterns) -> bool:
    for _, text in _blobs(snapshot):
        if any(p.search(text) for p in patterns):
            return True
    return False


def _pattern_evidence(snapshot: SiteSnapshot, patterns) -> list[Evidence]:
    out = []
    for file_label, text in _blobs(snapshot):
        for p in patterns:
            m = p.search(text)
            if m:
                out.append(Evidence(file=file_label, offset=m.start(), pattern=m.group(0)))
    return out


def audit_links(
    snapshot: SiteSnapshot,
    reg: CollectionRegistry,
    claimed: CollectionRecord | None = None,
) -> LinkAudit:
    """Classify social/marketplace links and detect wallet-connect probes.

    Anchors whose href is empty/"#"/javascript:void(0) but whose text or
    icon context references twitter/opensea are classified ``empty``;
    resolvable links are ``official`` iff the handle/slug matches the
    claimed collection's registry entry, else ``unofficial``.
    """
    audit = LinkAudit()
    for anchor in _collect_anchors(snapshot.html):
        href = anchor["href"]
        normalized = href.lower().replace(" ", "")
        is_empty = normalized in _EMPTY_HREFS
        host = urlsplit(href).hostname or "" if not is_empty else ""
        path = [p for p in urlsplit(href).path.split("/") if p] if host else []

        is_twitterish = _mentions(anchor, "twitter") or host in _TWITTER_HOSTS or (
            host in ("x.com", "www.x.com")
        )
        is_openseaish = _mentions(anchor, "opensea") or host in _OPENSEA_HOSTS

        if is_empty:
            if _mentions(anchor, "twitter"):
                audit.twitter_links.append((href, "empty"))
            if _mentions(anchor, "opensea"):
                audit.opensea_links.append((href, "empty"))
            continue

        if host in _TWITTER_HOSTS and is_twitterish:
            handle = path[0].lstrip("@").lower() if path else ""
            official = bool(
                claimed
                and claimed.twitter_handle
                and handle == claimed.twitter_handle.lower()
            )
            audit.twitter_links.append((href, "official" if official else "unofficial"))
        elif host in _OPENSEA_HOSTS and is_openseaish:
            slug = ""
            if len(path) >= 2 and path[0] == "collection":
                slug = path[1].lower()
            official = bool(
                claimed
                and claimed.opensea_slug
                and slug == claimed.opensea_slug.lower()
            )
            audit.opensea_links.append((href, "official" if official else "unofficial"))

    audit.has_wallet_connect = _search_patterns(snapshot, _WALLET_CONNECT_PATTERNS)
    audit.requests_full_rights = _search_patterns(snapshot, _FULL_RIGHTS_PATTERNS)
    return audit


def classify_attack_vector(
    snapshot: SiteSnapshot,
    reg: CollectionRegistry,
    *,
    min_contracts: int = DEFAULT_TOKEN_STEAL_MIN_CONTRACTS,
) -> AttackVectorReport:
    """Decide token_steal / fund_transfer / none for one snapshot.

    token_steal: at least ``min_contracts`` distinct known-collection
    contract addresses embedded together with a transfer/approval call
    pattern. fund_transfer: wallet-connect plus at least one non-contract
    address receiving value. token_steal takes precedence; pages showing
    both signal sets are flagged dual_evidence.
    """
    addresses, _, address_evidence = scan_addresses(snapshot)
    known = [a for a in addresses if a.hex.lower() in reg._by_contract]
    unknown = [a for a in addresses if a.hex.lower() not in reg._by_contract]

    # Approval-for-all counts as a steal trigger alongside the transfer verbs.
    has_transfer = _search_patterns(
        snapshot, _TRANSFER_PATTERNS + _FULL_RIGHTS_PATTERNS
    )
    has_connect = _search_patterns(snapshot, _WALLET_CONNECT_PATTERNS)
    has_value_flow = _search_patterns(snapshot, _VALUE_TRANSFER_PATTERNS)

    steal_signals = len(known) >= min_contracts and has_transfer
    transfer_signals = has_connect and bool(unknown) and has_value_flow

    wallet_addresses = [
        ChainAddress(a.hex, a.casing, a.checksum_valid, role_hint="contract")
        if a in known
        else ChainAddress(
            a.hex, a.casing, a.checksum_valid,
            role_hint="wallet" if has_connect else "unknown",
        )
        for a in addresses
    ]

    if steal_signals:
        evidence = [
            e for e in address_evidence if e.pattern.lower() in reg._by_contract
        ] + _pattern_evidence(snapshot, _TRANSFER_PATTERNS + _FULL_RIGHTS_PATTERNS)
        return AttackVectorReport(
            vector="token_steal",
            wallet_addresses=wallet_addresses,
            embedded_contract_count=len(known),
            evidence=evidence,
            dual_evidence=transfer_signals,
        )
    if transfer_signals:
        evidence = [
            e for e in address_evidence if e.pattern.lower() not in reg._by_contract
        ] + _pattern_evidence(
            snapshot, _WALLET_CONNECT_PATTERNS + _VALUE_TRANSFER_PATTERNS
        )
        return AttackVectorReport(
            vector="fund_transfer",
            wallet_addresses=wallet_addresses,
            embedded_contract_count=len(known),
            evidence=evidence,
        )
    return AttackVectorReport(
        vector="none",
        wallet_addresses=wallet_addresses,
        embedded_contract_count=len(known),
        evidence=[],
    )


__all__ = [
    "DEFAULT_TOKEN_STEAL_MIN_CONTRACTS",
    "METHOD_ID_APPROVAL_FOR_ALL",
    "METHOD_ID_SAFE_TRANSFER_FROM",
    "METHOD_ID_TRANSFER_FROM",
    "AttackVectorReport",
    "ChainAddress",
    "ChecksumError",
    "Evidence",
    "LinkAudit",
    "audit_links",
    "checksum_address",
    "classify_attack_vector",
    "extract_chain_addresses",
    "scan_addresses",
    "validate_checksum",
]
