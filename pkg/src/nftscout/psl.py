"""Registrable-domain extraction against a bundled public-suffix snapshot.

Implements the publicsuffix.org matching algorithm over the snapshot file
shipped in ``data/public_suffix_snapshot.dat``: exception rules beat normal
rules, otherwise the rule with the most labels prevails, and an unmatched
domain falls back to the implicit ``*`` rule (its last label is the suffix).
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

_SNAPSHOT_RESOURCE = "public_suffix_snapshot.dat"

# DNS label: 1-63 chars of [a-z0-9-], no leading/trailing hyphen.
_LABEL_CHARS = set("abcdefghijklmnopqrstuvwxyz0123456789-")


class DomainError(ValueError):
    """Raised for syntactically invalid domain names."""


def _load_rules() -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    normal: set[str] = set()
    wildcard: set[str] = set()  # stored without the leading "*."
    exception: set[str] = set()
    text = (
        resources.files("nftscout.data")
        .joinpath(_SNAPSHOT_RESOURCE)
        .read_text(encoding="utf-8")
    )
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("!"):
            exception.add(line[1:])
        elif line.startswith("*."):
            wildcard.add(line[2:])
        else:
            normal.add(line)
    return frozenset(normal), frozenset(wildcard), frozenset(exception)


@lru_cache(maxsize=1)
def _rules():
    return _load_rules()


def is_valid_label(label: str) -> bool:
    return (
        0 < len(label) <= 63
        and not label.startswith("-")
        and not label.endswith("-")
        and all(c in _LABEL_CHARS for c in label)
    )


def is_valid_domain(domain: str) -> bool:
    """DNS validity for a lowercase FQDN: label rules plus 253-char total."""
    if not domain or len(domain) > 253:
        return False
    labels = domain.split(".")
    if len(labels) < 2:
        return False
    return all(is_valid_label(l) for l in labels)


def public_suffix(domain: str) -> str:
    """Longest matching public suffix of a normalized domain."""
    normal, wildcard, exception = _rules()
    labels = domain.split(".")
    best = 0
    for i in range(len(labels)):
        candidate = ".".join(labels[i:])
        n_labels = len(labels) - i
        if candidate in exception:
            # Exception rule: the suffix is the rule minus its first label.
            return ".".join(labels[i + 1:])
        if candidate in normal and n_labels > best:
            best = n_labels
        if i > 0 and ".".join(labels[i:]) in wildcard:
            # "*.rule" matches labels[i-1:], one label longer than the base.
            wc_len = n_labels + 1
            if wc_len > best:
                best = wc_len
    if best == 0:
        best = 1  # implicit "*" rule
    return ".".join(labels[len(labels) - best:])


def registrable_domain(domain: str) -> str:
    """Public suffix plus one label, e.g. ``a.b.example.co.uk`` -> ``example.co.uk``.

    Raises DomainError when the domain is invalid or is itself a bare suffix.
    """
    d = domain.strip().strip(".").lower()
    if not is_valid_domain(d):
        raise DomainError(f"invalid domain name: {domain!r}")
    suffix = public_suffix(d)
    if d == suffix:
        raise DomainError(f"domain is a bare public suffix: {domain!r}")
    n_suffix = suffix.count(".") + 1
    labels = d.split(".")
    return ".".join(labels[len(labels) - n_suffix - 1:])


def registrable_domain_of_url(url: str) -> str:
    """Registrable domain of a URL's host part."""
    from urllib.parse import urlsplit

    parts = urlsplit(url if "//" in url else "//" + url)
    host = parts.hostname
    if not host:
        raise DomainError(f"URL has no host: {url!r}")
    return registrable_domain(host)
