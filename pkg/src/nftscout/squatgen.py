"""Squatting-candidate generation from seed collection domains.

Ten permutation rule kinds mutate the second-level label of a registrable
seed domain (tld_swap mutates the suffix instead). Generation is pure and
deterministic; every emitted candidate is DNS-valid and never equals the
seed. ``is_nft_related`` implements the perturbation-term substring test
used to pick NFT-flavored domains out of the certificate stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path

from .psl import DomainError, is_valid_domain, registrable_domain
from .timefmt import parse_rfc3339, to_rfc3339

RULE_KINDS = (
    "omission",
    "insertion",
    "transposition",
    "repetition",
    "replacement",
    "homoglyph",
    "bitsquat",
    "hyphenation",
    "tld_swap",
    "term_affix",
)

# Rule kinds whose behavior is driven by a substitution table / list and
# therefore require non-empty parameters.
_TABLE_DRIVEN = {"replacement", "homoglyph", "tld_swap", "term_affix"}

DEFAULT_TERMS = ("nft", "claim", "mint")
DEFAULT_TLDS = ("com", "net", "org", "io", "xyz", "app", "finance")

_INSERTION_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"

# QWERTY adjacency for the adjacent-key replacement rule.
KEYBOARD_ADJACENT = {
    "a": "qwsz", "b": "vghn", "c": "xdfv", "d": "serfcx", "e": "wrds",
    "f": "drtgvc", "g": "ftyhbv", "h": "gyujnb", "i": "uokj", "j": "huikmn",
    "k": "jiolm", "l": "kop", "m": "njk", "n": "bhjm", "o": "ipkl",
    "p": "ol", "q": "wa", "r": "etfd", "s": "awedxz", "t": "rygf",
    "u": "yijh", "v": "cfgb", "w": "qesa", "x": "zsdc", "y": "tuhg",
    "z": "asx",
    "1": "2q", "2": "13w", "3": "24e", "4": "35r", "5": "46t",
    "6": "57y", "7": "68u", "8": "79i", "9": "80o", "0": "9p",
}


def _load_homoglyph_table() -> tuple[tuple[str, str], ...]:
    pairs: list[tuple[str, str]] = []
    text = (
        resources.files("nftscout.data")
        .joinpath("homoglyphs.txt")
        .read_text(encoding="utf-8")
    )
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        src, *dsts = line.split()
        for dst in dsts:
            pairs.append((src, dst))
    return tuple(pairs)


DEFAULT_HOMOGLYPHS = _load_homoglyph_table()


@dataclass(frozen=True)
class PermutationRule:
    kind: str
    # (src, dst) pairs for homoglyph, (char, adjacents) for replacement,
    # plain strings for tld_swap / term_affix, empty for the rest.
    parameters: tuple = ()

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind: {self.kind!r}")
        if self.kind in _TABLE_DRIVEN and not self.parameters:
            raise ValueError(f"rule {self.kind} requires non-empty parameters")


def make_rule(kind: str, parameters=None) -> PermutationRule:
    """Build one rule, filling bundled defaults for table-driven kinds."""
    if parameters is None:
        if kind == "homoglyph":
            parameters = DEFAULT_HOMOGLYPHS
        elif kind == "replacement":
            parameters = tuple(sorted(KEYBOARD_ADJACENT.items()))
        elif kind == "tld_swap":
            parameters = DEFAULT_TLDS
        elif kind == "term_affix":
            parameters = DEFAULT_TERMS
        else:
            parameters = ()
    return PermutationRule(kind, tuple(parameters))


def default_rules() -> list[PermutationRule]:
    return [make_rule(kind) for kind in RULE_KINDS]


@dataclass(frozen=True)
class CandidateDomain:
    domain: str
    source: str  # "fuzzer" | "ct_stream"
    seed: str | None = None  # slug of the imitated collection
    rule: str | None = None  # generating rule kind
    first_seen: datetime | None = None

    def __post_init__(self):
        if self.source not in ("fuzzer", "ct_stream"):
            raise ValueError(f"unknown candidate source: {self.source!r}")
        if not is_valid_domain(self.domain):
            raise DomainError(f"candidate is not DNS-valid: {self.domain!r}")


def _mutate_label(name: str, rule: PermutationRule) -> set[str]:
    """All second-level-label variants produced by one rule."""
    out: set[str] = set()
    kind = rule.kind
    if kind == "omission":
        for i in range(len(name)):
            out.add(name[:i] + name[i + 1:])
    elif kind == "insertion":
        for i in range(len(name) + 1):
            for c in _INSERTION_ALPHABET:
                out.add(name[:i] + c + name[i:])
    elif kind == "transposition":
        for i in range(len(name) - 1):
            if name[i] != name[i + 1]:
                out.add(name[:i] + name[i + 1] + name[i] + name[i + 2:])
    elif kind == "repetition":
        for i in range(len(name)):
            out.add(name[:i] + name[i] + name[i:])
    elif kind == "replacement":
        table = dict(rule.parameters)
        for i, ch in enumerate(name):
            for adj in table.get(ch, ""):
                out.add(name[:i] + adj + name[i + 1:])
    elif kind == "homoglyph":
        for src, dst in rule.parameters:
            start = 0
            while True:
                idx = name.find(src, start)
                if idx < 0:
                    break
                out.add(name[:idx] + dst + name[idx + len(src):])
                start = idx + 1
    elif kind == "bitsquat":
        for i, ch in enumerate(name):
            for bit in range(8):
                flipped = chr(ord(ch) ^ (1 << bit))
                if flipped != ch and (flipped.isascii() and (flipped.isdigit() or flipped.islower() or flipped == "-")):
                    out.add(name[:i] + flipped + name[i + 1:])
    elif kind == "hyphenation":
        for i in range(1, len(name)):
            out.add(name[:i] + "-" + name[i:])
        if "-" in name:
            out.add(name.replace("-", ""))
    elif kind == "term_affix":
        for term in rule.parameters:
            out.add(term + name)
            out.add(name + term)
            out.add(term + "-" + name)
            out.add(name + "-" + term)
    out.discard(name)
    return out


def permute_domain(
    seed_domain: str,
    rules,
    *,
    seed_slug: str | None = None,
    first_seen: datetime | None = None,
) -> set[CandidateDomain]:
    """Generate fuzzer candidates for one seed registrable domain.

    The output excludes the seed, contains only DNS-valid names, and each
    candidate carries the kind of the rule that produced it. When several
    rules reach the same domain, the earliest rule in ``rules`` wins.
    """
    if not rules:
        raise ValueError("at least one permutation rule is required")
    seed = registrable_domain(seed_domain)
    name, _, suffix = seed.partition(".")
    by_domain: dict[str, CandidateDomain] = {}
    for rule in rules:
        if rule.kind == "tld_swap":
            variants = {f"{name}.{tld}" for tld in rule.parameters if tld != suffix}
        else:
            variants = {f"{label}.{suffix}" for label in _mutate_label(name, rule)}
        for domain in variants:
            if domain == seed or domain in by_domain or not is_valid_domain(domain):
                continue
            by_domain[domain] = CandidateDomain(
                domain=domain,
                source="fuzzer",
                seed=seed_slug,
                rule=rule.kind,
                first_seen=first_seen,
            )
    return set(by_domain.values())


def is_nft_related(label: str, terms=DEFAULT_TERMS) -> bool:
    """True iff any perturbation term occurs as a substring, case-folded."""
    folded = label.lower()
    return any(term in folded for term in terms)


def dedupe_candidates(*streams) -> tuple[set[CandidateDomain], int]:
    """Union multiple candidate streams keyed by domain string.

    Fuzzer provenance wins on duplicates (it carries the seed attribution);
    among equal sources the first stream wins. Returns (union, overlap)
    where overlap = sum of input sizes - union size.
    """
    total = 0
    by_domain: dict[str, CandidateDomain] = {}
    for stream in streams:
        for cand in stream:
            total += 1
            held = by_domain.get(cand.domain)
            if held is None:
                by_domain[cand.domain] = cand
            elif held.source != "fuzzer" and cand.source == "fuzzer":
                by_domain[cand.domain] = cand
    union = set(by_domain.values())
    return union, total - len(union)


def candidate_to_json(cand: CandidateDomain) -> dict:
    return {
        "domain": cand.domain,
        "source": cand.source,
        "seed": cand.seed,
        "rule": cand.rule,
        "first_seen": to_rfc3339(cand.first_seen) if cand.first_seen else None,
    }


def candidate_from_json(obj: dict) -> CandidateDomain:
    return CandidateDomain(
        domain=obj["domain"],
        source=obj["source"],
        seed=obj.get("seed"),
        rule=obj.get("rule"),
        first_seen=parse_rfc3339(obj["first_seen"]) if obj.get("first_seen") else None,
    )


def write_candidates(path: str | Path, candidates) -> None:
    """NDJSON, one candidate per line, sorted by domain for stable output."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for cand in sorted(candidates, key=lambda c: c.domain):
            fh.write(json.dumps(candidate_to_json(cand), sort_keys=True) + "\n")


def read_candidates(path: str | Path) -> list[CandidateDomain]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(candidate_from_json(json.loads(line)))
    return out


__all__ = [
    "DEFAULT_HOMOGLYPHS",
    "DEFAULT_TERMS",
    "DEFAULT_TLDS",
    "KEYBOARD_ADJACENT",
    "RULE_KINDS",
    "CandidateDomain",
    "PermutationRule",
    "candidate_from_json",
    "candidate_to_json",
    "dedupe_candidates",
    "default_rules",
    "is_nft_related",
    "make_rule",
    "permute_domain",
    "read_candidates",
    "write_candidates",
]
