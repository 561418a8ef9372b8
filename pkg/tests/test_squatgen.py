from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nftscout.psl import DomainError, is_valid_domain
from nftscout.squatgen import (
    CandidateDomain,
    candidate_from_json,
    candidate_to_json,
    dedupe_candidates,
    default_rules,
    is_nft_related,
    make_rule,
    permute_domain,
)


def _domains(cands):
    return {c.domain for c in cands}


def test_omission_abc():
    out = permute_domain("abc.com", [make_rule("omission")])
    assert _domains(out) == {"ab.com", "ac.com", "bc.com"}
    assert all(c.rule == "omission" for c in out)


def test_transposition_abc():
    out = permute_domain("abc.com", [make_rule("transposition")])
    assert _domains(out) == {"bac.com", "acb.com"}


def test_term_affix_against_enumeration_oracle():
    # oracle: positions {prefix, suffix, hyphen-prefix, hyphen-suffix} x terms
    terms = ("nft", "mint", "claim")
    expected = set()
    for term in terms:
        for label in (
            f"{term}azuki", f"azuki{term}", f"{term}-azuki", f"azuki-{term}"
        ):
            expected.add(f"{label}.com")
    out = _domains(permute_domain("azuki.com", [make_rule("term_affix", terms)]))
    assert out == expected
    assert {"azukinft.com", "mintazuki.com", "azuki-claim.com"} <= out


def test_repetition_counts():
    out = _domains(permute_domain("ab.com", [make_rule("repetition")]))
    assert out == {"aab.com", "abb.com"}


def test_homoglyph_defaults():
    out = _domains(permute_domain("balloon.com", [make_rule("homoglyph")]))
    assert "bal1oon.com" in out  # l -> 1
    assert "ballo0n.com" in out or "ball0on.com" in out  # o -> 0


def test_homoglyph_multichar_sequence():
    out = _domains(permute_domain("stamp.com", [make_rule("homoglyph")]))
    assert "starnp.com" in out  # m -> rn


def test_tld_swap_excludes_current():
    out = _domains(permute_domain("azuki.com", [make_rule("tld_swap")]))
    assert "azuki.io" in out and "azuki.finance" in out
    assert "azuki.com" not in out


def test_hyphenation():
    out = _domains(permute_domain("abc.com", [make_rule("hyphenation")]))
    assert out == {"a-bc.com", "ab-c.com"}


def test_bitsquat_is_dns_valid():
    out = permute_domain("abc.com", [make_rule("bitsquat")])
    assert out
    for cand in out:
        assert is_valid_domain(cand.domain)


def test_seed_excluded_and_rule_priority():
    # both omission (from "aab") and repetition (from "ab") can produce
    # duplicates across rules; the earliest rule in the list wins
    out = permute_domain(
        "ab.com", [make_rule("repetition"), make_rule("insertion")]
    )
    by_domain = {c.domain: c.rule for c in out}
    assert by_domain["aab.com"] == "repetition"
    assert "ab.com" not in by_domain


def test_invalid_seed_rejected():
    with pytest.raises(DomainError):
        permute_domain("not a domain", [make_rule("omission")])


def test_empty_rules_rejected():
    with pytest.raises(ValueError):
        permute_domain("abc.com", [])


def test_rule_validation():
    with pytest.raises(ValueError):
        make_rule("no_such_rule")
    with pytest.raises(ValueError):
        make_rule("term_affix", ())


def test_candidates_carry_seed_and_stamp():
    stamp = datetime(2022, 7, 8, tzinfo=timezone.utc)
    out = permute_domain(
        "abc.com", [make_rule("omission")], seed_slug="abc", first_seen=stamp
    )
    assert all(c.seed == "abc" and c.first_seen == stamp for c in out)
    assert all(c.source == "fuzzer" for c in out)


_LABEL = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=2, max_size=20)


@given(_LABEL)
@settings(max_examples=60)
def test_property_no_seed_and_all_valid(label):
    seed = f"{label}.com"
    out = permute_domain(seed, default_rules())
    for cand in out:
        assert cand.domain != seed
        assert is_valid_domain(cand.domain)


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=15))
@settings(max_examples=60)
def test_property_omission_count_distinct_chars(label):
    distinct = len(set(label)) == len(label)
    out = permute_domain(f"x{label}.com", [make_rule("omission")])
    # prefixing "x" guarantees the label is >= 2 chars so omissions exist
    full = f"x{label}"
    if len(set(full)) == len(full):
        assert len(out) == len(full)


def test_is_nft_related():
    assert is_nft_related("freemint-apes.xyz", ("nft", "claim", "mint"))
    assert not is_nft_related("example.com", ("nft", "claim", "mint"))
    assert is_nft_related("NFTdrop.io", ("nft", "claim", "mint"))
    assert not is_nft_related("", ("nft",))


def test_dedupe_overlap_counts():
    def cand(d, source="fuzzer", seed=None):
        return CandidateDomain(domain=d, source=source, seed=seed)

    a = {cand("a.com"), cand("b.com")}
    b = {cand("b.com", "ct_stream"), cand("c.com", "ct_stream")}
    union, overlap = dedupe_candidates(a, b)
    assert _domains(union) == {"a.com", "b.com", "c.com"}
    assert overlap == 1

    union, overlap = dedupe_candidates(a, a)
    assert len(union) == 2 and overlap == 2

    disjoint, overlap = dedupe_candidates({cand("x.com")}, {cand("y.com")})
    assert overlap == 0


def test_dedupe_fuzzer_provenance_wins():
    fuzz = CandidateDomain(domain="b.com", source="fuzzer", seed="apes", rule="omission")
    ct = CandidateDomain(domain="b.com", source="ct_stream")
    union, _ = dedupe_candidates({ct}, {fuzz})
    (winner,) = union
    assert winner.source == "fuzzer" and winner.seed == "apes"


def test_candidate_json_roundtrip():
    cand = CandidateDomain(
        domain="mint-apes.xyz",
        source="ct_stream",
        first_seen=datetime(2022, 10, 5, 12, 30, tzinfo=timezone.utc),
    )
    assert candidate_from_json(candidate_to_json(cand)) == cand
