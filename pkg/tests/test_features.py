from datetime import datetime, timezone

import pytest

import sitefixtures
from nftscout.features import (
    FEATURE_NAMES,
    EmptyProvider,
    FeatureConfig,
    FixtureAccountProvider,
    FixtureContractNameProvider,
    extract_features,
    read_feature_matrix,
    write_feature_matrix,
)
from nftscout.siteanalysis import audit_links, classify_attack_vector
from nftscout.snapshot import SiteSnapshot


@pytest.fixture(scope="module")
def providers(fixture_dir):
    accounts = FixtureAccountProvider(fixture_dir / "accounts.csv", sitefixtures.AS_OF)
    names = FixtureContractNameProvider(fixture_dir / "contract_names.csv")
    return accounts, names


def _extract(site, registry, accounts, names, cfg=FeatureConfig()):
    snap = site.snapshot()
    claimed = next(r for r in registry if r.slug == site.claimed)
    audit = audit_links(snap, registry, claimed)
    report = classify_attack_vector(snap, registry)
    return extract_features(snap, report, audit, registry, accounts, names, cfg)


def test_fixture_sites_match_hand_filled_matrix(sites, registry, providers):
    accounts, names = providers
    for site in sites:
        vec = _extract(site, registry, accounts, names)
        expected = sitefixtures.EXPECTED_FEATURES[site.url]
        assert tuple(vec.values()) == pytest.approx(expected), site.url


def test_zero_twitter_anchors_force_account_features(sites, registry, providers):
    accounts, names = providers
    site = {s.url: s for s in sites}["https://freemint-cryptocats.io/"]
    vec = _extract(site, registry, accounts, names)
    assert not vec.f4_has_twitter_link
    assert not vec.f5_twitter_active
    assert vec.f8_twitter_followers == 0
    assert vec.f9_twitter_age_days == 0.0


def test_official_url_sets_f1(sites, registry, providers):
    accounts, names = providers
    site = {s.url: s for s in sites}["https://mint.apexapes.com/"]
    assert _extract(site, registry, accounts, names).f1_url_matches_known


def test_f2_implies_f10(sites, registry, providers):
    accounts, names = providers
    for site in sites:
        vec = _extract(site, registry, accounts, names)
        if vec.f2_contract_matches_known:
            assert vec.f10_contract_name_resolvable


def test_extraction_is_pure(sites, registry, providers):
    accounts, names = providers
    site = sites[1]
    v1 = _extract(site, registry, accounts, names)
    v2 = _extract(site, registry, accounts, names)
    assert v1.values() == v2.values()


def test_monotonicity_extra_unknown_address(registry, providers):
    accounts, names = providers
    base_site = sitefixtures.build_sites()[3]  # pixelpandas-mint.com
    base = _extract(base_site, registry, accounts, names)

    extra = "0x" + "cafe" * 10
    augmented = SiteSnapshot(
        url=base_site.url,
        fetched_at=sitefixtures.FETCHED_AT,
        status=200,
        html=base_site.html + f"<p>{extra}</p>".encode(),
        scripts=base_site.scripts,
    )
    claimed = next(r for r in registry if r.slug == base_site.claimed)
    audit = audit_links(augmented, registry, claimed)
    report = classify_attack_vector(augmented, registry)
    vec = extract_features(augmented, report, audit, registry, accounts, names)

    assert vec.f3_eth_address_count == base.f3_eth_address_count + 1
    base_rest = [v for i, v in enumerate(base.values()) if i != 2]
    new_rest = [v for i, v in enumerate(vec.values()) if i != 2]
    assert new_rest == base_rest


def test_disable_f5_constant_and_shape(sites, registry, providers):
    accounts, names = providers
    site = {s.url: s for s in sites}["https://mint.apexapes.com/"]
    vec = _extract(site, registry, accounts, names, FeatureConfig(disable_f5=True))
    assert vec.f5_twitter_active is False
    assert len(vec.values()) == len(FEATURE_NAMES)
    assert vec.f8_twitter_followers == 250000  # other features untouched


def test_provider_outage_degrades_to_sentinel(sites, registry):
    class FailingAccounts:
        as_of = sitefixtures.AS_OF

        def lookup(self, handle):
            raise ConnectionError("socket closed")

    site = {s.url: s for s in sites}["https://mint.apexapes.com/"]
    vec = _extract(site, registry, FailingAccounts(), EmptyProvider())
    assert vec.f5_twitter_active is False
    assert vec.f8_twitter_followers == 0
    assert vec.f9_twitter_age_days == 0.0
    assert "f5" in vec.notes


def test_unknown_handle_is_missing_account(registry, fixture_dir):
    accounts = FixtureAccountProvider(fixture_dir / "accounts.csv", sitefixtures.AS_OF)
    info = accounts.lookup("NoSuchHandle")
    assert not info.exists and not info.active and info.followers == 0


def test_matrix_roundtrip(tmp_path, sites, registry, providers):
    accounts, names = providers
    rows = []
    for i, site in enumerate(sites[:3]):
        vec = _extract(site, registry, accounts, names)
        vec.label = site.label
        rows.append((f"snap{i}", vec))
    path = tmp_path / "matrix.csv"
    write_feature_matrix(path, rows)
    loaded = read_feature_matrix(path)
    assert [sid for sid, _ in loaded] == ["snap0", "snap1", "snap2"]
    for (_, orig), (_, back) in zip(rows, loaded):
        assert back.values() == orig.values()
        assert back.label == orig.label
