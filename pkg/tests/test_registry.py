import csv

import pytest

from nftscout.registry import (
    CSV_HEADER,
    AddressError,
    RegistryError,
    load_registry,
    match_contract,
    match_official,
)


def _write(path, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
    return path


ROW_A = ["apes", "Apes", "apes.com", "0x" + "1" * 40, "ApesNFT", "apes", "1"]
ROW_B = ["cats", "Cats", "cats.io", "0x" + "2" * 40, "", "", "2"]


def test_two_valid_rows(tmp_path):
    reg = load_registry(_write(tmp_path / "r.csv", [ROW_A, ROW_B]))
    assert len(reg) == 2
    assert reg.records[0].slug == "apes"  # row order preserved
    assert reg.records[1].twitter_handle is None


def test_header_only_file(tmp_path):
    reg = load_registry(_write(tmp_path / "r.csv", []))
    assert len(reg) == 0


def test_malformed_contract_reports_line(tmp_path):
    bad = ["bad", "Bad", "bad.com", "0xZZ" + "0" * 38, "", "", "3"]
    with pytest.raises(RegistryError) as exc:
        load_registry(_write(tmp_path / "r.csv", [ROW_A, bad]))
    assert ":3:" in str(exc.value)  # header is line 1, bad row is line 3


def test_duplicate_slug_rejected(tmp_path):
    dup = ["apes", "Apes2", "apes2.com", "0x" + "3" * 40, "", "", "5"]
    with pytest.raises(RegistryError, match="duplicate slug"):
        load_registry(_write(tmp_path / "r.csv", [ROW_A, dup]))


def test_duplicate_rank_rejected(tmp_path):
    dup = ["other", "Other", "other.com", "0x" + "3" * 40, "", "", "1"]
    with pytest.raises(RegistryError, match="duplicate sales_rank"):
        load_registry(_write(tmp_path / "r.csv", [ROW_A, dup]))


def test_wrong_header_rejected(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("slug,name\nx,y\n", encoding="utf-8")
    with pytest.raises(RegistryError, match="expected header"):
        load_registry(path)


@pytest.fixture()
def reg(tmp_path):
    return load_registry(_write(tmp_path / "r.csv", [ROW_A, ROW_B]))


def test_match_official_exact(reg):
    assert match_official("https://apes.com/mint", reg).slug == "apes"


def test_match_official_homoglyph_is_none(reg):
    assert match_official("https://ape5.com", reg) is None


def test_match_official_case_insensitive(reg):
    assert match_official("HTTPS://APES.COM", reg).slug == "apes"


def test_match_official_subdomain(reg):
    assert match_official("https://mint.apes.com/x", reg).slug == "apes"


def test_match_contract_case_normalized(reg):
    assert match_contract("0x" + "1" * 40, reg).slug == "apes"
    upper = "0x" + "A" * 40
    assert match_contract(upper, reg) is None


def test_match_contract_unknown(reg):
    assert match_contract("0x" + "9" * 40, reg) is None


def test_match_contract_malformed(reg):
    with pytest.raises(AddressError):
        match_contract("0x" + "1" * 39, reg)


def test_roundtrip_identity(reg):
    for rec in reg:
        assert match_official(f"https://{rec.official_domain}", reg) == rec
        upper_hex = "0x" + rec.contract_address[2:].upper()
        assert match_contract(upper_hex, reg) == rec


def test_deterministic_load(tmp_path):
    path = _write(tmp_path / "r.csv", [ROW_A, ROW_B])
    assert load_registry(path).records == load_registry(path).records


def test_seed_domains_ranked(reg):
    assert reg.seed_domains() == ["apes.com", "cats.io"]
    assert reg.seed_domains(top_n=1) == ["apes.com"]
