import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import sitefixtures  # noqa: E402

from nftscout.registry import load_registry  # noqa: E402


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """Registry/accounts/names CSVs plus the 12-site corpus, built once."""
    root = tmp_path_factory.mktemp("fixtures")
    sites = sitefixtures.build_sites()
    sitefixtures.write_registry_csv(root / "registry.csv")
    sitefixtures.write_accounts_csv(root / "accounts.csv")
    sitefixtures.write_contract_names_csv(root / "contract_names.csv")
    sitefixtures.write_labels_csv(root / "labels.csv", sites)
    sitefixtures.write_ct_stream(root / "ct_stream.ndjson", sites)
    sitefixtures.build_corpus(root / "corpus", sites)
    return root


@pytest.fixture(scope="session")
def sites():
    return sitefixtures.build_sites()


@pytest.fixture(scope="session")
def registry(fixture_dir):
    return load_registry(fixture_dir / "registry.csv")
