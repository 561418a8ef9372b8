"""Handcrafted 12-site corpus: 3 token-steal, 4 fund-transfer, 5 benign.

Everything here is authored literal content. EXPECTED_FEATURES was filled
in by hand from the page sources, the registry and the account fixture
(ages verified with plain date arithmetic), before wiring the extraction
path against it.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

from nftscout.snapshot import SiteSnapshot, store_snapshot

AS_OF = datetime(2022, 10, 15, tzinfo=timezone.utc)
FETCHED_AT = datetime(2022, 10, 12, tzinfo=timezone.utc)

# registry contract addresses C1..C10 ("a" * 38 + 2-digit suffix)
C = {i: "0x" + "a" * 38 + f"{i:02d}" for i in range(1, 11)}

# attacker wallets (not in the registry); A2_CS is the checksummed form
A1 = "0x" + "bad" * 13 + "1"
A2 = "0x" + "bad" * 13 + "2"
A3 = "0x" + "bad" * 13 + "3"
A2_CS = "0xbaDbADBADBADbadBaDbaDbaDbAdBadbaDBADBAD2"

REGISTRY_ROWS = [
    # slug, name, official_domain, contract, twitter, opensea, rank
    ("apexapes", "Apex Apes", "apexapes.com", C[1], "ApexApes", "apex-apes", 1),
    ("lunadoodles", "Luna Doodles", "lunadoodles.com", C[2], "LunaDoodles", "luna-doodles", 2),
    ("cryptocats", "Crypto Cats", "cryptocats.io", C[3], "CryptoCatsNFT", "crypto-cats", 3),
    ("pixelpandas", "Pixel Pandas", "pixelpandas.xyz", C[4], "PixelPandas", "pixel-pandas", 4),
    ("moonbirbs", "Moon Birbs", "moonbirbs.com", C[5], "MoonBirbs", "moon-birbs", 5),
    ("metamutants", "Meta Mutants", "metamutants.com", C[6], "MetaMutants", "meta-mutants", 6),
    ("voxelvikings", "Voxel Vikings", "voxelvikings.io", C[7], "VoxelVikings", "voxel-vikings", 7),
    ("astroapes", "Astro Apes", "astroapes.net", C[8], "AstroApes", "astro-apes", 8),
    ("chainchimps", "Chain Chimps", "chainchimps.com", C[9], "ChainChimps", "chain-chimps", 9),
    ("etherelves", "Ether Elves", "etherelves.com", C[10], "EtherElves", "ether-elves", 10),
]

ACCOUNT_ROWS = [
    # handle, exists, active, followers, created_at
    ("ApexApes", 1, 1, 250000, "2021-04-01T00:00:00Z"),
    ("LunaDoodles", 1, 1, 180000, "2021-06-15T00:00:00Z"),
    ("CryptoCatsNFT", 1, 1, 90000, "2021-02-20T00:00:00Z"),
    ("PixelPandas", 1, 1, 120000, "2021-08-10T00:00:00Z"),
    ("MoonBirbs", 1, 1, 60000, "2021-09-01T00:00:00Z"),
    ("EtherElves", 1, 1, 45000, "2021-12-01T00:00:00Z"),
    ("LunaDoodlesGiveaway", 1, 1, 420, "2022-09-20T00:00:00Z"),
    ("MoonBirbsMint", 1, 0, 15, "2022-10-01T00:00:00Z"),
]


def _wallet_boilerplate() -> str:
    return (
        "async function connect() {\n"
        "  if (window.ethereum) {\n"
        "    await window.ethereum.request({method: 'eth_requestAccounts'});\n"
        "  }\n"
        "}\n"
    )


def _steal_payload(contracts, verb) -> str:
    lines = ["const targets = ["]
    lines += [f'  "{addr}",' for addr in contracts]
    lines.append("];")
    lines.append("async function syncAssets(owner, sink) {")
    lines.append("  for (const token of targets) {")
    if verb == "Send":
        lines.append("    await Send(token, owner, sink);")
    else:
        lines.append(f"    await contract.{verb}(owner, sink, token);")
    lines.append("  }")
    lines.append("}")
    lines.append("setApprovalForAll(sink, true); // 0xa22cb465")
    return "\n".join(lines)


def _page(title: str, body: str, script_srcs=()) -> bytes:
    tags = "".join(f'<script src="{src}"></script>' for src in script_srcs)
    return (
        f"<html><head><title>{title}</title></head>"
        f"<body>{body}{tags}</body></html>"
    ).encode()


def _official_page(name, handle, slug, contract) -> bytes:
    body = (
        f"<h1>{name} official mint</h1>"
        f'<a href="https://twitter.com/{handle}">Twitter</a>'
        f'<a href="https://opensea.io/collection/{slug}">OpenSea</a>'
        "<script>\n"
        + _wallet_boilerplate()
        + f'const MINT_CONTRACT = "{contract}";\n'
        "async function mint() {\n"
        "  await window.ethereum.request({method: 'eth_sendTransaction',\n"
        f"    params: [{{to: MINT_CONTRACT, value: '0x11c37937e08000'}}]}});\n"
        "}\n"
        "</script>"
    )
    return _page(f"{name} Mint", body)


class Site:
    def __init__(self, url, html, scripts=(), *, vector, label, claimed=None):
        self.url = url
        self.html = html
        self.scripts = tuple(scripts)
        self.vector = vector
        self.label = label
        self.claimed = claimed  # slug of the imitated / owning collection

    def snapshot(self) -> SiteSnapshot:
        return SiteSnapshot(
            url=self.url,
            fetched_at=FETCHED_AT,
            status=200,
            html=self.html,
            scripts=self.scripts,
            final_url=self.url,
        )


def build_sites() -> list[Site]:
    sites = []

    # --- token steal (3): >= 5 registry contracts + transfer pattern
    url = "https://mint-apexapes.xyz/"
    sites.append(Site(
        url,
        _page("Apex Apes Free Mint",
              '<h1>Apex Apes mint is live!</h1><a href="#">Twitter</a>',
              ["https://mint-apexapes.xyz/drainer.js"]),
        [(
            "https://mint-apexapes.xyz/drainer.js",
            (_wallet_boilerplate()
             + _steal_payload([C[i] for i in range(1, 7)], "safeTransferFrom")).encode(),
        )],
        vector="token_steal", label="phishing", claimed="apexapes",
    ))

    url = "https://lunadoodles-claim.com/"
    body = (
        "<h1>Luna Doodles claim portal</h1>"
        '<a href="https://twitter.com/LunaDoodlesGiveaway">Twitter</a>'
        '<a href="javascript:void(0)">OpenSea</a>'
        "<script>\n"
        + _wallet_boilerplate()
        + _steal_payload([C[i] for i in range(1, 9)], "transferFrom")
        + "\n</script>"
    )
    sites.append(Site(
        url, _page("Luna Doodles Claim", body),
        vector="token_steal", label="phishing", claimed="lunadoodles",
    ))

    url = "https://freemint-cryptocats.io/"
    sites.append(Site(
        url,
        _page("Crypto Cats Free Mint",
              '<h1>Free mint!</h1><a href="javascript:void(0)">OpenSea</a>',
              ["https://freemint-cryptocats.io/sync.js"]),
        [(
            "https://freemint-cryptocats.io/sync.js",
            (_wallet_boilerplate()
             + _steal_payload([C[2], C[3], C[5], C[7], C[9]], "Send")).encode(),
        )],
        vector="token_steal", label="phishing", claimed="cryptocats",
    ))

    # --- fund transfer (4): wallet connect + attacker wallet + value flow
    url = "https://pixelpandas-mint.com/"
    body = (
        "<h1>Pixel Pandas mint</h1>"
        '<a href="#">Twitter</a>'
        "<script>\n" + _wallet_boilerplate() +
        f'const SINK = "{A1}";\n'
        "async function mint() {\n"
        "  await window.ethereum.request({method: 'eth_sendTransaction',\n"
        "    params: [{to: SINK, value: '0x11c37937e08000'}]});\n"
        "}\n</script>"
    )
    sites.append(Site(url, _page("Pixel Pandas Mint", body),
                      vector="fund_transfer", label="phishing", claimed="pixelpandas"))

    url = "https://mint-moonbirbs.com/"
    sites.append(Site(
        url,
        _page("Moon Birbs Mint",
              '<h1>Moon Birbs public mint</h1>'
              '<a href="https://twitter.com/MoonBirbsMint">Twitter</a>',
              ["https://mint-moonbirbs.com/mint.js"]),
        [(
            "https://mint-moonbirbs.com/mint.js",
            (_wallet_boilerplate()
             + f'const OFFICIAL = "{C[5]}";\nconst SINK = "{A2}";\n'
               "async function mint(n) {\n"
               "  await window.ethereum.request({method: 'eth_sendTransaction',\n"
               "    params: [{to: SINK, value: '0x2386f26fc10000'}]});\n"
               "}\n").encode(),
        )],
        vector="fund_transfer", label="phishing", claimed="moonbirbs",
    ))

    url = "https://metamutants-mint.xyz/"
    body = (
        "<h1>Meta Mutants mint</h1>"
        "<script>\n" + _wallet_boilerplate() +
        f'const SINKS = ["{A2_CS}", "{A3}"];\n'
        "async function mint() {\n"
        "  await window.ethereum.request({method: 'eth_sendTransaction',\n"
        "    params: [{to: SINKS[0], value: '0x6a94d74f430000'}]});\n"
        "}\n</script>"
    )
    sites.append(Site(url, _page("Meta Mutants Mint", body),
                      vector="fund_transfer", label="phishing", claimed="metamutants"))

    url = "https://astroapes-claim.com/"
    body = (
        "<h1>Astro Apes whitelist</h1>"
        '<a href="#">Twitter</a><a href="#">OpenSea</a>'
        "<script>\n" + _wallet_boilerplate() +
        f'const PARTNERS = ["{C[8]}", "{C[9]}"];\n'
        f'const SINK = "{A3}";\n'
        "setApprovalForAll(SINK, true);\n"
        "async function join() {\n"
        "  await window.ethereum.request({method: 'eth_sendTransaction',\n"
        "    params: [{to: SINK, value: '0x0'}]});\n"
        "}\n</script>"
    )
    sites.append(Site(url, _page("Astro Apes Whitelist", body),
                      vector="fund_transfer", label="phishing", claimed="astroapes"))

    # --- benign (5): official mint subdomains, own contract + official links
    for slug, name, domain, contract, handle, os_slug, _rank in REGISTRY_ROWS[:4]:
        sites.append(Site(
            f"https://mint.{domain}/",
            _official_page(name, handle, os_slug, contract),
            vector="none", label="benign", claimed=slug,
        ))
    sites.append(Site(
        "https://nft.etherelves.com/",
        _page("Ether Elves",
              "<h1>Ether Elves gallery</h1>"
              '<a href="https://twitter.com/EtherElves">Twitter</a>'
              '<a href="https://opensea.io/collection/ether-elves">OpenSea</a>'
              "<p>Minting opens soon.</p>"),
        vector="none", label="benign", claimed="etherelves",
    ))
    return sites


# Hand-filled expected features, keyed by site URL:
# (f1, f2, f3, f4, f5, f6, f7, f8, f9, f10)
EXPECTED_FEATURES = {
    "https://mint-apexapes.xyz/":      (0, 1, 6, 0, 0, 0, 0, 0,      0.0, 1),
    "https://lunadoodles-claim.com/":  (0, 1, 8, 1, 1, 0, 0, 420,   25.0, 1),
    "https://freemint-cryptocats.io/": (0, 1, 5, 0, 0, 0, 0, 0,      0.0, 1),
    "https://pixelpandas-mint.com/":   (0, 0, 1, 0, 0, 0, 0, 0,      0.0, 0),
    "https://mint-moonbirbs.com/":     (0, 1, 2, 1, 0, 0, 0, 15,    14.0, 1),
    "https://metamutants-mint.xyz/":   (0, 0, 2, 0, 0, 0, 0, 0,      0.0, 0),
    "https://astroapes-claim.com/":    (0, 1, 3, 0, 0, 0, 0, 0,      0.0, 1),
    "https://mint.apexapes.com/":      (1, 1, 1, 1, 1, 1, 1, 250000, 562.0, 1),
    "https://mint.lunadoodles.com/":   (1, 1, 1, 1, 1, 1, 1, 180000, 487.0, 1),
    "https://mint.cryptocats.io/":     (1, 1, 1, 1, 1, 1, 1, 90000,  602.0, 1),
    "https://mint.pixelpandas.xyz/":   (1, 1, 1, 1, 1, 1, 1, 120000, 431.0, 1),
    "https://nft.etherelves.com/":     (1, 0, 0, 1, 1, 1, 1, 45000,  318.0, 0),
}


def write_registry_csv(path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "slug", "name", "official_domain", "contract_address",
            "twitter_handle", "opensea_slug", "sales_rank",
        ])
        writer.writerows(REGISTRY_ROWS)
    return path


def write_accounts_csv(path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["handle", "exists", "active", "followers", "created_at"])
        writer.writerows(ACCOUNT_ROWS)
    return path


def write_contract_names_csv(path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["contract_address", "name"])
        for slug, name, _domain, contract, *_ in REGISTRY_ROWS:
            writer.writerow([contract, name])
    return path


def write_labels_csv(path: Path, sites) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "label"])
        for site in sites:
            writer.writerow([site.url, site.label])
    return path


def write_ct_stream(path: Path, sites) -> Path:
    """CT records covering every fixture host, issued within the window."""
    not_before = datetime(2022, 10, 5, tzinfo=timezone.utc).timestamp()
    with path.open("w", encoding="utf-8") as fh:
        for i, site in enumerate(sites):
            host = site.url.split("//")[1].rstrip("/")
            fh.write(json.dumps({
                "data": {
                    "leaf_cert": {
                        "all_domains": [host, f"*.{host}"],
                        "not_before": not_before + i * 3600,
                        "issuer": {"O": "Fixture CA"},
                    },
                    "seen": not_before + i * 3600 + 60,
                }
            }) + "\n")
    return path


def build_corpus(corpus_dir: Path, sites=None) -> dict[str, str]:
    """Store every fixture snapshot; returns url -> snapshot_id."""
    sites = sites if sites is not None else build_sites()
    index = {}
    for site in sites:
        index[site.url] = store_snapshot(corpus_dir, site.snapshot())
    return index
