"""Toolkit for discovering, analyzing and classifying NFT-phishing domains.

Subpackages cover the full pipeline: squatting-candidate generation,
certificate-transparency filtering, site snapshots, static analysis,
feature extraction, random-forest classification, longitudinal blocklist
monitoring, on-chain financial analytics, and promotion-tweet analytics.
"""

__version__ = "0.1.0"
