"""End-to-end pipeline: squat -> ct-filter -> fetch -> analyze -> features
-> classify, with a content-hashed artifact manifest.

Re-running with identical inputs and seed reproduces the manifest byte for
byte; wall-clock data lives in the run_meta.json sidecar, which the
manifest deliberately excludes. The fetch stage either imports a
pre-fetched corpus (fixture mode) or fetches candidate domains live.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlsplit

from . import ctingest, squatgen
from .classifier import (
    CLASS_LABELS,
    Dataset,
    TrainParams,
    load_model,
    predict,
    save_model,
    train,
)
from .config import PipelineConfig
from .features import (
    EmptyProvider,
    FeatureConfig,
    FixtureAccountProvider,
    FixtureContractNameProvider,
    extract_features,
    write_feature_matrix,
)
from .registry import load_registry, match_official
from .siteanalysis import audit_links, classify_attack_vector
from .snapshot import fetch_snapshot, iter_snapshot_ids, load_snapshot, store_snapshot

MANIFEST_NAME = "manifest.json"
RUN_META_NAME = "run_meta.json"
STAGES = ("squat", "ct-filter", "fetch", "analyze", "features", "classify")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception, partial_manifest: dict):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.partial_manifest = partial_manifest


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest_of(out_dir: Path, stage_files: dict[str, list[str]], seed: int) -> dict:
    files = []
    for path in sorted(out_dir.rglob("*")):
        if path.is_dir() or path.name in (MANIFEST_NAME, RUN_META_NAME):
            continue
        files.append({
            "path": path.relative_to(out_dir).as_posix(),
            "sha256": _sha256_file(path),
        })
    return {"seed": seed, "stages": stage_files, "files": files}


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute all stages; returns the manifest. Raises StageError with the
    failing stage name and the partial manifest on any stage failure."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    stage_files: dict[str, list[str]] = {}
    started = datetime.now(timezone.utc)
    state: dict = {}

    for stage in STAGES:
        try:
            produced = _STAGE_FUNCS[stage](cfg, out, state)
            stage_files[stage] = sorted(produced)
        except Exception as exc:
            raise StageError(
                stage, exc, _manifest_of(out, stage_files, cfg.seed)
            ) from exc

    manifest = _manifest_of(out, stage_files, cfg.seed)
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / RUN_META_NAME).write_text(
        json.dumps({
            "started_at": started.isoformat(),
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest


def _stage_squat(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    if cfg.registry is None:
        raise ValueError("squat stage requires registry.path")
    reg = load_registry(cfg.registry)
    state["registry"] = reg
    rules = (
        [squatgen.make_rule(k) for k in cfg.rules]
        if cfg.rules
        else squatgen.default_rules()
    )
    per_seed = []
    for rec in sorted(reg, key=lambda r: r.sales_rank)[: cfg.top_seeds]:
        per_seed.append(
            squatgen.permute_domain(
                rec.official_domain, rules, seed_slug=rec.slug, first_seen=cfg.as_of
            )
        )
    candidates, _ = squatgen.dedupe_candidates(*per_seed) if per_seed else (set(), 0)
    state["fuzzer_candidates"] = candidates
    squatgen.write_candidates(out / "candidates.ndjson", candidates)
    return ["candidates.ndjson"]


def _stage_ct_filter(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    candidates = state["fuzzer_candidates"]
    hits: list[squatgen.CandidateDomain] = []
    malformed = 0
    if cfg.ct_stream is not None:
        with cfg.ct_stream.open(encoding="utf-8") as fh:
            records, malformed = ctingest.parse_ct_stream(fh)
        since = cfg.since or datetime.fromtimestamp(0, tz=timezone.utc)
        hits = ctingest.filter_stream(
            records, {c.domain for c in candidates}, cfg.terms, since
        )
    squatgen.write_candidates(out / "ct_hits.ndjson", hits)
    union, overlap = squatgen.dedupe_candidates(candidates, hits)
    state["targets"] = union
    squatgen.write_candidates(out / "targets.ndjson", union)
    summary = {
        "n_fuzzer": len(candidates),
        "n_ct": len(hits),
        "overlap": overlap,
        "n_targets": len(union),
        "malformed_ct_lines": malformed,
    }
    (out / "discovery_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return ["ct_hits.ndjson", "targets.ndjson", "discovery_summary.json"]


def _stage_fetch(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    corpus = out / "corpus"
    targets = sorted(state["targets"], key=lambda c: c.domain)
    index: dict[str, str] = {}

    if cfg.input_corpus is not None:
        by_host: dict[str, list] = {}
        for sid in iter_snapshot_ids(cfg.input_corpus):
            snap = load_snapshot(cfg.input_corpus, sid)
            host = (urlsplit(snap.url).hostname or "").lower()
            by_host.setdefault(host, []).append(snap)
        for cand in targets:
            for snap in by_host.get(cand.domain, []):
                index[snap.url] = store_snapshot(corpus, snap)
    elif targets:
        def fetch_one(cand):
            return fetch_snapshot(f"https://{cand.domain}/")

        with ThreadPoolExecutor(max_workers=max(1, cfg.parallel)) as pool:
            for snap in pool.map(fetch_one, targets):
                index[snap.url] = store_snapshot(corpus, snap)

    state["corpus"] = corpus
    state["seed_by_domain"] = {
        c.domain: c.seed for c in targets if c.seed is not None
    }
    (out / "fetch_index.json").write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    produced = ["fetch_index.json"]
    for path in sorted(corpus.rglob("*")):
        if path.is_file():
            produced.append(path.relative_to(out).as_posix())
    return produced


def _stage_analyze(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    reg = state["registry"]
    corpus = state["corpus"]
    seed_by_domain = state.get("seed_by_domain", {})
    slug_index = {rec.slug: rec for rec in reg}
    analyses = {}
    rows = []
    for sid in iter_snapshot_ids(corpus):
        snap = load_snapshot(corpus, sid)
        host = (urlsplit(snap.url).hostname or "").lower()
        claimed = slug_index.get(seed_by_domain.get(host))
        if claimed is None:
            try:
                claimed = match_official(snap.url, reg)
            except ValueError:
                claimed = None
        audit = audit_links(snap, reg, claimed)
        report = classify_attack_vector(snap, reg)
        analyses[sid] = (snap, report, audit)
        rows.append({
            "snapshot_id": sid,
            "url": snap.url,
            "vector": report.vector,
            "embedded_contract_count": report.embedded_contract_count,
            "dual_evidence": report.dual_evidence,
            "n_addresses": len(report.wallet_addresses),
            "has_wallet_connect": audit.has_wallet_connect,
            "requests_full_rights": audit.requests_full_rights,
            "twitter_links": audit.twitter_links,
            "opensea_links": audit.opensea_links,
            "claimed": claimed.slug if claimed else None,
        })
    state["analyses"] = analyses
    with (out / "analysis.ndjson").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return ["analysis.ndjson"]


def _load_labels(path: Path) -> dict[str, str]:
    labels: dict[str, str] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            labels[row["url"].strip()] = row["label"].strip()
    return labels


def _stage_features(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    reg = state["registry"]
    as_of = cfg.as_of or datetime.now(timezone.utc)
    accounts = (
        FixtureAccountProvider(cfg.accounts, as_of)
        if cfg.accounts
        else EmptyProvider(as_of)
    )
    names = (
        FixtureContractNameProvider(cfg.contract_names)
        if cfg.contract_names
        else EmptyProvider()
    )
    labels = _load_labels(cfg.labels) if cfg.labels else {}
    fcfg = FeatureConfig(disable_f5=cfg.disable_f5)
    matrix = []
    for sid in sorted(state["analyses"]):
        snap, report, audit = state["analyses"][sid]
        vec = extract_features(
            snap, report, audit, reg, accounts, names, fcfg,
            label=labels.get(snap.url),
        )
        matrix.append((sid, vec))
    state["matrix"] = matrix
    write_feature_matrix(out / "features.csv", matrix)
    return ["features.csv"]


def _stage_classify(cfg: PipelineConfig, out: Path, state: dict) -> list[str]:
    matrix = state["matrix"]
    produced = []
    if cfg.model is not None:
        model = load_model(cfg.model)
    else:
        labeled = [(sid, v) for sid, v in matrix if v.label in CLASS_LABELS]
        if not labeled:
            model = None
        else:
            params = TrainParams(
                n_trees=cfg.n_trees,
                max_depth=cfg.max_depth,
                min_leaf=cfg.min_leaf,
                mtry=cfg.mtry,
                seed=cfg.seed,
            )
            model = train(Dataset.from_feature_rows(labeled), params)
            save_model(model, out / "model.json")
            produced.append("model.json")

    with (out / "verdicts.ndjson").open("w", encoding="utf-8") as fh:
        if model is not None:
            snap_urls = {sid: snap.url for sid, (snap, _, _) in state["analyses"].items()}
            for sid, vec in matrix:
                cls, proba = predict(model, vec.values())
                fh.write(json.dumps({
                    "snapshot_id": sid,
                    "url": snap_urls[sid],
                    "class": cls,
                    "phishing_probability": proba,
                }, sort_keys=True) + "\n")
    produced.append("verdicts.ndjson")
    return produced


_STAGE_FUNCS = {
    "squat": _stage_squat,
    "ct-filter": _stage_ct_filter,
    "fetch": _stage_fetch,
    "analyze": _stage_analyze,
    "features": _stage_features,
    "classify": _stage_classify,
}


__all__ = ["MANIFEST_NAME", "RUN_META_NAME", "STAGES", "StageError", "run_pipeline"]
