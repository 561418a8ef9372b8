"""The ``scout`` command line: subcommand wiring across all modules.

Every subcommand is non-interactive and writes machine-readable output to
files or stdout. Exit codes: 0 ok, 1 usage, 2 data error, 3 stage failure.
"""

from __future__ import annotations

import functools
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import (
    chainlytics,
    classifier,
    config as configmod,
    ctingest,
    features as featuresmod,
    pipeline as pipelinemod,
    promolytics,
    registry as registrymod,
    sentinel,
    siteanalysis,
    snapshot as snapshotmod,
    squatgen,
)
from .psl import DomainError
from .timefmt import parse_rfc3339

_DATA_ERRORS = (
    registrymod.RegistryError,
    registrymod.AddressError,
    DomainError,
    ctingest.CtParseError,
    snapshotmod.SnapshotNotFound,
    siteanalysis.ChecksumError,
    classifier.DatasetError,
    sentinel.MonitorError,
    chainlytics.LedgerError,
    chainlytics.PriceError,
    promolytics.PromoError,
    configmod.ConfigError,
    ValueError,
)


def data_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except pipelinemod.StageError as exc:
            click.echo(f"error: {exc}", err=True)
            click.echo(
                json.dumps(exc.partial_manifest, indent=2, sort_keys=True), err=True
            )
            sys.exit(3)
        except _DATA_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _parse_duration_minutes(text: str) -> float:
    text = text.strip().lower()
    units = {"m": 1.0, "h": 60.0, "d": 1440.0}
    if text and text[-1] in units:
        return float(text[:-1]) * units[text[-1]]
    return float(text)


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


@click.group()
def main():
    """NFT-phishing discovery, analysis, classification and analytics."""
    click.UsageError.exit_code = 1


# ------------------------------------------------------------- discovery


@main.command()
@click.option("--seeds", "seeds_path", required=True, type=click.Path(exists=True))
@click.option("--rules", default=",".join(squatgen.RULE_KINDS), show_default=True)
@click.option("--terms", default=",".join(squatgen.DEFAULT_TERMS), show_default=True)
@click.option("--top", default=100, show_default=True, help="Seed count by sales rank.")
@click.option("--as-of", "as_of", default=None, help="RFC 3339 first_seen stamp.")
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def squat(seeds_path, rules, terms, top, as_of, out_path):
    """Generate squatting candidates from registry seed domains."""
    reg = registrymod.load_registry(seeds_path)
    term_list = tuple(t.strip().lower() for t in terms.split(",") if t.strip())
    rule_list = []
    for kind in (r.strip() for r in rules.split(",") if r.strip()):
        params = term_list if kind == "term_affix" else None
        rule_list.append(squatgen.make_rule(kind, params))
    stamp = parse_rfc3339(as_of) if as_of else None
    per_seed = [
        squatgen.permute_domain(
            rec.official_domain, rule_list, seed_slug=rec.slug, first_seen=stamp
        )
        for rec in sorted(reg, key=lambda r: r.sales_rank)[:top]
    ]
    union, overlap = (
        squatgen.dedupe_candidates(*per_seed) if per_seed else (set(), 0)
    )
    squatgen.write_candidates(out_path, union)
    click.echo(f"{len(union)} candidates from {len(per_seed)} seeds (overlap {overlap})")


@main.command("ct-filter")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--candidates", "candidates_path", type=click.Path(exists=True))
@click.option("--terms", default=",".join(squatgen.DEFAULT_TERMS), show_default=True)
@click.option("--since", required=True, help="RFC 3339 collection start.")
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def ct_filter(in_path, candidates_path, terms, since, out_path):
    """Filter a CT stream dump for watched or NFT-flavored new domains."""
    watch = set()
    if candidates_path:
        watch = {c.domain for c in squatgen.read_candidates(candidates_path)}
    term_list = tuple(t.strip().lower() for t in terms.split(",") if t.strip())
    with open(in_path, encoding="utf-8") as fh:
        records, malformed = ctingest.parse_ct_stream(fh)
    hits = ctingest.filter_stream(records, watch, term_list, parse_rfc3339(since))
    squatgen.write_candidates(out_path, hits)
    click.echo(f"{len(hits)} hits ({malformed} malformed lines skipped)")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--parallel", default=8, show_default=True)
@click.option("--max-bytes", default=5 * 1024 * 1024, show_default=True)
@click.option("--timeout", default=20.0, show_default=True)
@click.option("--max-scripts", default=10, show_default=True)
@data_errors
def fetch(in_path, corpus_path, parallel, max_bytes, timeout, max_scripts):
    """Fetch candidate domains into the snapshot corpus."""
    from concurrent.futures import ThreadPoolExecutor

    limits = snapshotmod.FetchLimits(
        max_bytes=max_bytes, timeout=timeout, max_scripts=max_scripts
    )
    candidates = squatgen.read_candidates(in_path)

    def fetch_one(cand):
        return snapshotmod.fetch_snapshot(f"https://{cand.domain}/", limits)

    stored = 0
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        for snap in pool.map(fetch_one, candidates):
            snapshotmod.store_snapshot(corpus_path, snap)
            stored += 1
    click.echo(f"stored {stored} snapshots in {corpus_path}")


# -------------------------------------------------------------- analysis


def _analyze_corpus(corpus_path, reg):
    for sid in snapshotmod.iter_snapshot_ids(corpus_path):
        snap = snapshotmod.load_snapshot(corpus_path, sid)
        try:
            claimed = registrymod.match_official(snap.url, reg)
        except ValueError:
            claimed = None
        audit = siteanalysis.audit_links(snap, reg, claimed)
        report = siteanalysis.classify_attack_vector(snap, reg)
        yield sid, snap, report, audit


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--registry", "registry_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def analyze(corpus_path, registry_path, out_path):
    """Static analysis of every snapshot: attack vector plus link audit."""
    reg = registrymod.load_registry(registry_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for sid, snap, report, audit in _analyze_corpus(corpus_path, reg):
            fh.write(json.dumps({
                "snapshot_id": sid,
                "url": snap.url,
                "vector": report.vector,
                "embedded_contract_count": report.embedded_contract_count,
                "dual_evidence": report.dual_evidence,
                "n_addresses": len(report.wallet_addresses),
                "addresses": [a.hex for a in report.wallet_addresses],
                "has_wallet_connect": audit.has_wallet_connect,
                "requests_full_rights": audit.requests_full_rights,
                "twitter_links": audit.twitter_links,
                "opensea_links": audit.opensea_links,
            }, sort_keys=True) + "\n")
    click.echo(f"analysis written to {out_path}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--registry", "registry_path", required=True, type=click.Path(exists=True))
@click.option("--accounts", "accounts_path", type=click.Path(exists=True))
@click.option("--contract-names", "names_path", type=click.Path(exists=True))
@click.option("--labels", "labels_path", type=click.Path(exists=True))
@click.option("--as-of", "as_of", default=None, help="RFC 3339 account-fetch time.")
@click.option("--disable-f5", is_flag=True, default=False)
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def features(corpus_path, registry_path, accounts_path, names_path, labels_path,
             as_of, disable_f5, out_path):
    """Extract the 10-feature matrix from an analyzed corpus."""
    reg = registrymod.load_registry(registry_path)
    stamp = parse_rfc3339(as_of) if as_of else datetime.now(timezone.utc)
    accounts = (
        featuresmod.FixtureAccountProvider(accounts_path, stamp)
        if accounts_path
        else featuresmod.EmptyProvider(stamp)
    )
    names = (
        featuresmod.FixtureContractNameProvider(names_path)
        if names_path
        else featuresmod.EmptyProvider()
    )
    labels = {}
    if labels_path:
        import csv as _csv

        with open(labels_path, newline="", encoding="utf-8") as fh:
            labels = {
                row["url"].strip(): row["label"].strip()
                for row in _csv.DictReader(fh)
            }
    fcfg = featuresmod.FeatureConfig(disable_f5=disable_f5)
    matrix = []
    for sid, snap, report, audit in _analyze_corpus(corpus_path, reg):
        vec = featuresmod.extract_features(
            snap, report, audit, reg, accounts, names, fcfg,
            label=labels.get(snap.url),
        )
        matrix.append((sid, vec))
    featuresmod.write_feature_matrix(out_path, matrix)
    click.echo(f"{len(matrix)} feature rows written to {out_path}")


# ------------------------------------------------------------ classifier


def _train_params(n_trees, max_depth, min_leaf, mtry, seed) -> classifier.TrainParams:
    return classifier.TrainParams(
        n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf, mtry=mtry, seed=seed
    )


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--n-trees", default=200, show_default=True)
@click.option("--max-depth", default=None, type=int)
@click.option("--min-leaf", default=1, show_default=True)
@click.option("--mtry", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@data_errors
def train(features_path, model_path, n_trees, max_depth, min_leaf, mtry, seed):
    """Train the random forest on a labeled feature matrix."""
    rows = featuresmod.read_feature_matrix(features_path)
    data = classifier.Dataset.from_feature_rows(rows)
    model = classifier.train(data, _train_params(n_trees, max_depth, min_leaf, mtry, seed))
    classifier.save_model(model, model_path)
    importances = classifier.feature_importance(model)
    _echo_json({
        "model": str(model_path),
        "n_rows": len(data),
        "feature_importance": {name: imp for name, imp in importances},
    })


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--holdout", default=None, type=float,
              help="Also evaluate a stratified holdout split, e.g. 0.3 for 70:30.")
@click.option("--n-trees", default=200, show_default=True)
@click.option("--max-depth", default=None, type=int)
@click.option("--min-leaf", default=1, show_default=True)
@click.option("--mtry", default=None, type=int)
@data_errors
def cv(features_path, k, seed, holdout, n_trees, max_depth, min_leaf, mtry):
    """k-fold cross-validation (and optionally a holdout split) report."""
    rows = featuresmod.read_feature_matrix(features_path)
    data = classifier.Dataset.from_feature_rows(rows)
    params = _train_params(n_trees, max_depth, min_leaf, mtry, seed)
    per_fold, mean = classifier.cross_validate(data, k, seed, params)
    out = {
        "k": k,
        "folds": [m.as_dict() for m in per_fold],
        "mean": mean.as_dict(),
    }
    if holdout is not None:
        train_set, test_set = classifier.holdout_split(data, holdout, seed)
        model = classifier.train(train_set, params)
        out["holdout"] = {
            "test_fraction": holdout,
            "train_rows": len(train_set),
            "test_rows": len(test_set),
            "metrics": classifier.evaluate(model, test_set).as_dict(),
        }
    _echo_json(out)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def classify(model_path, features_path, out_path):
    """Predict verdicts for every row of a feature matrix."""
    model = classifier.load_model(model_path)
    rows = featuresmod.read_feature_matrix(features_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for sid, vec in rows:
            cls, proba = classifier.predict(model, vec.values())
            fh.write(json.dumps({
                "snapshot_id": sid,
                "class": cls,
                "phishing_probability": proba,
            }, sort_keys=True) + "\n")
    click.echo(f"{len(rows)} verdicts written to {out_path}")


# --------------------------------------------------------------- monitor


@main.command()
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True))
@click.option("--providers", "providers_path", required=True, type=click.Path(exists=True))
@click.option("--interval", default="10m", show_default=True)
@click.option("--horizon", default="168h", show_default=True)
@click.option("--simulate", is_flag=True, default=False)
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def monitor(targets_path, providers_path, interval, horizon, simulate, out_path):
    """Poll blocklist/detection/liveness providers over the horizon."""
    if not simulate:
        raise click.UsageError(
            "live provider integrations are out of scope; use --simulate "
            "with scripted provider fixtures"
        )
    targets = sentinel.read_targets(targets_path)
    providers = sentinel.load_provider_fixtures(providers_path)
    log = sentinel.run_monitor(
        targets,
        providers,
        _parse_duration_minutes(interval),
        _parse_duration_minutes(horizon),
    )
    sentinel.write_log(out_path, log)
    click.echo(f"{len(log)} samples written to {out_path}")


@main.group()
def report():
    """Reports computed from a monitor event log."""


@report.command("coverage")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True))
@click.option("--provider", required=True)
@click.option("--cohort", default="nft", show_default=True)
@click.option("--timeseries", "timeseries_path", type=click.Path(),
              help="Also write (minutes, cumulative coverage) CSV here.")
@data_errors
def report_coverage(log_path, targets_path, provider, cohort, timeseries_path):
    log = sentinel.read_log(log_path, sentinel.read_targets(targets_path))
    rep = sentinel.coverage_stats(log, provider, cohort)
    median = rep.median_speed
    _echo_json({
        "provider": rep.provider,
        "cohort": rep.cohort,
        "coverage_fraction": rep.coverage_fraction,
        "coverage_percent": round(100.0 * rep.coverage_fraction, 2),
        "median_speed_minutes": (
            median.total_seconds() / 60.0 if median is not None else None
        ),
        "median_speed_hhmm": (
            f"{int(median.total_seconds() // 3600):02d}:"
            f"{int(median.total_seconds() % 3600 // 60):02d}"
            if median is not None
            else "—"
        ),
        "n_detected": rep.n_detected,
        "n_total": rep.n_total,
    })
    if timeseries_path:
        series = sentinel.coverage_timeseries(log, provider, cohort)
        with open(timeseries_path, "w", encoding="utf-8") as fh:
            fh.write("minutes,cumulative_coverage\n")
            for minutes, fraction in series:
                fh.write(f"{minutes},{fraction}\n")


@report.command("takedown")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True))
@data_errors
def report_takedown(log_path, targets_path):
    log = sentinel.read_log(log_path, sentinel.read_targets(targets_path))
    summary = sentinel.takedown_stats(log)
    _echo_json({
        "inactivity_hours": {
            url: dt.total_seconds() / 3600.0 for url, dt in sorted(summary.times.items())
        },
        "censored": list(summary.censored),
        "quartiles_hours": summary.quartiles_hours,
    })


@report.command("histogram")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True))
@click.option("--providers", required=True, help="Comma-separated provider ids.")
@data_errors
def report_histogram(log_path, targets_path, providers):
    log = sentinel.read_log(log_path, sentinel.read_targets(targets_path))
    hist = sentinel.detection_histogram(
        log, {p.strip() for p in providers.split(",") if p.strip()}
    )
    _echo_json({str(k): v for k, v in hist.items()})


# ----------------------------------------------------------- chain report


@main.command("chain-report")
@click.option("--txs", "txs_path", required=True, type=click.Path(exists=True))
@click.option("--wallets", "wallets_path", required=True, type=click.Path(exists=True))
@click.option("--prices", "prices_path", required=True, type=click.Path(exists=True))
@click.option("--categories", "categories_path", type=click.Path(exists=True),
              help="CSV wallet,category; wallets without a row fall in 'uncategorized'.")
@click.option("--iqr-category", "iqr_categories", multiple=True,
              help="Apply the 1.5*IQR exclusion to this category (repeatable).")
@click.option("--window-from", "window_from", default=None)
@click.option("--window-to", "window_to", default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def chain_report(txs_path, wallets_path, prices_path, categories_path,
                 iqr_categories, window_from, window_to, out_path):
    """Per-wallet summaries and per-category financial statistics."""
    import csv as _csv

    txs = chainlytics.parse_transactions(txs_path)
    prices = chainlytics.PriceTable.load(prices_path)
    wallets = [
        line.strip()
        for line in Path(wallets_path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    window = (
        parse_rfc3339(window_from) if window_from else None,
        parse_rfc3339(window_to) if window_to else None,
    )
    category_of: dict[str, str] = {}
    if categories_path:
        with open(categories_path, newline="", encoding="utf-8") as fh:
            for row in _csv.DictReader(fh):
                category_of[row["wallet"].strip().lower()] = row["category"].strip()

    summaries = [
        chainlytics.wallet_summary(txs, wallet, prices, window) for wallet in wallets
    ]
    by_category: dict[str, list] = {}
    for s in summaries:
        by_category.setdefault(
            category_of.get(s.wallet.lower(), "uncategorized"), []
        ).append(s)
    cat_stats = chainlytics.category_stats(by_category, set(iqr_categories))
    doc = {
        "wallets": [s.as_dict() for s in summaries],
        "categories": {name: cs.as_dict() for name, cs in sorted(cat_stats.items())},
    }
    Path(out_path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(f"report written to {out_path}")


# ----------------------------------------------------------------- promo


@main.group()
def promo():
    """Promotion-tweet analytics."""


@promo.command("parse")
@click.option("--tweets", "tweets_path", required=True, type=click.Path(exists=True))
@click.option("--patterns", "patterns_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@data_errors
def promo_parse(tweets_path, patterns_path, out_path):
    """Parse giveaway tweets into structured promotion records."""
    grammar = (
        promolytics.TweetGrammar.load(patterns_path) if patterns_path else None
    )
    matched = 0
    tweets = promolytics.read_tweets(tweets_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for tweet in tweets:
            parsed = promolytics.parse_promotion_tweet(
                tweet["text"], grammar,
                tweet_id=str(tweet.get("id", "")) or None,
                author=tweet.get("author"),
            )
            if parsed is None:
                continue
            matched += 1
            fh.write(json.dumps({
                "tweet_id": parsed.tweet_id,
                "promoter": parsed.promoter,
                "promotee": parsed.promotee,
                "prize_amount": parsed.prize[0] if parsed.prize else None,
                "prize_currency": parsed.prize[1] if parsed.prize else None,
                "deadline_minutes": (
                    parsed.deadline.total_seconds() / 60.0 if parsed.deadline else None
                ),
                "actions": sorted(parsed.actions),
            }, sort_keys=True) + "\n")
    click.echo(f"{matched}/{len(tweets)} tweets matched the promotion grammar")


@promo.command("bots")
@click.option("--engagement", "engagement_path", required=True, type=click.Path(exists=True))
@click.option("-t", "--threshold", default=promolytics.DEFAULT_BOT_THRESHOLD,
              show_default=True)
@click.option("--sweep", default=None,
              help="Comma-separated thresholds for a sweep series.")
@data_errors
def promo_bots(engagement_path, threshold, sweep):
    """Bot fraction at a score threshold, with optional threshold sweep."""
    records = promolytics.read_engagement(engagement_path)
    result = promolytics.bot_fraction(records, threshold)
    out = {
        "threshold": result.threshold,
        "fraction": result.fraction,
        "n_bots": result.n_bots,
        "n_total": result.n_total,
        "per_relation": result.per_relation,
    }
    if sweep:
        thresholds = [float(t) for t in sweep.split(",") if t.strip()]
        out["sweep"] = [
            {"threshold": t, "bots": n}
            for t, n in promolytics.threshold_sweep(records, thresholds)
        ]
    _echo_json(out)


@promo.command("wilcoxon")
@click.option("--x", "x_values", required=True, help="Comma-separated sample.")
@click.option("--y", "y_values", required=True, help="Comma-separated sample.")
@click.option("--mode", type=click.Choice(["exact", "normal"]), default="exact",
              show_default=True)
@data_errors
def promo_wilcoxon(x_values, y_values, mode):
    """Two-sided Wilcoxon rank-sum test."""
    x = [float(v) for v in x_values.split(",") if v.strip()]
    y = [float(v) for v in y_values.split(",") if v.strip()]
    result = promolytics.wilcoxon_rank_sum(x, y, mode)
    _echo_json({"u": result.u, "p": result.p, "mode": result.mode})


@promo.command("gains")
@click.option("--gains", "gains_path", required=True, type=click.Path(exists=True),
              help="CSV group,gain with one follower-gain value per row.")
@data_errors
def promo_gains(gains_path):
    """Descriptive statistics and CDF of follower gains per status group."""
    import csv as _csv

    groups: dict[str, list[int]] = {}
    with open(gains_path, newline="", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            groups.setdefault(row["group"].strip(), []).append(int(row["gain"]))
    result = promolytics.follower_gain_stats(groups)
    _echo_json({
        group: {"summary": gs.summary.as_dict(), "cdf": [list(p) for p in gs.cdf]}
        for group, gs in sorted(result.items())
    })


@promo.command("label")
@click.option("--evidence", "evidence_path", required=True, type=click.Path(exists=True))
@click.option("--now", "now_str", required=True, help="RFC 3339 evaluation time.")
@click.option("--lenient-rugpull", is_flag=True, default=False,
              help="Rugpull when either the website or marketplace is dead.")
@data_errors
def promo_label(evidence_path, now_str, lenient_rugpull):
    """Rule-based fraud labels for collection evidence rows."""
    now = parse_rfc3339(now_str)
    labels = {
        name: promolytics.label_collection(
            ev, now, rugpull_requires_both=not lenient_rugpull
        )
        for name, ev in promolytics.read_evidence(evidence_path)
    }
    _echo_json(labels)


# -------------------------------------------------------------- pipeline


@main.command("pipeline")
@click.option("--config", "config_path", type=click.Path(exists=True),
              envvar=configmod.ENV_CONFIG_VAR)
@data_errors
def pipeline_cmd(config_path):
    """Run squat -> ct-filter -> fetch -> analyze -> features -> classify."""
    if not config_path:
        raise click.UsageError(
            f"--config required (or set {configmod.ENV_CONFIG_VAR})"
        )
    cfg = configmod.parse_config(config_path)
    manifest = pipelinemod.run_pipeline(cfg)
    _echo_json(manifest)


if __name__ == "__main__":
    main()
