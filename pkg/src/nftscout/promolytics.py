"""Promotion-ecosystem analytics: giveaway parsing, bots, rank test, labels.

The giveaway grammar lives in a bundled pattern file (sweepstake phrasing
drifts, so it is data, not code). A tweet matches only when it names a
prize, directs participants to follow an @handle, and asks for a retweet;
like/tag directives and a deadline are optional extras.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

from . import stats
from .timefmt import parse_rfc3339

RELATIONS = ("retweeter", "follower_during", "follower_after", "liker", "replier")
ACCOUNT_STATUSES = ("active", "removed", "suspended")
FRAUD_LABELS = ("phishing", "rugpull", "abandoned_premint", "legitimate", "unknown")

DEFAULT_BOT_THRESHOLD = 0.43
ABANDONMENT_SILENCE = timedelta(days=60)

_UNIT_MINUTES = {"min": 1.0, "h": 60.0, "d": 1440.0, "w": 10080.0}


class PromoError(ValueError):
    pass


# ------------------------------------------------------------ tweet parsing


@dataclass(frozen=True)
class PromotionTweet:
    promotee: str  # handle without "@"
    actions: frozenset[str]
    prize: tuple[float, str] | None = None  # (amount, currency)
    deadline: timedelta | None = None
    tweet_id: str | None = None
    promoter: str | None = None

    def __post_init__(self):
        if self.promoter and self.promotee.lower() == self.promoter.lstrip("@").lower():
            raise PromoError("promotee must differ from promoter")
        if not {"follow", "retweet"} <= self.actions:
            raise PromoError("a promotion requires follow and retweet actions")


class TweetGrammar:
    """Compiled giveaway patterns, loaded from the bundled file by default."""

    def __init__(self, spec: dict):
        def compile_all(key):
            return [re.compile(p, re.IGNORECASE) for p in spec.get(key, [])]

        self.prize = compile_all("prize")
        self.follow = compile_all("follow")
        self.retweet = compile_all("retweet")
        self.like = compile_all("like")
        self.tag = compile_all("tag")
        self.deadline = compile_all("deadline")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "TweetGrammar":
        if path is None:
            text = (
                resources.files("nftscout.data")
                .joinpath("promo_patterns.json")
                .read_text(encoding="utf-8")
            )
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls(json.loads(text))


_DEFAULT_GRAMMAR: TweetGrammar | None = None


def default_grammar() -> TweetGrammar:
    global _DEFAULT_GRAMMAR
    if _DEFAULT_GRAMMAR is None:
        _DEFAULT_GRAMMAR = TweetGrammar.load()
    return _DEFAULT_GRAMMAR


def _first_match(patterns, text):
    hits = [m for m in (p.search(text) for p in patterns) if m]
    if not hits:
        return None
    return min(hits, key=lambda m: m.start())


def _parse_deadline(match) -> timedelta:
    num = float(match.group("num"))
    unit = match.group("unit").lower()
    for prefix, minutes in _UNIT_MINUTES.items():
        if unit.startswith(prefix):
            return timedelta(minutes=num * minutes)
    return timedelta(hours=num)


def parse_promotion_tweet(
    text: str,
    grammar: TweetGrammar | None = None,
    *,
    tweet_id: str | None = None,
    author: str | None = None,
) -> PromotionTweet | None:
    """Parse giveaway text into a PromotionTweet, or None when it does not
    match the grammar. The first follow directive names the promotee."""
    grammar = grammar or default_grammar()
    follow = _first_match(grammar.follow, text)
    retweet = _first_match(grammar.retweet, text)
    prize = _first_match(grammar.prize, text)
    if not (follow and retweet and prize):
        return None
    promotee = follow.group("handle").lstrip("@")
    if author and promotee.lower() == author.lstrip("@").lower():
        return None

    actions = {"follow", "retweet"}
    if _first_match(grammar.like, text):
        actions.add("like")
    if _first_match(grammar.tag, text):
        actions.add("tag")

    deadline_m = _first_match(grammar.deadline, text)
    amount = float(prize.group("amount").replace(",", ""))
    currency = prize.group("currency")
    currency = currency if currency in "$€£" else currency.upper()
    return PromotionTweet(
        promotee=promotee,
        actions=frozenset(actions),
        prize=(amount, currency),
        deadline=_parse_deadline(deadline_m) if deadline_m else None,
        tweet_id=tweet_id,
        promoter=author,
    )


def read_tweets(path: str | Path) -> list[dict]:
    """NDJSON tweets: {id, author, text, created_at}."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


# ----------------------------------------------------------- bot statistics


@dataclass(frozen=True)
class EngagementRecord:
    account_id: str
    bot_score: float
    relation: str

    def __post_init__(self):
        if not 0.0 <= self.bot_score <= 1.0:
            raise PromoError(f"bot_score out of [0,1]: {self.bot_score}")
        if self.relation not in RELATIONS:
            raise PromoError(f"unknown relation: {self.relation!r}")


def read_engagement(path: str | Path) -> list[EngagementRecord]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                EngagementRecord(
                    account_id=row["account_id"].strip(),
                    bot_score=float(row["bot_score"]),
                    relation=row["relation"].strip(),
                )
            )
    return out


@dataclass(frozen=True)
class BotStats:
    threshold: float
    fraction: float
    n_bots: int
    n_total: int
    per_relation: dict


def bot_fraction(records, t: float = DEFAULT_BOT_THRESHOLD) -> BotStats:
    """Fraction of accounts with bot_score >= t, overall and per relation."""
    records = list(records)
    if not records:
        raise PromoError("no engagement records")
    if not 0.0 <= t <= 1.0:
        raise PromoError(f"threshold out of [0,1]: {t}")
    bots = sum(1 for r in records if r.bot_score >= t)
    per_relation: dict[str, float] = {}
    for relation in RELATIONS:
        group = [r for r in records if r.relation == relation]
        if group:
            per_relation[relation] = sum(
                1 for r in group if r.bot_score >= t
            ) / len(group)
    return BotStats(
        threshold=t,
        fraction=bots / len(records),
        n_bots=bots,
        n_total=len(records),
        per_relation=per_relation,
    )


def threshold_sweep(records, thresholds) -> list[tuple[float, int]]:
    """(threshold, bot count) series; counts are non-increasing in t."""
    thresholds = list(thresholds)
    if thresholds != sorted(thresholds):
        raise PromoError("thresholds must be sorted ascending")
    records = list(records)
    return [
        (t, sum(1 for r in records if r.bot_score >= t)) for t in thresholds
    ]


# -------------------------------------------------------- wilcoxon rank sum


@dataclass(frozen=True)
class WilcoxonResult:
    u: float
    p: float
    mode: str


def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_p(scaled_ranks: list[int], nx: int, u_scaled: int) -> float:
    """Two-sided exact p over all C(N, nx) equally likely rank assignments.

    dp[j][s] counts ways to pick j of the scaled ranks with sum s; U_x for a
    pick with sum s is (s - nx*(nx+1)) / 2 in scaled units.
    """
    max_sum = sum(scaled_ranks)
    dp = [[0] * (max_sum + 1) for _ in range(nx + 1)]
    dp[0][0] = 1
    for r in scaled_ranks:
        for j in range(nx, 0, -1):
            row, prev = dp[j], dp[j - 1]
            for s in range(max_sum, r - 1, -1):
                if prev[s - r]:
                    row[s] += prev[s - r]
    total = math.comb(len(scaled_ranks), nx)
    offset = nx * (nx + 1)  # scaled min rank sum
    bound = u_scaled + offset
    count = sum(c for s, c in enumerate(dp[nx]) if s <= bound and c)
    return min(1.0, 2.0 * count / total)


def _normal_p(u: float, nx: int, ny: int, pooled_ranks: list[float]) -> float:
    n = nx + ny
    mu = nx * ny / 2.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for r in pooled_ranks:
        seen[r] = seen.get(r, 0) + 1
    for cnt in seen.values():
        tie_term += cnt ** 3 - cnt
    var = (nx * ny / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = (u - mu + 0.5) / math.sqrt(var)  # continuity correction toward mean
    phi = 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    return max(0.0, min(1.0, 2.0 * phi))


def wilcoxon_rank_sum(x, y, mode: str = "exact") -> WilcoxonResult:
    """Two-sided rank-sum test with mid-rank ties; U = min(U_x, U_y).

    Exact mode enumerates the null distribution of rank assignments and is
    limited to pooled sizes <= 20; normal mode applies the tie-corrected
    normal approximation with continuity correction.
    """
    x, y = list(x), list(y)
    if not x or not y:
        raise PromoError("both samples must be non-empty")
    nx, ny = len(x), len(y)
    ranks = _midranks(x + y)
    wx = sum(ranks[:nx])
    ux = wx - nx * (nx + 1) / 2.0
    uy = nx * ny - ux
    u = min(ux, uy)
    if mode == "exact":
        if nx + ny > 20:
            raise PromoError("exact mode requires |x| + |y| <= 20")
        scaled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(scaled, nx, int(round(2 * u)))
        return WilcoxonResult(u=u, p=p, mode="exact")
    if mode == "normal":
        return WilcoxonResult(u=u, p=_normal_p(u, nx, ny, ranks), mode="normal")
    raise PromoError(f"unknown mode: {mode!r}")


# ------------------------------------------------------------ gains & labels


@dataclass(frozen=True)
class GainStats:
    group: str
    summary: stats.Descriptive
    cdf: tuple[tuple[float, float], ...]


def follower_gain_stats(gains_by_group: dict[str, list[int]]) -> dict[str, GainStats]:
    """Descriptive stats plus empirical CDF of follower gains per group."""
    out: dict[str, GainStats] = {}
    for group, gains in gains_by_group.items():
        if not gains:
            raise PromoError(f"group {group!r} has no gain values")
        if any(g < 0 for g in gains):
            raise PromoError(f"group {group!r} contains negative gains")
        out[group] = GainStats(
            group=group,
            summary=stats.Descriptive.of(gains),
            cdf=tuple(stats.empirical_cdf(gains)),
        )
    return out


@dataclass(frozen=True)
class CollectionEvidence:
    account_status: str  # active | removed | suspended
    mint_completed: bool
    mint_date: datetime | None
    last_tweet_at: datetime | None
    website_alive: bool
    marketplace_alive: bool
    shares_phishing_link: bool
    premint_full_rights: bool = False

    def __post_init__(self):
        if self.account_status not in ACCOUNT_STATUSES:
            raise PromoError(f"unknown account status: {self.account_status!r}")


def label_collection(
    e: CollectionEvidence,
    now: datetime,
    *,
    rugpull_requires_both: bool = True,
) -> str:
    """Rule-based fraud label; every evidence combination maps to one label.

    Precedence: phishing, rugpull, abandoned_premint, legitimate, unknown.
    The strict rugpull rule needs both the website and the marketplace page
    dead; the lenient variant (flag off) accepts either.
    """
    if e.shares_phishing_link:
        return "phishing"
    site_dead, market_dead = not e.website_alive, not e.marketplace_alive
    rug_dead = (site_dead and market_dead) if rugpull_requires_both else (site_dead or market_dead)
    if e.mint_completed and rug_dead:
        return "rugpull"
    if (
        not e.mint_completed
        and e.mint_date is not None
        and e.mint_date < now
        and (e.last_tweet_at is None or now - e.last_tweet_at >= ABANDONMENT_SILENCE)
    ):
        return "abandoned_premint"
    if e.account_status == "active":
        return "legitimate"
    return "unknown"


def read_evidence(path: str | Path) -> list[tuple[str, CollectionEvidence]]:
    """Evidence CSV keyed by a leading ``collection`` column."""
    out = []

    def flag(v: str) -> bool:
        return v.strip() in ("1", "true", "True")

    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append((
                row["collection"].strip(),
                CollectionEvidence(
                    account_status=row["account_status"].strip(),
                    mint_completed=flag(row["mint_completed"]),
                    mint_date=parse_rfc3339(row["mint_date"]) if row["mint_date"].strip() else None,
                    last_tweet_at=parse_rfc3339(row["last_tweet_at"]) if row["last_tweet_at"].strip() else None,
                    website_alive=flag(row["website_alive"]),
                    marketplace_alive=flag(row["marketplace_alive"]),
                    shares_phishing_link=flag(row["shares_phishing_link"]),
                    premint_full_rights=flag(row.get("premint_full_rights", "")),
                ),
            ))
    return out


__all__ = [
    "ABANDONMENT_SILENCE",
    "ACCOUNT_STATUSES",
    "DEFAULT_BOT_THRESHOLD",
    "FRAUD_LABELS",
    "RELATIONS",
    "BotStats",
    "CollectionEvidence",
    "EngagementRecord",
    "GainStats",
    "PromoError",
    "PromotionTweet",
    "TweetGrammar",
    "WilcoxonResult",
    "bot_fraction",
    "default_grammar",
    "follower_gain_stats",
    "label_collection",
    "parse_promotion_tweet",
    "read_engagement",
    "read_evidence",
    "read_tweets",
    "threshold_sweep",
    "wilcoxon_rank_sum",
]
