"""Post ingestion, topic/location filtering, and daily user-level aggregation.

All counts are distinct-user counts, never post counts: a user posting the
same category fifty times in a day still counts once. That keeps daily
fractions robust to hyperactive accounts.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .lexicon import Lexicon, tokenize
from .series import DAY, DailySeries, parse_date

_EPOCH = dt.date(1970, 1, 1)


class CorpusError(ValueError):
    """Invalid corpus input or configuration."""


class PostSchemaError(CorpusError):
    """A post line violates the JSONL schema (strict mode only)."""


class Post(NamedTuple):
    id: str
    timestamp: int  # UTC epoch seconds
    user_id: str
    text: str
    location: str = None

    @property
    def day(self) -> dt.date:
        return _EPOCH + DAY * (self.timestamp // 86400)


@dataclass
class IngestStats:
    lines: int = 0
    posts: int = 0
    skipped: int = 0
    reasons: list = field(default_factory=list)  # first few (lineno, why)

    def note(self, lineno, why):
        self.skipped += 1
        if len(self.reasons) < 20:
            self.reasons.append((lineno, why))


_REQUIRED = ("id", "timestamp", "user_id", "text")


def read_posts(source, strict: bool = False, stats: IngestStats = None):
    """Yield Posts from JSONL lines.

    Each line is one JSON object with keys id, timestamp, user_id, text and
    optional location. Invalid lines are tallied in ``stats`` and skipped;
    with ``strict`` the first bad line raises PostSchemaError.
    """
    if stats is None:
        stats = IngestStats()
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        stats.lines += 1
        why = None
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            why = f"bad JSON: {exc.msg}"
            obj = None
        if obj is not None:
            missing = [k for k in _REQUIRED if k not in obj]
            if missing:
                why = f"missing key {missing[0]!r}"
            else:
                try:
                    ts = int(float(obj["timestamp"]))
                except (TypeError, ValueError):
                    why = f"non-numeric timestamp {obj['timestamp']!r}"
        if why is not None:
            if strict:
                raise PostSchemaError(f"line {lineno}: {why}")
            stats.note(lineno, why)
            continue
        text = obj["text"]
        if not isinstance(text, str):
            text = str(text)
        loc = obj.get("location")
        if loc is not None and not isinstance(loc, str):
            loc = str(loc)
        stats.posts += 1
        yield Post(str(obj["id"]), ts, str(obj["user_id"]), text, loc)


def read_posts_file(path, strict: bool = False, stats: IngestStats = None):
    with open(path, encoding="utf-8") as fh:
        yield from read_posts(fh, strict=strict, stats=stats)


def write_posts(posts, path) -> int:
    """Write posts as JSONL; returns the count written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for p in posts:
            obj = {"id": p.id, "timestamp": p.timestamp, "user_id": p.user_id, "text": p.text}
            if p.location is not None:
                obj["location"] = p.location
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            n += 1
    return n


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------


def filter_keywords(posts, keywords):
    """Keep posts whose tokenized text contains any keyword.

    Hashtag bodies count (tokenizer strips ``#``). An empty keyword list is
    an error: it would silently pass everything.
    """
    kws = frozenset(k.lower() for k in keywords if k.strip())
    if not kws:
        raise CorpusError("empty keyword list would pass every post")

    def gen():
        for p in posts:
            if not kws.isdisjoint(tokenize(p.text)):
                yield p

    return gen()


@dataclass
class Gazetteer:
    """Location patterns (country/state/city names and combinations).

    A free-text location matches when its whole token sequence, or the
    token sequence of any comma-separated component, equals a pattern's
    token sequence. Comparison is case-insensitive.
    """

    patterns: list

    def __post_init__(self):
        if not self.patterns or any(not p.strip() for p in self.patterns):
            raise CorpusError("gazetteer patterns must be non-empty")
        self._keys = frozenset(tuple(tokenize(p)) for p in self.patterns)

    @classmethod
    def read(cls, path) -> "Gazetteer":
        with open(path, encoding="utf-8") as fh:
            pats = [ln.strip() for ln in fh if ln.strip()]
        return cls(pats)

    def matches(self, location: str) -> bool:
        if not location:
            return False
        if tuple(tokenize(location)) in self._keys:
            return True
        if "," in location:
            for part in location.split(","):
                if tuple(tokenize(part)) in self._keys:
                    return True
        return False


def filter_location(posts, gazetteer: Gazetteer):
    """Keep posts whose location matches the gazetteer; drop posts without
    a location."""
    for p in posts:
        if p.location and gazetteer.matches(p.location):
            yield p


# ---------------------------------------------------------------------------
# Daily aggregation
# ---------------------------------------------------------------------------


@dataclass
class DailyAggregate:
    """Distinct-user counts for one calendar day: total users posting, and
    users with at least one post matching each category."""

    date: dt.date
    users_total: int
    users_by_category: dict

    def __post_init__(self):
        for cat, n in self.users_by_category.items():
            if not 0 <= n <= self.users_total:
                raise CorpusError(
                    f"{self.date}: category {cat!r} has {n} users of {self.users_total}"
                )


def aggregate_daily(posts, lexicon: Lexicon, window, min_users: int = 0):
    """Per-day distinct-user totals and per-category distinct-user counts.

    ``window`` is an inclusive (first_day, last_day) date pair; every day in
    it appears in the output, zero-count days included. Duplicate post ids
    keep the first occurrence; posts outside the window are ignored.
    Day boundaries are UTC calendar days.
    """
    start, end = window
    n_days = (end - start).days + 1
    if n_days < 1:
        raise CorpusError(f"empty study window {start}..{end}")
    start_day = (start - _EPOCH).days
    users = [set() for _ in range(n_days)]
    cat_users = [{} for _ in range(n_days)]
    seen = set()
    matcher = lexicon.matcher()
    match_tokens = matcher.match_tokens
    for p in posts:
        d = p.timestamp // 86400 - start_day
        if not 0 <= d < n_days:
            continue
        pid = p.id
        if pid in seen:
            continue
        seen.add(pid)
        uid = p.user_id
        users[d].add(uid)
        cats = match_tokens(tokenize(p.text))
        if cats:
            cu = cat_users[d]
            for c in cats:
                s = cu.get(c)
                if s is None:
                    cu[c] = {uid}
                else:
                    s.add(uid)
    out = []
    for i in range(n_days):
        counts = {c: len(s) for c, s in sorted(cat_users[i].items())}
        out.append(DailyAggregate(start + DAY * i, len(users[i]), counts))
    _ = min_users  # validity threshold applies at fraction time; kept for config symmetry
    return out


def merge_aggregates(parts):
    """Merge shard-level aggregates computed on user-disjoint post shards.

    Counts add because no user appears in two shards; all parts must cover
    the same window.
    """
    parts = [list(p) for p in parts]
    if not parts:
        raise CorpusError("nothing to merge")
    base = parts[0]
    for other in parts[1:]:
        if len(other) != len(base) or (base and other[0].date != base[0].date):
            raise CorpusError("aggregate shards cover different windows")
    out = []
    for i, agg in enumerate(base):
        total = agg.users_total
        counts = dict(agg.users_by_category)
        for other in parts[1:]:
            total += other[i].users_total
            for c, n in other[i].users_by_category.items():
                counts[c] = counts.get(c, 0) + n
        out.append(DailyAggregate(agg.date, total, dict(sorted(counts.items()))))
    return out


def fraction_series(aggregates, category: str, min_users: int = 0) -> DailySeries:
    """Fraction of that day's users mentioning ``category``.

    Days with no users (or fewer than ``min_users``) are missing, not zero.
    Raises if every day is empty.
    """
    aggregates = list(aggregates)
    if not aggregates:
        raise CorpusError("no aggregates")
    floor = max(1, min_users)
    values = []
    for agg in aggregates:
        if agg.users_total < floor:
            values.append(None)
        else:
            values.append(agg.users_by_category.get(category, 0) / agg.users_total)
    if all(v is None for v in values):
        raise CorpusError(f"no data: every day is below {floor} users")
    return DailySeries(aggregates[0].date, values)


def fraction_table(aggregates, categories, min_users: int = 0) -> dict:
    """fraction_series for many categories at once."""
    return {c: fraction_series(aggregates, c, min_users) for c in categories}


def observed_categories(aggregates) -> list:
    cats = set()
    for agg in aggregates:
        cats.update(agg.users_by_category)
    return sorted(cats)


# ---------------------------------------------------------------------------
# Aggregate persistence: CSV (date,users_total,category,users) and JSON
# ---------------------------------------------------------------------------


def write_aggregates_csv(aggregates, path) -> None:
    import csv as _csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "users_total", "category", "users"])
        for agg in aggregates:
            day = agg.date.isoformat()
            w.writerow([day, agg.users_total, "", ""])
            for cat in sorted(agg.users_by_category):
                w.writerow([day, agg.users_total, cat, agg.users_by_category[cat]])


def read_aggregates_csv(path):
    import csv as _csv

    by_day = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = _csv.reader(fh)
        header = next(r, None)
        if header != ["date", "users_total", "category", "users"]:
            raise CorpusError(f"{path}: expected header date,users_total,category,users")
        for row in r:
            if len(row) != 4:
                raise CorpusError(f"{path}: malformed row {row!r}")
            day = parse_date(row[0])
            total = int(row[1])
            rec = by_day.setdefault(day, (total, {}))
            if rec[0] != total:
                raise CorpusError(f"{path}: inconsistent users_total on {day}")
            if row[2]:
                rec[1][row[2]] = int(row[3])
    if not by_day:
        raise CorpusError(f"{path}: no rows")
    days = sorted(by_day)
    for i, day in enumerate(days):
        if day != days[0] + DAY * i:
            raise CorpusError(f"{path}: days not contiguous at {day}")
    return [DailyAggregate(d, by_day[d][0], by_day[d][1]) for d in days]


def write_aggregates_json(aggregates, path) -> None:
    payload = [
        {
            "date": a.date.isoformat(),
            "users_total": a.users_total,
            "users_by_category": a.users_by_category,
        }
        for a in aggregates
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_aggregates_json(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        DailyAggregate(parse_date(a["date"]), a["users_total"], a["users_by_category"])
        for a in payload
    ]
