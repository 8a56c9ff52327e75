"""Category lexicons: parsing, tokenization, and per-text category matching.

A lexicon maps category names to pattern sets of exact words and stem
prefixes (entries written with a trailing ``*``). A text "contains" a
category when at least one of its tokens matches; the association is
binary and ignores repeated matches within the same text.
"""

from __future__ import annotations

import csv
import io
import json
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources

EPIDEMIC_GROUPS = ("fear", "moralization", "action")


class LexiconError(ValueError):
    """Invalid lexicon content."""


class LexiconFormatError(LexiconError):
    """Malformed lexicon file; message carries the offending line/row number."""


@dataclass(frozen=True)
class PatternSet:
    """Patterns for one category: exact words plus stem prefixes.

    Prefixes are stored without the ``*`` marker. Matching is a union:
    a token counts if it equals an exact word or starts with any prefix.
    """

    exact: frozenset = frozenset()
    prefixes: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "exact", frozenset(self.exact))
        object.__setattr__(self, "prefixes", frozenset(self.prefixes))
        for w in self.exact | self.prefixes:
            if not w or w != w.lower():
                raise LexiconError(f"pattern {w!r} must be non-empty and lowercase")

    def __or__(self, other: "PatternSet") -> "PatternSet":
        return PatternSet(self.exact | other.exact, self.prefixes | other.prefixes)


@dataclass
class Lexicon:
    """Named collection of categories. Immutable after construction;
    concurrent read-only matching is safe."""

    name: str
    categories: dict

    def __post_init__(self):
        for cat, ps in self.categories.items():
            if not cat or cat != cat.lower():
                raise LexiconError(f"category name {cat!r} must be non-empty and lowercase")
            if not isinstance(ps, PatternSet):
                raise LexiconError(f"category {cat!r}: expected a PatternSet")
        self._matcher = None

    def matcher(self) -> "_Matcher":
        if self._matcher is None:
            self._matcher = _Matcher(self)
        return self._matcher

    def __eq__(self, other):
        return (
            isinstance(other, Lexicon)
            and self.name == other.name
            and self.categories == other.categories
        )


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_STRIP_RE = re.compile(r"(?:https?://|www\.)\S+|@\w+")
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> list:
    """Lowercased tokens with URLs and @mentions removed.

    Tokens are maximal runs of letters/digits with internal apostrophes;
    everything else separates. ``#`` is not a token character, so hashtag
    bodies come out matchable ("#StayHome" -> "stayhome").
    """
    if not text:
        return []
    text = text.lower()
    if "http" in text or "www." in text or "@" in text:
        text = _STRIP_RE.sub(" ", text)
    return _TOKEN_RE.findall(text)


class _Matcher:
    """Token -> categories index: exact-word table plus a prefix trie.

    Per-token results are memoized, so repeated vocabulary costs one
    trie walk total. The cache grows with distinct tokens seen; for
    bounded corpora that is the corpus vocabulary.
    """

    __slots__ = ("_exact", "_trie", "_cache")

    def __init__(self, lexicon: Lexicon):
        exact = {}
        trie = {}
        n_prefixes = 0
        for cat, ps in lexicon.categories.items():
            for w in ps.exact:
                exact.setdefault(w, []).append(cat)
            for p in ps.prefixes:
                node = trie
                for ch in p:
                    node = node.setdefault(ch, {})
                node.setdefault("", []).append(cat)
                n_prefixes += 1
        self._exact = {w: tuple(sorted(cs)) for w, cs in exact.items()}
        self._trie = trie if n_prefixes else None
        self._cache = {}

    def token_categories(self, token: str) -> tuple:
        hit = self._cache.get(token)
        if hit is None:
            cats = list(self._exact.get(token, ()))
            node = self._trie
            if node is not None:
                for ch in token:
                    node = node.get(ch)
                    if node is None:
                        break
                    term = node.get("")
                    if term:
                        cats.extend(term)
            hit = tuple(sorted(set(cats)))
            self._cache[token] = hit
        return hit

    def match_tokens(self, tokens) -> set:
        out = set()
        lookup = self.token_categories
        for tok in tokens:
            cats = lookup(tok)
            if cats:
                out.update(cats)
        return out


def match_categories(text: str, lexicon: Lexicon) -> set:
    """Categories with at least one matching token in ``text``.

    Membership is binary: repeated matches do not change the result.
    """
    return lexicon.matcher().match_tokens(tokenize(text))


# ---------------------------------------------------------------------------
# Dictionary-format parsing (.dic)
# ---------------------------------------------------------------------------


def _as_lines(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_liwc_dic(source, name: str = "liwc") -> Lexicon:
    """Parse the conventional %-delimited dictionary format.

    Header between two ``%`` lines: ``<id><TAB><category>`` per line.
    Body: ``<word>[*]<TAB><id>[<TAB><id>...]``; a trailing ``*`` marks a
    stem prefix. Raises LexiconFormatError with the line number on
    malformed input, unknown or duplicate ids, or an empty body.
    """
    by_id = {}
    exact = {}
    prefixes = {}
    state = "preamble"  # -> header -> body
    body_entries = 0
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if line.strip() == "%":
            if state == "preamble":
                state = "header"
            elif state == "header":
                state = "body"
            else:
                raise LexiconFormatError(f"line {lineno}: unexpected '%' in body")
            continue
        if state == "preamble":
            raise LexiconFormatError(f"line {lineno}: expected '%' header delimiter")
        parts = line.split("\t")
        if state == "header":
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise LexiconFormatError(f"line {lineno}: malformed header line {line!r}")
            cid, cat = parts[0].strip(), parts[1].strip().lower()
            if not cid.isdigit():
                raise LexiconFormatError(f"line {lineno}: category id {cid!r} not numeric")
            if cid in by_id:
                raise LexiconFormatError(f"line {lineno}: duplicate category id {cid}")
            by_id[cid] = cat
            exact.setdefault(cat, set())
            prefixes.setdefault(cat, set())
        else:
            if len(parts) < 2:
                raise LexiconFormatError(f"line {lineno}: malformed body line {line!r}")
            word = parts[0].strip().lower()
            if not word:
                raise LexiconFormatError(f"line {lineno}: empty word")
            is_prefix = word.endswith("*")
            if is_prefix:
                word = word[:-1]
                if not word:
                    raise LexiconFormatError(f"line {lineno}: bare '*' is not a pattern")
            for cid in parts[1:]:
                cid = cid.strip()
                if cid not in by_id:
                    raise LexiconFormatError(f"line {lineno}: unknown category id {cid!r}")
                (prefixes if is_prefix else exact)[by_id[cid]].add(word)
            body_entries += 1
    if state != "body":
        raise LexiconFormatError("missing '%'-delimited header")
    if body_entries == 0:
        raise LexiconFormatError("dictionary has no body entries")
    cats = {c: PatternSet(exact[c], prefixes[c]) for c in exact}
    return Lexicon(name, cats)


def serialize_liwc_dic(lexicon: Lexicon) -> str:
    """Canonical %-delimited text for ``lexicon``; parseable back losslessly.

    Categories are numbered in name order; body lines sorted by word.
    """
    names = sorted(lexicon.categories)
    ids = {cat: i + 1 for i, cat in enumerate(names)}
    lines = ["%"]
    for cat in names:
        lines.append(f"{ids[cat]}\t{cat}")
    lines.append("%")
    entries = {}
    for cat, ps in lexicon.categories.items():
        for w in ps.exact:
            entries.setdefault(w, set()).add(ids[cat])
        for p in ps.prefixes:
            entries.setdefault(p + "*", set()).add(ids[cat])
    for word in sorted(entries):
        id_part = "\t".join(str(i) for i in sorted(entries[word]))
        lines.append(f"{word}\t{id_part}")
    return "\n".join(lines) + "\n"


def parse_term_list(source, name: str = "terms") -> Lexicon:
    """Parse CSV rows ``term,category``; a trailing ``*`` on the term marks
    a prefix. An empty input yields an empty lexicon with a warning."""
    exact = {}
    prefixes = {}
    rows = 0
    reader = csv.reader(_as_lines(source))
    for rowno, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise LexiconFormatError(f"row {rowno}: expected term,category, got {row!r}")
        term, cat = row[0].strip().lower(), row[1].strip().lower()
        if not term:
            raise LexiconFormatError(f"row {rowno}: empty term")
        if not cat:
            raise LexiconFormatError(f"row {rowno}: empty category")
        is_prefix = term.endswith("*")
        if is_prefix:
            term = term[:-1]
            if not term:
                raise LexiconFormatError(f"row {rowno}: bare '*' is not a pattern")
        exact.setdefault(cat, set())
        prefixes.setdefault(cat, set())
        (prefixes if is_prefix else exact)[cat].add(term)
        rows += 1
    if rows == 0:
        warnings.warn(f"term list {name!r} is empty", stacklevel=2)
        return Lexicon(name, {})
    return Lexicon(name, {c: PatternSet(exact[c], prefixes[c]) for c in exact})


def load_lexicon(path) -> Lexicon:
    """Load a lexicon file, dispatching on extension (.dic or CSV)."""
    p = str(path)
    stem = p.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    with open(p, encoding="utf-8") as fh:
        if p.endswith(".dic"):
            return parse_liwc_dic(fh, name=stem)
        return parse_term_list(fh, name=stem)


def merge_lexicons(lexicons) -> Lexicon:
    """Single lexicon over many sources.

    Category names colliding across sources are namespaced as
    ``<lexicon>:<category>``; unique names stay bare.
    """
    lexicons = list(lexicons)
    seen_names = set()
    for lex in lexicons:
        if lex.name in seen_names:
            raise LexiconError(f"duplicate lexicon name {lex.name!r}")
        seen_names.add(lex.name)
    counts = {}
    for lex in lexicons:
        for cat in lex.categories:
            counts[cat] = counts.get(cat, 0) + 1
    merged = {}
    for lex in lexicons:
        for cat, ps in lex.categories.items():
            key = f"{lex.name}:{cat}" if counts[cat] > 1 else cat
            merged[key] = ps
    return Lexicon("+".join(lex.name for lex in lexicons), merged)


# ---------------------------------------------------------------------------
# Category manifest: which categories feed which epidemic group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    category: str
    lexicon: str
    group: str


@dataclass
class CategoryManifest:
    """Categories under study, each attributed to a source lexicon and one
    of the three epidemic groups (fear, moralization, action)."""

    entries: list

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.group not in EPIDEMIC_GROUPS:
                raise LexiconError(f"unknown epidemic group {e.group!r}")
            key = (e.category, e.lexicon)
            if key in seen:
                raise LexiconError(f"duplicate manifest entry {key}")
            seen.add(key)

    def categories(self) -> list:
        return [e.category for e in self.entries]

    def by_group(self) -> dict:
        out = {g: [] for g in EPIDEMIC_GROUPS}
        for e in self.entries:
            out[e.group].append(e)
        return out

    def resolve_categories(self, lexicon: Lexicon) -> list:
        """(actual category key in ``lexicon``, entry) pairs for every
        manifest entry present, honoring namespaced keys."""
        out = []
        for e in self.entries:
            namespaced = f"{e.lexicon}:{e.category}"
            if namespaced in lexicon.categories:
                out.append((namespaced, e))
            elif e.category in lexicon.categories:
                out.append((e.category, e))
        return out

    def to_json(self) -> str:
        payload = [
            {"category": e.category, "lexicon": e.lexicon, "group": e.group}
            for e in self.entries
        ]
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CategoryManifest":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LexiconFormatError(f"manifest is not valid JSON: {exc}") from exc
        if not isinstance(payload, list):
            raise LexiconFormatError("manifest must be a JSON list")
        entries = []
        for item in payload:
            try:
                entries.append(
                    ManifestEntry(item["category"], item["lexicon"], item["group"])
                )
            except (TypeError, KeyError) as exc:
                raise LexiconFormatError(f"bad manifest entry {item!r}") from exc
        return cls(entries)


def load_manifest(path) -> CategoryManifest:
    with open(path, encoding="utf-8") as fh:
        return CategoryManifest.from_json(fh.read())


def default_manifest() -> CategoryManifest:
    """The bundled category manifest."""
    text = resources.files("epipulse.data").joinpath("category_manifest.json").read_text()
    return CategoryManifest.from_json(text)
