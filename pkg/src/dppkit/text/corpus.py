"""Document clusters on disk.

A cluster is a directory::

    <cluster>/docs/<k>.txt   one sentence per line, original order
    <cluster>/refs/<j>.txt   one reference summary per file
    <cluster>/meta           optional ``key: value`` lines (``id`` is used)

A corpus is a directory whose subdirectories are clusters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["Sentence", "Cluster", "ClusterFormatError", "ingest", "ingest_corpus", "tokenize", "byte_len"]

_TOKEN = re.compile(r"[^\W_]+")


class ClusterFormatError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of letters and digits."""
    return _TOKEN.findall(text.lower())


def byte_len(text: str) -> int:
    return len(text.encode("utf-8"))


@dataclass(frozen=True)
class Sentence:
    text: str
    doc: int
    pos: int

    @property
    def nbytes(self) -> int:
        return byte_len(self.text)


@dataclass
class Cluster:
    id: str
    documents: list[list[Sentence]]
    references: list[str] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.documents:
            raise ClusterFormatError(f"cluster {self.id!r} has no documents")

    @property
    def sentences(self) -> list[Sentence]:
        return [s for doc in self.documents for s in doc]

    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @classmethod
    def from_texts(cls, cid: str, documents: list[list[str]], references=()) -> "Cluster":
        docs = [[Sentence(t, d, p) for p, t in enumerate(doc)] for d, doc in enumerate(documents)]
        return cls(cid, docs, list(references))


def _natural_key(path: Path):
    stem = path.stem
    return (0, int(stem), "") if stem.isdigit() else (1, 0, stem)


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ClusterFormatError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from None


def _read_meta(path: Path) -> dict[str, str]:
    meta = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            key, sep, value = line.partition("=")
        if not sep:
            raise ClusterFormatError(f"{path}:{lineno}: expected 'key: value'")
        meta[key.strip()] = value.strip()
    return meta


def ingest(path) -> Cluster:
    """Load one cluster directory."""
    root = Path(path)
    docs_dir = root / "docs"
    if not docs_dir.is_dir():
        raise ClusterFormatError(f"{root}: missing docs/ directory")
    doc_files = sorted(docs_dir.glob("*.txt"), key=_natural_key)
    if not doc_files:
        raise ClusterFormatError(f"{root}: docs/ holds no documents")
    documents = []
    for d, f in enumerate(doc_files):
        lines = _read_text(f).split("\n")
        while lines and not lines[-1].strip():
            lines.pop()
        sents = []
        for p, line in enumerate(lines):
            line = line.rstrip("\r")
            if not line.strip():
                raise ClusterFormatError(f"{f}: sentence {p + 1} is blank")
            sents.append(Sentence(line, d, p))
        if not sents:
            raise ClusterFormatError(f"{f}: document has no sentences")
        documents.append(sents)
    refs = []
    refs_dir = root / "refs"
    if refs_dir.is_dir():
        for f in sorted(refs_dir.glob("*.txt"), key=_natural_key):
            refs.append(_read_text(f).strip())
    meta = _read_meta(root / "meta") if (root / "meta").is_file() else {}
    return Cluster(meta.get("id", root.name), documents, refs, meta)


def ingest_corpus(path) -> list[Cluster]:
    """Every cluster under ``path``, sorted by cluster id."""
    root = Path(path)
    if (root / "docs").is_dir():
        return [ingest(root)]
    dirs = [d for d in root.iterdir() if d.is_dir() and (d / "docs").is_dir()]
    if not dirs:
        raise ClusterFormatError(f"{root}: no cluster directories found")
    clusters = [ingest(d) for d in dirs]
    return sorted(clusters, key=lambda c: c.id)
