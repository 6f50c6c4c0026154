"""The example corpus shipped with the package, with its golden results."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional


@dataclass
class CorpusEntry:
    name: str
    file: str
    accept: bool = True
    type: Optional[str] = None
    error: Optional[str] = None
    ecost: Optional[float] = None
    ecost_closed_form: Optional[str] = None
    continuation: Optional[str] = None
    evalue: Optional[float] = None
    input: Optional[str] = None
    err_table: dict = field(default_factory=dict)
    depth: int = 40
    budget: int = 64
    bound: Optional[str] = None
    bound_verdict: Optional[str] = None

    @property
    def path(self) -> Path:
        return corpus_dir() / self.file

    def text(self) -> str:
        return self.path.read_text()

    def continuation_text(self) -> Optional[str]:
        return (corpus_dir() / self.continuation).read_text() if self.continuation else None

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v not in (None, {})}


def corpus_dir() -> Path:
    return Path(str(resources.files("qetlab") / "corpus"))


def corpus() -> list[CorpusEntry]:
    data = json.loads((corpus_dir() / "index.json").read_text())
    return [CorpusEntry(**d) for d in data]


def entry(name: str) -> CorpusEntry:
    for e in corpus():
        if e.name == name:
            return e
    raise KeyError(name)


def resolve(path: str) -> Path:
    """``path`` itself if it exists, else the bundled file of that name."""
    p = Path(path)
    if p.exists():
        return p
    alt = corpus_dir() / p.name
    return alt if alt.exists() else p
