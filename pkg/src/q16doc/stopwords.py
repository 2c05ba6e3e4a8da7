"""Built-in English stopword list for tokenization, with a file override.

The list is deliberately small and frozen: reproducible clouds matter more
than linguistic completeness.  Words here never appear in cloud output.
"""
from __future__ import annotations

from pathlib import Path

from .errors import MissingFile

BUILTIN_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are aren as at be
    because been before being below between both but by can cannot could
    couldn did didn do does doesn doing don down during each few for from
    further had hadn has hasn have haven having he her here hers herself him
    himself his how i if in into is isn it its itself just me more most
    mustn my myself no nor not now of off on once only or other our ours
    ourselves out over own same shan she should shouldn so some such than
    that the their theirs them themselves then there these they this those
    through to too under until up very was wasn we were weren what when
    where which while who whom why will with won would wouldn you your yours
    yourself yourselves
    """.split()
)


def load_stopwords(path) -> frozenset:
    """Read an override list: plain text, one word per line, blanks ignored."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"stopword file not found: {path}")
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word:
            words.add(word)
    return frozenset(words)
