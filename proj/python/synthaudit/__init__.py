"""Python bindings for the synthaudit synthetic-text audit engine."""

import json
from typing import Any, Dict, Iterable, List, Mapping

from ._core import (
    SCHEMA_VERSION,
    Corpus,
    InputError,
    IoError,
    __version__,
    context_leakage,
    entity_leakage,
    fid,
    leakage_curve,
    load_corpus,
    mauve,
    parse_corpus_jsonl,
    perplexity,
    tokenize,
)
from . import _core


def _jsonl(records: Iterable[Mapping[str, Any]]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def corpus_from_records(records: Iterable[Mapping[str, Any]], name: str = "<python>") -> Corpus:
    """Builds a corpus from dicts shaped like corpus JSONL records."""
    return parse_corpus_jsonl(_jsonl(records), name)


def fairness(records: Iterable[Mapping[str, Any]], attribute: str, macro: bool = False) -> Dict[str, Any]:
    """Group fairness report for prediction records ({id, gold, pred, groups})."""
    return json.loads(_core._fairness_jsonl(_jsonl(records), attribute, macro))


def utility(records: Iterable[Mapping[str, Any]]) -> Dict[str, Any]:
    """Accuracy and F1 for prediction records."""
    return json.loads(_core._utility_jsonl(_jsonl(records)))


def run_audit(config_path: str) -> Dict[str, Any]:
    """Runs the audit described by a config file. Returns the report plus
    'markdown' and 'failed' keys; nothing is written to disk."""
    report, markdown, failed = _core._run_audit(config_path)
    return {"report": json.loads(report), "markdown": markdown, "failed": failed}


__all__: List[str] = [
    "SCHEMA_VERSION",
    "Corpus",
    "InputError",
    "IoError",
    "__version__",
    "context_leakage",
    "corpus_from_records",
    "entity_leakage",
    "fairness",
    "fid",
    "leakage_curve",
    "load_corpus",
    "mauve",
    "parse_corpus_jsonl",
    "perplexity",
    "run_audit",
    "tokenize",
    "utility",
]
