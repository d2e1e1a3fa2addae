"""Regenerates the bundled audit fixtures. Output is deterministic."""

import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
OUT = HERE / "audit"

NAMES = ["John Smith", "Maria Garcia", "Dr Lee", "José Álvarez", "Anna Novak", "Tom Brown",
         "Li Wei", "Sara Cohen", "Omar Haddad", "Kate Jones"]
PLACES = ["Paris", "Boston", "Acme Clinic", "Lyon", "Springfield General", "Oslo"]
CARDIAC = ["chest pain", "atrial fibrillation", "palpitations", "hypertension", "angina"]
RESP = ["shortness of breath", "pneumonia", "wheezing", "chronic cough", "asthma"]
SYNTH_NAMES = ["Paul Martin", "Eva Stone", "Ian Gray", "Nina Park", "Leo Ford"]


def note(rng, label, names, places):
    name = rng.choice(names)
    place = rng.choice(places)
    finding = rng.choice(CARDIAC if label == "cardiac" else RESP)
    mixed = rng.random() < 0.35
    other = rng.choice(CARDIAC if (label == "cardiac") != mixed else RESP)
    parts = [("the patient ", None), (name, "PERSON"), (" was admitted to ", None), (place, "LOCATION"),
             (f" with {finding} and {other} .", None)]
    if rng.random() < 0.5:
        parts.append((" follow up with ", None))
        parts.append((rng.choice(names), "PERSON"))
        parts.append((" next week .", None))
    text, entities = "", []
    for chunk, cat in parts:
        if cat:
            entities.append({"surface": chunk, "category": cat, "start": len(text), "end": len(text) + len(chunk)})
        text += chunk
    return text, entities


def corpus(rng, prefix, n, names, places, with_entities=True, flip=0.0):
    docs = []
    for i in range(n):
        label = "cardiac" if i % 2 == 0 else "respiratory"
        text, ents = note(rng, label, names, places)
        if rng.random() < flip:
            label = "respiratory" if label == "cardiac" else "cardiac"
        doc = {"id": f"{prefix}{i:03d}", "text": text, "labels": [label],
               "groups": {"gender": "F" if (i // 2) % 2 == 0 else "M", "race": "A" if i % 3 else "B"}}
        if with_entities:
            doc["entities"] = ents
        docs.append(doc)
    return docs


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def embeddings(rng, docs, shift):
    lines = [f"synthaudit-emb v1 {len(docs)} 4"]
    for d in docs:
        base = 1.0 if d["labels"][0] == "cardiac" else -1.0
        vec = [base + shift + rng.gauss(0, 0.5), rng.gauss(0, 1), -base + rng.gauss(0, 0.5), rng.gauss(shift, 1)]
        lines.append(d["id"] + " " + " ".join(f"{v:.6f}" for v in vec))
    return "\n".join(lines) + "\n"


def scores(rng, docs, level):
    rows = []
    for d in docs:
        n = len(d["text"].split())
        rows.append({"key": d["id"], "logprobs": [round(-abs(rng.gauss(level, 0.4)), 6) for _ in range(n)]})
    return rows


def main():
    rng = random.Random(20240601)
    OUT.mkdir(exist_ok=True)
    train = corpus(rng, "r", 40, NAMES, PLACES)
    test = corpus(rng, "t", 24, NAMES, PLACES, flip=0.1)
    # eps=inf copies half of the training notes verbatim; eps=8 uses unseen names.
    leaky = [dict(d, id=f"s{i:03d}") for i, d in enumerate(train[:20])]
    leaky += corpus(rng, "s", 20, NAMES, PLACES)[0:20]
    for i, d in enumerate(leaky):
        d["id"] = f"s{i:03d}"
        d.pop("entities", None)
    private = corpus(rng, "p", 40, SYNTH_NAMES, ["Oslo", "Lyon"], with_entities=False, flip=0.3)

    write_jsonl(OUT / "real_train.jsonl", train)
    write_jsonl(OUT / "real_test.jsonl", test)
    write_jsonl(OUT / "synth_inf.jsonl", leaky)
    write_jsonl(OUT / "synth_eps8.jsonl", private)
    (OUT / "real.emb").write_text(embeddings(rng, train, 0.0))
    (OUT / "synth_inf.emb").write_text(embeddings(rng, leaky, 0.1))
    (OUT / "synth_eps8.emb").write_text(embeddings(rng, private, 0.8))
    write_jsonl(OUT / "real_scores.jsonl", scores(rng, train, 1.0))
    write_jsonl(OUT / "synth_inf_scores.jsonl", scores(rng, leaky, 1.1))
    write_jsonl(OUT / "synth_eps8_scores.jsonl", scores(rng, private, 1.6))

    canaries = [
        {"canary": "the secret code of Kate Jones is 4417", "insertions": 10,
         "candidates": [f"the secret code of Kate Jones is {n}" for n in (4417, 1234, 9876, 5555)]},
        {"canary": "Omar Haddad lives at 12 Elm Street", "insertions": 1,
         "candidates": [f"Omar Haddad lives at {n} Elm Street" for n in (12, 40, 77)]},
    ]
    write_jsonl(OUT / "canaries.jsonl", canaries)
    for name, canary_boost in (("inf", 2.5), ("eps8", 0.0)):
        rows = []
        for rec in canaries:
            for cand in rec["candidates"]:
                level = 2.0 - (canary_boost if cand == rec["canary"] else 0.0) + rng.random() * 0.2
                rows.append({"key": cand, "logprobs": [-max(0.05, level)] * 6})
        write_jsonl(OUT / f"canary_scores_{name}.jsonl", rows)

    config = {
        "seed": 7,
        "modules": ["descriptive", "quality", "privacy", "fairness", "utility"],
        "tokenizer": {"lowercase": True, "punctuation": "split"},
        "real": {"train": "real_train.jsonl", "test": "real_test.jsonl", "embeddings": "real.emb",
                 "scores": "real_scores.jsonl"},
        "synthetic": [
            {"name": "eps=inf", "path": "synth_inf.jsonl", "embeddings": "synth_inf.emb",
             "scores": "synth_inf_scores.jsonl", "canary_scores": "canary_scores_inf.jsonl",
             "label_provenance": "copied from generation prompt"},
            {"name": "eps=8", "path": "synth_eps8.jsonl", "embeddings": "synth_eps8.emb",
             "scores": "synth_eps8_scores.jsonl", "canary_scores": "canary_scores_eps8.jsonl",
             "label_provenance": "copied from generation prompt"},
        ],
        "descriptive": {"ngram_orders": [1, 2], "top_k": 5, "entity_top_k": 5, "lda_topics": 2,
                        "lda_iterations": 100, "lda_top_words": 5},
        "quality": {"clusters": 4, "scaling": 5, "grid_size": 25, "embedder": "fixture-4d"},
        "privacy": {"k_list": [0, 1, 2, 4, 8], "per_side": True, "canaries": "canaries.jsonl"},
        "fairness": {"attributes": ["gender", "race"], "aggregation": "micro", "skip_degenerate": True},
        "utility": {"multilabel": False, "epochs": 200},
    }
    (OUT / "audit.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
