"""Brute-force tf-idf cosine over randomized toy bundles.

Writes one JSON object per line: {"bundle": <dataset record>, "scores":
[[score per sentence] per document]}. Weights are
(1 + ln tf) * (ln((1 + N) / (1 + df)) + 1) with N the bundle's sentence
count and df the number of its sentences containing the term; terms are
lowercased token texts. Dense vectors over the full vocabulary.

Usage: python3 tfidf_reference.py OUT [COUNT] [SEED]
"""
import json
import math
import random
import sys

WORDS = ["Paris", "paris", "city", "the", "The", "river", "seine", "flows", "through",
         "capital", "France", "of", "is", "a", "bridge", "old", "new", "tower", "."]


def token(text):
    return {"text": text, "lemma": text.lower(), "pos": "NN", "ner": "O"}


def sentence(rng):
    words = [rng.choice(WORDS) for _ in range(rng.randint(1, 8))]
    return {"tokens": [token(w) for w in words], "constituents": []}


def make_bundle(rng, i):
    docs = []
    budget = rng.randint(1, 10)
    n_docs = rng.randint(1, min(5, budget))
    sizes = [1] * n_docs
    for _ in range(budget - n_docs):
        sizes[rng.randrange(n_docs)] += 1
    for d, size in enumerate(sizes):
        docs.append({"doc_id": f"t{i}-d{d + 1}", "rank": d + 1,
                     "sentences": [sentence(rng) for _ in range(size)]})
    return {"question_id": f"t{i}", "question": sentence(rng), "documents": docs, "answers": []}


def scores(bundle):
    sents = [[t["text"].lower() for t in s["tokens"]] for d in bundle["documents"] for s in d["sentences"]]
    q = [t["text"].lower() for t in bundle["question"]["tokens"]]
    n = len(sents)
    vocab = sorted(set(q).union(*map(set, sents)))
    df = {w: sum(1 for s in sents if w in s) for w in vocab}

    def dense(tokens):
        out = []
        for w in vocab:
            tf = tokens.count(w)
            out.append(0.0 if tf == 0 else (1 + math.log(tf)) * (math.log((1 + n) / (1 + df[w])) + 1))
        return out

    qv = dense(q)
    qn = math.sqrt(sum(x * x for x in qv))
    result = []
    it = iter(sents)
    for d in bundle["documents"]:
        row = []
        for _ in d["sentences"]:
            sv = dense(next(it))
            sn = math.sqrt(sum(x * x for x in sv))
            dot = sum(a * b for a, b in zip(qv, sv))
            row.append(0.0 if qn == 0 or sn == 0 else dot / (qn * sn))
        result.append(row)
    return result


def main():
    out = sys.argv[1]
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    rng = random.Random(int(sys.argv[3]) if len(sys.argv) > 3 else 1)
    with open(out, "w") as f:
        for i in range(count):
            b = make_bundle(rng, i)
            f.write(json.dumps({"bundle": b, "scores": scores(b)}) + "\n")


if __name__ == "__main__":
    main()
