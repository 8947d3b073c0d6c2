"""Naive evidence matcher over randomized (question, documents) pairs.

Evidence items are the question's base constituents as lowercased lemma
sequences, minus punctuation-only spans and lone wh-words, deduplicated.
A sentence scores one point per item found as a contiguous lemma run in
it and one more per item found in the previous sentence of the same
document. Each case holds two documents so the first sentence of the
second document checks that nothing leaks across the boundary.

Usage: python3 evdmatch_reference.py OUT [COUNT] [SEED]
"""
import json
import random
import sys

WH = {"who", "what", "when", "where", "why", "which", "how", "whom", "whose"}
LEMMAS = ["who", "what", "hamlet", "play", "the", "write", "be", "Denmark", "prince", "a", "?", ",", "old"]


def token(lemma):
    text = lemma.upper() if lemma in ("?", ",") else lemma.capitalize()
    return {"text": text, "lemma": lemma, "pos": "NN", "ner": "O"}


def random_spans(rng, n):
    spans = []
    for _ in range(rng.randint(0, 5)):
        s = rng.randrange(n)
        e = rng.randint(s + 1, min(n, s + 3))
        spans.append({"start": s, "end": e, "label": "NP", "is_base": rng.random() < 0.8})
    return spans


def sentence(rng, n_min, n_max):
    lemmas = [rng.choice(LEMMAS) for _ in range(rng.randint(n_min, n_max))]
    return {"tokens": [token(l) for l in lemmas], "constituents": random_spans(rng, len(lemmas))}


def evidence(question):
    seen, out = set(), []
    toks = question["tokens"]
    for c in question["constituents"]:
        if not c["is_base"]:
            continue
        span = toks[c["start"]:c["end"]]
        if all(not any(ch.isalnum() for ch in t["text"]) for t in span):
            continue
        lem = tuple(t["lemma"].lower() for t in span)
        if len(lem) == 1 and lem[0] in WH:
            continue
        if lem not in seen:
            seen.add(lem)
            out.append(lem)
    return out


def found(item, sent):
    lem = [t["lemma"].lower() for t in sent["tokens"]]
    n = len(item)
    return any(tuple(lem[i:i + n]) == item for i in range(len(lem) - n + 1))


def main():
    out = sys.argv[1]
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 200
    rng = random.Random(int(sys.argv[3]) if len(sys.argv) > 3 else 2)
    with open(out, "w") as f:
        for i in range(count):
            q = sentence(rng, 2, 7)
            docs = [{"doc_id": f"e{i}-d{d + 1}", "rank": d + 1,
                     "sentences": [sentence(rng, 1, 8) for _ in range(rng.randint(1, 6))]}
                    for d in range(2)]
            ev = evidence(q)
            scores = []
            for d in docs:
                row = []
                for j, s in enumerate(d["sentences"]):
                    v = sum(found(u, s) for u in ev)
                    if j > 0:
                        v += sum(found(u, d["sentences"][j - 1]) for u in ev)
                    row.append(v)
                scores.append(row)
            b = {"question_id": f"e{i}", "question": q, "documents": docs, "answers": []}
            f.write(json.dumps({"bundle": b, "scores": scores}) + "\n")


if __name__ == "__main__":
    main()
