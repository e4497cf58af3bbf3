#!/usr/bin/env python3
"""Writes the bundled 400-document, 4-class synthetic corpus and a 16-d toy
embedding matrix aligned with it (DVEC, one row per document id).

Each class draws most tokens from its own topic vocabulary and the rest from
a shared filler vocabulary, with a little cross-topic noise, so the classes
are separable but not trivially identical documents.
"""
import argparse
import json
import math
import random
import struct
from pathlib import Path

TOPICS = {
    "sports": "match team goal league coach player season score stadium referee striker keeper "
              "tournament championship defender midfield penalty victory fans transfer".split(),
    "finance": "market stock bank interest inflation investor bond equity dividend earnings "
               "currency trading portfolio revenue profit loan credit economy fiscal shares".split(),
    "science": "protein cell genome experiment molecule physics quantum laboratory enzyme neuron "
               "telescope galaxy particle theory hypothesis sample microscope atom reaction species".split(),
    "cooking": "recipe oven garlic butter flour simmer sauce roast onion pepper "
               "dough bake saucepan basil noodle broth spice skillet dessert vinegar".split(),
}
FILLER = ("the of and to in for on with this that was were from about after before during report "
          "said new year week today people local many several more most also").split()


def write_dvec(path, rows):
    n_rows, n_cols = len(rows), len(rows[0])
    with open(path, "wb") as f:
        f.write(b"DVEC")
        f.write(struct.pack("<IQQ", 1, n_rows, n_cols))
        f.write(bytes([1]) + bytes(7))
        for row in rows:
            f.write(struct.pack("<%df" % n_cols, *row))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--per-class", type=int, default=100)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = list(TOPICS)

    docs = []
    for i in range(args.per_class * len(labels)):
        label = labels[i % len(labels)]
        words = []
        for _ in range(rng.randint(18, 30)):
            u = rng.random()
            if u < 0.55:
                words.append(rng.choice(TOPICS[label]))
            elif u < 0.95:
                words.append(rng.choice(FILLER))
            else:
                words.append(rng.choice(TOPICS[rng.choice(labels)]))
        text = " ".join(words).capitalize() + "."
        docs.append({"text": text, "label": label})

    with open(out / "synthetic400.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")

    # Toy embeddings: one direction per class plus isotropic noise.
    dim = 16
    centers = {}
    for k, label in enumerate(labels):
        c = [0.0] * dim
        c[k] = 1.0
        c[k + 4] = 0.5
        centers[label] = c
    rows = []
    for d in docs:
        c = centers[d["label"]]
        rows.append([v + rng.gauss(0.0, 0.08) for v in c])
    write_dvec(out / "synthetic400_embed16.dvec", rows)


if __name__ == "__main__":
    main()
