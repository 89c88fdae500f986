#!/usr/bin/env python3
"""Generate the synthetic Kurmanji sample corpus (data/sample-corpus.txt).

Sentences come from a small weighted template grammar so that n-gram
statistics have realistic skew. Deterministic for a given seed.

    python3 gen_sample_corpus.py [--seed 7] [--tokens 50000] > sample-corpus.txt
"""

import argparse
import random

SUBJECTS = ["ez", "tu", "ew", "em", "hûn", "ewan", "bavê min", "diya min", "mamoste", "zarok",
            "hevalê min", "xwişka min", "birayê te", "cotkar", "bazirgan", "xwendekar"]
VERBS_GO = ["diçim", "diçî", "diçe", "diçin", "çû", "çûn", "dê biçe", "naçe"]
PLACES = ["bazar", "malê", "dibistanê", "gund", "bajêr", "çiyê", "zeviyê", "mizgeftê", "nexweşxaneyê",
          "pirtûkxaneyê", "Amedê", "Hewlêrê", "Wanê", "Duhokê", "seyran"]
OBJECTS = ["nan", "av", "sêv", "pirtûk", "name", "çay", "qehwe", "goşt", "penîr", "hingiv",
           "cil", "pênûs", "kaxez", "gul", "dar", "kevir"]
VERBS_TR = ["dixwim", "dixwe", "dixwin", "dikirin", "dikire", "dinivîse", "dixwîne", "tîne", "dibe",
            "difiroşe", "dibîne", "didin", "hildigire", "çêdike"]
ADJ = ["xweş", "mezin", "biçûk", "germ", "sar", "nû", "kevn", "spehî", "dirêj", "kurt", "zêde", "baş"]
TIME = ["îro", "sibê", "duh", "niha", "êvarê", "sibehê", "her roj", "carinan", "pişt re", "berî nîvro"]
NOUNS = ["hewa", "roj", "şev", "av", "dinya", "welat", "jiyan", "ziman", "dil", "rê", "deng", "baran"]
PHRASES = [
    "spas dikim", "tu bi xêr hatî", "roj baş", "şev baş", "çawa yî", "ez baş im",
    "ser çavan", "xwedê te biparêze", "bi xatirê te", "heta sibê",
]
CONJ = ["û", "lê", "ji ber ku", "paşê", "belê"]


def pick(rng, items, skew=1.3):
    # Zipf-like preference for earlier items.
    weights = [1.0 / (i + 1) ** skew for i in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def clause(rng):
    kind = rng.choices(["go", "do", "is", "time", "phrase"], weights=[5, 6, 3, 2, 1], k=1)[0]
    if kind == "go":
        return f"{pick(rng, SUBJECTS)} {pick(rng, TIME)} bo {pick(rng, PLACES)} {pick(rng, VERBS_GO)}"
    if kind == "do":
        return f"{pick(rng, SUBJECTS)} {pick(rng, OBJECTS)} {pick(rng, VERBS_TR)}"
    if kind == "is":
        return f"{pick(rng, NOUNS)} {pick(rng, ADJ)} e"
    if kind == "time":
        return f"{pick(rng, TIME)} {pick(rng, NOUNS)} {pick(rng, ADJ)} bû"
    return pick(rng, PHRASES)


def sentence(rng):
    parts = [clause(rng)]
    while rng.random() < 0.3:
        parts.append(pick(rng, CONJ, skew=0.8))
        parts.append(clause(rng))
    text = " ".join(parts)
    if rng.random() < 0.15:
        text = text.replace(" ", ", ", 1)
    end = rng.choices([".", "!", "?"], weights=[8, 1, 1], k=1)[0]
    return text[0].upper() + text[1:] + end


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--tokens", type=int, default=50000)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    total = 0
    lines = []
    while total < args.tokens:
        s = sentence(rng)
        total += len(s.split())
        lines.append(s)
    print("\n".join(lines))


if __name__ == "__main__":
    main()
