#!/usr/bin/env python3
# Copyright 2026 The APA Toolkit Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Generates the bundled toy corpus, its order-4 n-gram model and a config.

Every greedy chain the pipeline walks (answers, disambiguations,
clarifications, ambiguations) is wired into the table, and the script fails
if two chains need different continuations of the same context.

    python3 tools/gen_toy_fixture.py data/toy
"""

import argparse
import json
import math
import pathlib
import sys

ORDER = 4
BEGIN, END, UNK = "<s>", "</s>", "<unk>"

# Templates (must match the built-ins); only the last tokens matter.
DIRECT = "Answer the following question.\nQuestion: {question}\nAnswer:"
DISAMBIG_TAIL = "Input Question: {question}\nDisambiguation:"
CLARIFY_TAIL = "Disambiguation: {disambiguation}\nClarification Request:"
AMBIGUATION_TAIL = "Question: {question}\nAmbiguation:"
VALIDATION_TAIL = "Question: {question}\n\nYes or No:"
SELF_ASK_TAIL = "Ambiguous or Unambiguous:"

# Entropy shapes: (probability of the wired continuation, filler count).
FLAT = (0.25, 15)
MID = (0.5, 5)
PEAKED = (0.99, 1)

FILLERS = ["the", "a", "of", "in", "is", "it", "was", "and", "to", "for", "on", "at",
           "by", "with", "from", "one", "two", "year", "city", "name"]

# id, question, answers, gold, direct answer, disambiguation, x level,
# disambiguation level, generated clarification, ambiguation.
SAMPLES = [
    ("q01", "what is the capital of france?", ["paris"], False, "paris",
     None, MID, None, None, "which city is the capital?"),
    ("q02", "how many legs does a spider have?", ["eight", "8"], False, "eight legs",
     None, MID, None, None, "count the legs."),
    ("q03", "who wrote the novel moby dick?", ["herman melville"], False, "herman melville",
     None, MID, None, None, "who wrote it?"),
    ("q04", "which team won the final?", ["arsenal", "chelsea"], True,
     "the question is not clear.", None, MID, None, None, None),
    ("q05", "when did the strike begin?", ["in may 1926", "in march 1912"], True, "1984",
     "when did the 1926 general strike begin in britain?", FLAT, PEAKED,
     "please clarify which strike you mean.", None),
    ("q06", "who won the chess olympiad?", ["the soviet union", "china"], True, "hungary",
     "who won the 2016 chess olympiad held in baku?", FLAT, MID,
     "your question is ambiguous. which year do you mean?", None),
    ("q07", "where is the old bridge?", ["mostar", "prague"], True, "london",
     "where is the old bridge of mostar?", FLAT, MID,
     "it is unclear which bridge you mean.", None),
    ("q08", "who painted the water lilies?", ["claude monet"], True, "claude monet",
     None, MID, None, None, None),
    ("q09", "how tall is the tower?", ["330 metres"], False, "about 300 feet",
     "how tall is the tower in pisa?", FLAT, MID,
     "do you mean the tower in pisa?", None),
    ("q10", "what temperature does water boil at?", ["100 degrees celsius"], False,
     "it is not clear which water you mean.",
     "what temperature does water boil at on the summit of everest?", PEAKED, FLAT,
     None, None),
    ("q11", "who discovered the comet?", ["edmond halley"], True, "edmond halley",
     None, MID, None, None, None),
    ("q12", "which planet is the largest?", ["jupiter"], False,
     "sorry, could you clarify the question?", None, MID, None, None, None),
]

SELF_ASK_ANSWER = "unambiguous"
VALIDATION_ANSWER = "Yes"


def tokens(text):
    return text.split()


class Model:
    def __init__(self):
        self.vocab = [END, BEGIN, UNK]
        self.next = {}     # context -> wired continuation
        self.level = {}    # context -> shape
        self.origin = {}

    def add_vocab(self, text):
        for t in tokens(text):
            if t not in self.vocab:
                self.vocab.append(t)

    def ids(self, toks):
        return [t if t in self.vocab else UNK for t in toks]

    def context(self, history):
        padded = [BEGIN] * (ORDER - 1) + history
        return tuple(padded[-(ORDER - 1):])

    def wire(self, prompt_tokens, output, shape, origin):
        history = self.ids(prompt_tokens)
        for tok in tokens(output) + [END]:
            ctx = self.context(history)
            prev = self.next.get(ctx) if ctx in self.origin else None
            if prev is not None and prev != tok:
                sys.exit(f"conflict at {ctx}: {self.origin[ctx]} wants {prev!r}, "
                         f"{origin} wants {tok!r}")
            self.next[ctx] = tok
            self.origin[ctx] = origin
            self.level.setdefault(ctx, shape)
            history.append(tok)

    def shape_scoring(self, text, shape):
        history = []
        for tok in self.ids(tokens(text)):
            ctx = self.context(history)
            self.level.setdefault(ctx, shape)
            self.next.setdefault(ctx, tok)
            history.append(tok)

    def distribution(self, ctx):
        target = self.next[ctx]
        p, n = self.level[ctx]
        fillers = [f for f in FILLERS if f != target][:n]
        rest = (1.0 - p) / n
        probs = {target: p}
        for f in fillers:
            probs[f] = rest
        # Absorb rounding so the row sums to 1 within 1e-12.
        probs[target] = 1.0 - rest * n
        return probs

    def entropy(self, text):
        history, hs = [], []
        for tok in self.ids(tokens(text)):
            ctx = self.context(history)
            if ctx in self.next:
                hs.append(-sum(q * math.log(q) for q in self.distribution(ctx).values()))
            else:
                hs.append(math.log(len(self.vocab)))
            history.append(tok)
        return sum(hs) / len(hs)


def build():
    m = Model()
    for f in FILLERS:
        m.add_vocab(f)
    m.add_vocab("Answer: Disambiguation: Clarification Request: Ambiguation: Yes or No:"
                " Ambiguous Unambiguous: ambiguous unambiguous")
    for s in SAMPLES:
        for text in (s[1], s[4], s[5] or "", s[8] or "", s[9] or ""):
            m.add_vocab(text)

    # Scoring shapes first: the question decides the entropy of its own
    # contexts; disambiguation-only contexts take the disambiguation shape.
    m.level[(BEGIN,) * (ORDER - 1)] = MID
    m.next[(BEGIN,) * (ORDER - 1)] = "what"
    for s in SAMPLES:
        m.shape_scoring(s[1], s[6])
    for s in SAMPLES:
        # Ambiguous questions get a hesitant first answer token so sampled
        # answers disagree with the greedy one.
        prompt = tokens(DIRECT.format(question=s[1]))
        if s[3]:
            m.level[m.context(m.ids(prompt))] = MID
        m.wire(prompt, s[4], PEAKED, s[0] + "/direct")
        disambig = s[5] or s[1]
        if s[5]:
            m.shape_scoring(s[5], s[7])
        m.wire(tokens(DISAMBIG_TAIL.format(question=s[1])), disambig, PEAKED,
               s[0] + "/disambig")
        if s[8]:
            m.wire(tokens(CLARIFY_TAIL.format(disambiguation=disambig)), s[8], PEAKED,
                   s[0] + "/clarify")
        if s[9]:
            m.wire(tokens(AMBIGUATION_TAIL.format(question=s[1])), s[9], PEAKED,
                   s[0] + "/ambiguation")
    m.wire(tokens(VALIDATION_TAIL.format(question="x")), VALIDATION_ANSWER, PEAKED,
           "validation")
    m.wire(tokens(SELF_ASK_TAIL), SELF_ASK_ANSWER, PEAKED, "self_ask")
    return m


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=pathlib.Path)
    args = ap.parse_args()
    m = build()

    contexts = []
    for ctx in sorted(m.next):
        contexts.append({"context": list(ctx), "probs": m.distribution(ctx)})
    model = {"order": ORDER, "vocabulary": m.vocab, "begin_marker": BEGIN,
             "end_marker": END, "unk_token": UNK, "contexts": contexts}
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "toy_model.json").write_text(json.dumps(model, indent=1) + "\n")

    with open(args.out_dir / "toy_corpus.jsonl", "w") as f:
        for s in SAMPLES:
            f.write(json.dumps({"id": s[0], "question": s[1], "answers": s[2],
                                "ambiguous": s[3], "source": "toy"}) + "\n")

    config = {"backend": {"kind": "toy", "fixture": "toy_model.json", "top_k": 16,
                          "parallelism": 2},
              "epsilon": 0.1, "truncation_mode": "tail_lump", "seed": 13,
              "dataset": "toy_corpus.jsonl", "out": "out", "strategy": "apa_infogain",
              "clarify_kind": "fixed"}
    (args.out_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    for s in SAMPLES:
        disambig = s[5] or s[1]
        gain = m.entropy(s[1]) - m.entropy(disambig)
        print(f"{s[0]}  gain={gain:+.4f}")
    print(f"vocabulary={len(m.vocab)} contexts={len(contexts)}")


if __name__ == "__main__":
    main()
