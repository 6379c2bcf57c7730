#!/usr/bin/env python3
"""Generate the bundled synthetic belief corpus (label<TAB>utterance per line).

Each class draws from its own cue vocabulary; a small shared vocabulary of
course words is mixed in so that utterances look like advising requests.
"""

import argparse
import random

SHARED = ["course", "class", "semester", "schedule", "stats250", "eecs281", "math425",
          "econ101", "credits", "professor", "lecture", "next", "term", "major"]

CUES = {
    "curious": {
        "openers": ["i wonder", "i am curious", "tell me", "i would love to know",
                    "i want to explore", "i am excited to learn"],
        "words": ["interesting", "explore", "learn", "discover", "fascinating", "research",
                  "excited", "wonder", "curious", "topics", "advanced", "electives",
                  "interest", "interested", "prefer", "analysis"],
    },
    "confused": {
        "openers": ["i am not sure", "i do not understand", "i am lost", "i am confused",
                    "i cannot figure out", "i have no idea"],
        "words": ["confused", "lost", "unsure", "unclear", "overwhelmed", "stuck", "worried",
                  "difficult", "struggling", "mistake", "help", "why"],
    },
    "neutral": {
        "openers": ["okay", "noted", "i registered", "fine", "thanks", "i have"],
        "words": ["okay", "registered", "thanks", "noted", "done", "fine", "scheduled",
                  "submitted", "confirmed", "enrolled", "listed", "usual"],
    },
}


def utterance(rng, label):
    cue = CUES[label]
    parts = [rng.choice(cue["openers"])]
    parts += rng.sample(cue["words"], rng.randint(2, 4))
    parts += rng.sample(SHARED, rng.randint(1, 3))
    parts += rng.sample(cue["words"], 1)
    return " ".join(parts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--per-class", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    lines = ["# synthetic belief corpus: label<TAB>utterance"]
    rows = [(label, utterance(rng, label)) for label in CUES for _ in range(args.per_class)]
    rng.shuffle(rows)
    lines += [f"{label}\t{text}" for label, text in rows]
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        print(text, end="")
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
