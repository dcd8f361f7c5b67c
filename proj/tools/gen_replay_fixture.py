"""Writes a replay fixture for `stereoscope audit`: canned LLM completions
keyed by (iteration, FNV-1a-64 of the batch prompt).

With --messy, some iterations gain unparseable lines, duplicate indices and
one simulated provider failure.
"""

import argparse
import csv
import json
import random

INSTRUCTION = "Please augment each of the following phrases into short sentences of up to 10 words"
ENDINGS = [
    "kind to everyone they met", "always lazy and useless", "waiting for the bus",
    "naturally aggressive", "reading in the garden", "known to be greedy",
    "happy with the new job", "all the same", "fond of long walks",
]


def fnv1a_hex(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--prompts", default="data/llm_prompts.csv")
    ap.add_argument("--out", required=True)
    ap.add_argument("--iterations", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--messy", action="store_true")
    args = ap.parse_args()

    with open(args.prompts, newline="", encoding="utf-8") as fh:
        stems = [row["prompt"].strip() for row in csv.DictReader(fh)]
    batch = INSTRUCTION + "".join(f"\n{i}. {s}" for i, s in enumerate(stems, 1))
    key = fnv1a_hex(batch.encode("utf-8"))

    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="utf-8") as out:
        for it in range(1, args.iterations + 1):
            entry = {"iteration": it, "request_hash": key}
            if args.messy and it == 2:
                entry["error"] = "HTTP 503"
                out.write(json.dumps(entry) + "\n")
                continue
            lines = []
            if args.messy:
                lines.append("Sure! Here are the sentences:")
            for i, stem in enumerate(stems, 1):
                lines.append(f"{i}. {stem} {rng.choice(ENDINGS)}.")
                if args.messy and i == 3:
                    lines.append(f"3) {stem} repeated.")
            if args.messy:
                lines.append("I hope these help.")
            entry["response"] = "\n".join(lines)
            out.write(json.dumps(entry) + "\n")


if __name__ == "__main__":
    main()
