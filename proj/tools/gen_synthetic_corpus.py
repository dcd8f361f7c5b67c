"""Writes data/synthetic_corpus.csv: 2,000 labelled sentences for desk-scale runs.

Stereotype sentences pair a group term with a sweeping generalisation; neutral
sentences describe one concrete person or event; unrelated sentences drop the
group term entirely. The classes are linearly separable on vocabulary, with
shared filler words so the task is not a single-token lookup.
"""

import argparse
import csv
import random

GROUPS = {
    "gender": ["women", "men", "girls", "mothers", "fathers", "wives"],
    "race": ["black people", "asian people", "hispanic people", "white people", "latinos"],
    "nationality": ["the french", "germans", "nigerians", "brazilians", "the irish", "koreans"],
    "profession": ["nurses", "lawyers", "engineers", "plumbers", "bankers", "teachers"],
    "religion": ["muslims", "christians", "jews", "hindus", "buddhists", "atheists"],
    "lgbtq+": ["gay men", "lesbians", "trans people", "bisexual people", "queer people"],
}

SINGULAR = {
    "gender": ["a woman", "a man", "my mother", "her father", "the girl"],
    "race": ["a black student", "an asian driver", "a hispanic neighbour", "a white cyclist"],
    "nationality": ["a french chef", "a german tourist", "a nigerian student", "a korean pilot"],
    "profession": ["a nurse", "the lawyer", "an engineer", "the plumber", "a banker"],
    "religion": ["a muslim teacher", "the christian singer", "a jewish baker", "a hindu doctor"],
    "lgbtq+": ["a gay runner", "the lesbian author", "a trans painter", "a queer student"],
}

GENERALISATIONS = [
    "are all {trait}", "are always {trait}", "are naturally {trait}", "can never be trusted to be {trait}",
    "are known to be {trait}", "are typically {trait}", "are inherently {trait}", "are all so {trait}",
]
TRAITS = ["lazy", "greedy", "aggressive", "stupid", "weak", "dishonest", "emotional", "cold",
          "dirty", "violent", "bossy", "arrogant", "sneaky", "loud"]

EVENTS = [
    "bought {obj} on {day}", "walked to the {place} after lunch", "fixed {obj} last {day}",
    "read a book about {topic} at the {place}", "cooked dinner for {count} guests on {day}",
    "painted {obj} near the {place}", "visited the {place} with {count} friends",
    "wrote a letter about {topic} on {day}",
]
OBJECTS = ["a bicycle", "the fence", "a kettle", "an old radio", "the garden gate", "a lamp"]
PLACES = ["library", "market", "station", "harbour", "museum", "park"]
DAYS = ["monday", "tuesday", "friday", "sunday", "saturday"]
TOPICS = ["rivers", "bridges", "volcanoes", "chess", "astronomy", "trains"]
COUNTS = ["two", "three", "four", "five"]

UNRELATED = [
    "the {obj} sat quietly beside the {place}", "rain fell over the {place} on {day}",
    "a recipe for {topic} needs patience", "the {place} opens early on {day}",
    "{count} clocks ticked inside the {place}", "the {obj} was painted blue",
]


def fill(rng, template):
    return template.format(
        trait=rng.choice(TRAITS), obj=rng.choice(OBJECTS), place=rng.choice(PLACES),
        day=rng.choice(DAYS), topic=rng.choice(TOPICS), count=rng.choice(COUNTS),
    )


def sentence(rng, category, group):
    if category == "stereotype":
        text = f"{rng.choice(GROUPS[group])} {fill(rng, rng.choice(GENERALISATIONS))}"
    elif category == "neutral":
        text = f"{rng.choice(SINGULAR[group])} {fill(rng, rng.choice(EVENTS))}"
    else:
        text = fill(rng, rng.choice(UNRELATED))
    return text[0].upper() + text[1:] + "."


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic_corpus.csv")
    ap.add_argument("--size", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    groups = list(GROUPS)
    # Roughly the stereotype/neutral/unrelated mix of the full dataset.
    categories = ["stereotype"] * 9 + ["neutral"] * 8 + ["unrelated"] * 3
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stereotype_type", "text", "category", "data_source", "label"])
        for _ in range(args.size):
            group = rng.choice(groups)
            category = rng.choice(categories)
            label = "unrelated" if category == "unrelated" else f"{category}_{group}"
            w.writerow([group, sentence(rng, category, group), category, "synthetic", label])


if __name__ == "__main__":
    main()
