"""Generate the small synthetic corpus and task files under crates/core/examples/data."""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "examples" / "data"

ENTITIES = {
    "politics": [
        (["Barack", "Obama"], "PER", "Q76"),
        (["Angela", "Merkel"], "PER", "Q567"),
        (["Washington"], "LOC", "Q61"),
        (["Berlin"], "LOC", "Q64"),
        (["Congress"], "ORG", "Q11268"),
        (["Bundestag"], "ORG", "Q154797"),
    ],
    "sports": [
        (["Lionel", "Messi"], "PER", "Q615"),
        (["Serena", "Williams"], "PER", "Q11459"),
        (["Barcelona"], "LOC", "Q1492"),
        (["Wimbledon"], "LOC", "Q41520"),
        (["FIFA"], "ORG", "Q253414"),
        (["Arsenal"], "ORG", "Q9617"),
    ],
}
DATES = [(["June", "2016"], "DATE", "2016-06"), (["March", "2015"], "DATE", "2015-03")]

WORDS = {
    "politics": {
        "NN": ["president", "chancellor", "election", "senate", "policy", "vote", "law", "minister", "campaign", "reform"],
        "VBD": ["signed", "debated", "announced", "vetoed", "proposed"],
        "JJ": ["federal", "political", "foreign", "new", "public"],
    },
    "sports": {
        "NN": ["goal", "match", "striker", "coach", "league", "tournament", "trophy", "season", "final", "team"],
        "VBD": ["scored", "won", "played", "defeated", "celebrated"],
        "JJ": ["fast", "decisive", "new", "young", "dramatic"],
    },
}


def tok(t, pos):
    return {"t": t, "pos": pos}


def sentence(rng, topic):
    """One tagged sentence with one or two entity mentions."""
    w = WORDS[topic]
    tokens, spans = [], []

    def mention(ent):
        words, etype, kid = ent
        start = len(tokens)
        for x in words:
            tokens.append(tok(x, "NNP" if etype != "DATE" else "CD"))
        spans.append((start, len(tokens), etype, kid))

    mention(rng.choice(ENTITIES[topic]))
    tokens.append(tok(rng.choice(w["VBD"]), "VBD"))
    tokens.append(tok("the", "DT"))
    tokens.append(tok(rng.choice(w["JJ"]), "JJ"))
    tokens.append(tok(rng.choice(w["NN"]), "NN"))
    if rng.random() < 0.6:
        tokens.append(tok("in", "IN"))
        mention(rng.choice(ENTITIES[topic] + DATES))
    tokens.append(tok("with", "IN"))
    tokens.append(tok("his" if rng.random() < 0.5 else "her", "PRP$"))
    tokens.append(tok(rng.choice(w["NN"]), "NN"))
    tokens.append(tok(".", "."))
    return tokens, spans


def main():
    rng = random.Random(7)
    OUT.mkdir(parents=True, exist_ok=True)
    docs = []
    for d in range(80):
        topic = "politics" if d % 2 == 0 else "sports"
        sentences, entities = [], []
        for s in range(6):
            tokens, spans = sentence(rng, topic)
            sentences.append({"tokens": tokens})
            for b, e, etype, kid in spans:
                entities.append({"s": s, "b": b, "e": e, "type": etype, "kid": kid})
        docs.append({"id": f"doc{d:03d}", "sentences": sentences, "entities": entities})

    with open(OUT / "news.jsonl", "w") as f:
        for doc in docs:
            f.write(json.dumps(doc, separators=(",", ":")) + "\n")

    with open(OUT / "news.txt", "w") as f:
        for doc in docs:
            for s in doc["sentences"]:
                f.write(" ".join(t["t"] for t in s["tokens"]) + "\n")
            f.write("\n")

    (OUT / "relatedness.tsv").write_text(
        "# word1\tword2\tscore\n"
        "president\telection\t8.1\n"
        "senate\tlaw\t7.4\n"
        "goal\tstriker\t8.3\n"
        "match\ttournament\t7.9\n"
        "coach\tteam\t7.6\n"
        "president\tgoal\t1.2\n"
        "senate\ttrophy\t0.9\n"
        "election\tseason\t2.0\n"
        "policy\tmatch\t1.1\n"
        "reform\tfinal\t1.5\n"
        "@PER:Q76\tpresident\t8.8\n"
        "@PER:Q615\tstriker\t8.5\n"
    )
    (OUT / "analogy.txt").write_text(
        ": capital-org\n"
        "#type=ORG\n"
        "@LOC:Q61 @ORG:Q11268 @LOC:Q64 @ORG:Q154797\n"
        "@LOC:Q1492 @ORG:Q253414 @LOC:Q41520 @ORG:Q9617\n"
        ": topic-words\n"
        "president election coach match\n"
        "senate law league goal\n"
    )
    (OUT / "categories.tsv").write_text(
        "".join(f"{w}\tpolitics\n" for w in WORDS["politics"]["NN"][:6])
        + "".join(f"{w}\tsports\n" for w in WORDS["sports"]["NN"][:6])
    )
    (OUT / "keys.txt").write_text(
        "\n".join(
            ["@PER:Q76", "@PER:Q567", "@LOC:Q64", "president", "election",
             "@PER:Q615", "@LOC:Q1492", "goal", "striker", "match", "goal"]
        )
        + "\n"
    )


if __name__ == "__main__":
    main()
