#!/usr/bin/env python3
"""Build the desk-scale smoke corpus and relatedness file under data/smoke/.

Inputs (fetched from package registries, see data/smoke/README.md):
  --sotu-dir   directory of State of the Union address texts (*.txt)
  --wordsim    WordSim353 TSV (word1, word2, score; '#' comment lines)

Outputs:
  data/smoke/sotu.txt.gz   one sentence per line, whitespace tokenized,
                           blank line between addresses
  data/smoke/wordsim353.tsv
"""

import argparse
import gzip
import pathlib
import re

SENTENCE_END = re.compile(r"(?<=[.!?])\s+(?=[\"'(\[]?[A-Z0-9])")
TOKEN = re.compile(r"[A-Za-z]+(?:'[A-Za-z]+)?|[0-9]+(?:[.,][0-9]+)*|[^\sA-Za-z0-9]")


def sentences(text):
    text = re.sub(r"\s+", " ", text).strip()
    for sent in SENTENCE_END.split(text):
        tokens = TOKEN.findall(sent)
        if tokens:
            yield " ".join(tokens)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sotu-dir", required=True)
    ap.add_argument("--wordsim", required=True)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "smoke"))
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = sorted(pathlib.Path(args.sotu_dir).glob("*.txt"))
    n_sent = 0
    # mtime=0 keeps the archive byte-reproducible
    with open(out / "sotu.txt.gz", "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
        for path in files:
            for sent in sentences(path.read_text(encoding="utf-8", errors="replace")):
                gz.write((sent + "\n").encode("utf-8"))
                n_sent += 1
            gz.write(b"\n")

    lines = []
    for line in pathlib.Path(args.wordsim).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        w1, w2, score = line.split("\t")[:3]
        lines.append(f"{w1.lower()}\t{w2.lower()}\t{score}")
    (out / "wordsim353.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(files)} addresses, {n_sent} sentences, {len(lines)} word pairs")


if __name__ == "__main__":
    main()
