#!/usr/bin/env python3
"""Fetch MovieLens 100K ratings into data/ml-100k/u.data.

Tries the GroupLens archive first. When that host is unreachable, falls back
to the copy of the ratings bundled in the RecBole wheel on PyPI (same 100,000
records, stored as a tab-separated .inter file with a typed header).
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
RECBOLE_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data").decode()


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        lines = zipfile.ZipFile(wheel).read(RECBOLE_MEMBER).decode().splitlines()
    # first line is the typed header "user_id:token\titem_id:token\t..."
    return "".join(line + "\n" for line in lines[1:] if line.strip())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                             / "data" / "ml-100k" / "u.data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    if out.exists():
        print(f"{out} already present")
        return 0
    try:
        text = from_grouplens()
    except Exception as exc:  # network policy varies between machines
        print(f"grouplens unavailable ({exc}); using the RecBole wheel copy")
        text = from_recbole()
    records = text.count("\n")
    if records != 100000:
        print(f"unexpected record count {records}", file=sys.stderr)
        return 1
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"wrote {records} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
