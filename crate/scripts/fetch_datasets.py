#!/usr/bin/env python3
"""Rebuild data/*.csv from UCI copies bundled inside PyPI packages.

The sandbox this project was built in has no direct internet access, only a
package-index mirror, so the benchmark files are pulled out of wheels that
vendor them:

  keel-ds            spambase.dat (KEEL export of the UCI file)
  orange3            ionosphere.tab (UCI original, all 34 attributes)
  common-datasets    SPECTF.train/test.txt, german.data-numeric.txt (UCI originals)

Usage: python3 scripts/fetch_datasets.py [--out data]
"""
import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

SPAMBASE_NAMES = (
    [f"word_freq_{w}" for w in (
        "make address all 3d our over remove internet order mail receive will "
        "people report addresses free business email you credit your font 000 "
        "money hp hpl george 650 lab labs telnet 857 data 415 85 technology "
        "1999 parts pm direct cs meeting original project re edu table "
        "conference").split()]
    + [f"char_freq_{c}" for c in ("semicolon", "paren", "bracket", "bang", "dollar", "hash")]
    + ["capital_run_length_average", "capital_run_length_longest", "capital_run_length_total"]
)


def wheel(pkg, tmp):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, pkg],
        check=True,
    )
    return zipfile.ZipFile(glob.glob(os.path.join(tmp, pkg.replace("-", "_") + "*.whl"))[0])


def keel_rows(text):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rows.append([v.strip() for v in line.split(",")])
    return rows


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"{path}: {len(rows)} rows, {len(header) - 1} features")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        keel = wheel("keel-ds", tmp)
        raw = "keel_ds/data/balanced/raw/"
        spam = keel_rows(keel.read(raw + "spambase.dat").decode())
        write(os.path.join(args.out, "spambase.csv"), SPAMBASE_NAMES + ["spam"], spam)

        orange = wheel("orange3", tmp)
        tab = orange.read("Orange/tests/datasets/ionosphere.tab").decode().splitlines()
        # .tab files carry three header lines: names, types, flags
        iono = [line.split("\t") for line in tab[3:] if line.strip()]
        write(os.path.join(args.out, "ionosphere.csv"),
              [f"a{i + 1}" for i in range(34)] + ["class"], iono)

        common = wheel("common-datasets", tmp)
        base = "common_datasets/data/classification/"
        spect = []
        for part in ("SPECTF.train.txt", "SPECTF.test.txt"):
            for line in common.read(base + "spect_f/" + part).decode().splitlines():
                if line.strip():
                    vals = [v.strip() for v in line.split(",")]
                    spect.append(vals[1:] + vals[:1])
        names = [f"F{i}{s}" for i in range(1, 23) for s in ("R", "S")]
        write(os.path.join(args.out, "spectf.csv"), names + ["diagnosis"], spect)

        german = []
        for line in common.read(base + "german/german.data-numeric.txt").decode().splitlines():
            vals = line.split()
            if vals:
                german.append(vals)
        write(os.path.join(args.out, "german_credit.csv"),
              [f"a{i + 1}" for i in range(24)] + ["credit"], german)


if __name__ == "__main__":
    main()
