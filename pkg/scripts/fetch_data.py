#!/usr/bin/env python3
"""Populate the data directory with benchmark CSVs.

Two datasets are redistributed inside PyPI wheels and can be fetched with pip
alone (no other network access needed):

  concrete    rdatasets wheel, modeldata/concrete (1030 rows)
  california  pytorch-widedeep wheel, california_housing parquet (20640 rows)

The wheels are downloaded with ``pip download --no-deps`` and read as zip
archives; nothing is installed. The other three datasets must be downloaded
from the UCI repository by hand, see ``--help-manual``.

Usage:
    python scripts/fetch_data.py [--out data] [--only concrete]
"""

import argparse
import io
import lzma
import pickle
import subprocess
import sys
import tempfile
import warnings
import zipfile
from pathlib import Path

MANUAL = """\
Manual steps for the UCI-only datasets (place results in the data directory):

  gas      https://archive.ics.uci.edu/dataset/551  -> unzip; copy gt_2011.csv .. gt_2015.csv
  power    https://archive.ics.uci.edu/dataset/294  -> open Folds5x2_pp.xlsx, export sheet 1 as ccpp.csv
           (header AT,V,AP,RH,PE)
  airfoil  https://archive.ics.uci.edu/dataset/291  -> convert airfoil_self_noise.dat (tab separated,
           no header) to airfoil_self_noise.csv with header
           frequency,angle_of_attack,chord_length,free_stream_velocity,suction_side_displacement_thickness,scaled_sound_pressure

  e.g. python -c "import pandas as pd; pd.read_csv('airfoil_self_noise.dat', sep='\\t', header=None,
       names='frequency angle_of_attack chord_length free_stream_velocity suction_side_displacement_thickness scaled_sound_pressure'.split()
       ).to_csv('data/airfoil_self_noise.csv', index=False)"
"""


def _wheel(package, version, workdir):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", str(workdir), f"{package}=={version}"],
        check=True,
    )
    name = package.replace("-", "_")
    (whl,) = Path(workdir).glob(f"{name}-{version}-*.whl")
    return zipfile.ZipFile(whl)


def fetch_concrete(out: Path, workdir: Path):
    z = _wheel("rdatasets", "0.2.10", workdir)
    with warnings.catch_warnings():
        # pickle written by an older numpy
        warnings.simplefilter("ignore", DeprecationWarning)
        df = pickle.loads(lzma.decompress(z.read("rdatasets/_data/modeldata/concrete.pkl.compress")))
    df = df.drop(columns=["rownames"])
    df.to_csv(out / "concrete.csv", index=False)
    return len(df)


def fetch_california(out: Path, workdir: Path):
    import pandas as pd

    z = _wheel("pytorch-widedeep", "1.7.0", workdir)
    raw = z.read("pytorch_widedeep/datasets/data/california_housing.parquet.brotli")
    df = pd.read_parquet(io.BytesIO(raw))
    df.to_csv(out / "california_housing.csv", index=False)
    return len(df)


FETCHERS = {"concrete": fetch_concrete, "california": fetch_california}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="data", type=Path)
    ap.add_argument("--only", choices=sorted(FETCHERS), action="append")
    ap.add_argument("--help-manual", action="store_true", help="print instructions for the UCI-only datasets")
    args = ap.parse_args(argv)
    if args.help_manual:
        print(MANUAL)
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for name in args.only or FETCHERS:
            n = FETCHERS[name](args.out, Path(tmp))
            print(f"{name}: wrote {n} rows to {args.out}")
    print(MANUAL)
    return 0


if __name__ == "__main__":
    sys.exit(main())
