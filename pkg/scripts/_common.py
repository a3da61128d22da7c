"""Shared helpers for the study scripts."""

import argparse
import logging
from pathlib import Path

from capillary_mm.fieldio import config_hash, write_csv


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def setup(args) -> Path:
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def save(rows, out: Path, name: str, args) -> Path:
    opts = {k: v for k, v in vars(args).items() if k not in ("out", "verbose")}
    path = write_csv(rows, out / name, config_hash({"script": name, **opts}))
    print(f"wrote {path}")
    return path
