#!/usr/bin/env python3
"""Export benchmark survival datasets from the SurvSet package as numeric CSV.

Usage: pip install SurvSet pandas && python3 scripts/export_survset.py data/

Encoding applied (the splitters never read covariates, so this only has to be
lossless enough to keep one numeric column per original covariate):
  - factor columns (``fac_*``) become integer category codes, sorted by label,
    with missing values coded -1;
  - missing numeric values are replaced by the column median;
  - ``pid`` is dropped; row order is preserved.
GBSG2 keeps the original ``cens`` name for its event column.
"""
import sys
from pathlib import Path

import pandas as pd
from SurvSet.data import SurvLoader

DATASETS = {
    # output stem: (SurvSet name, event column name)
    "gbsg2": ("GBSG2", "cens"),
    "aids": ("Aids2", "event"),
    "flchain": ("flchain", "event"),
    "support": ("support2", "event"),
}


def encode(df: pd.DataFrame) -> pd.DataFrame:
    out = pd.DataFrame(index=df.index)
    for col in df.columns:
        if col in ("pid", "time", "event"):
            continue
        if col.startswith("fac_"):
            cats = sorted(df[col].dropna().astype(str).unique())
            codes = {c: i for i, c in enumerate(cats)}
            out[col] = df[col].map(lambda v: -1 if pd.isna(v) else codes[str(v)]).astype(int)
        else:
            values = pd.to_numeric(df[col])
            out[col] = values.fillna(values.median())
    out["time"] = df["time"].astype(float)
    out["event"] = df["event"].astype(int)
    return out


def main(dest: str) -> None:
    loader = SurvLoader()
    Path(dest).mkdir(parents=True, exist_ok=True)
    for stem, (name, event_col) in DATASETS.items():
        df = encode(loader.load_dataset(ds_name=name)["df"])
        df = df.rename(columns={"event": event_col})
        path = Path(dest) / f"{stem}.csv"
        df.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
        print(f"{path}: {len(df)} rows, {df.shape[1] - 2} features")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
