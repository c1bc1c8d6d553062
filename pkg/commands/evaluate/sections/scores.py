import logging
from pathlib import Path

import polars as pl

from config import LOGGER_NAME
from utils import write_frame, write_json

logger = logging.getLogger(LOGGER_NAME)


def write_scores_section(df, out_dir):
    """scores.csv plus a per-modality Dice table"""
    out_dir = Path(out_dir)
    write_frame(df, out_dir / "scores.csv")

    dice_table = (
        df.filter(pl.col("dice_green").is_not_null())
        .group_by("modality", maintain_order=True)
        .agg(
            pl.col("dice_green").mean().alias("mean_dice"),
            pl.col("dice_green").min().alias("min_dice"),
            pl.len().alias("images"),
        )
    )
    write_frame(dice_table, out_dir / "dice.csv")

    for row in df.iter_rows(named=True):
        score = "undefined" if row["score"] is None else f"{row['score']:.4f}"
        dice = "-" if row["dice_green"] is None else f"{row['dice_green']:.3f}"
        logger.info(f"[{row['modality']}] {row['label']}: phi={row['phi']:g} S={score} dice={dice}")
    return dice_table


def write_summary_section(df, status, out_dir, provenance):
    failures = df.filter(pl.col("error").is_not_null()).height
    write_json({
        "images": df.height,
        "failures": failures,
        "monotonicity": status,
        "provenance": provenance,
    }, Path(out_dir) / "summary.json")
