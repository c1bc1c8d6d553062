import logging
from pathlib import Path

import polars as pl

from chart_utils import create_themed_line, write_svg
from config import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)


def write_trend_chart_section(df, out_dir):
    """Infarction score against timepoint label, one line per modality"""
    plotted = df.filter(pl.col("score").is_not_null()).sort(["modality", "order"])
    if plotted.is_empty():
        logger.warning("No defined scores; skipping the trend chart")
        return None
    fig = create_themed_line(
        plotted.select("label", "score", "modality"),
        x="label",
        y="score",
        color="modality",
        title="Infarction score by timepoint",
        xaxis_title="Timepoint",
        yaxis_title="Infarction score S",
    )
    path = Path(out_dir) / "score_trend.svg"
    write_svg(fig, path)
    return path
