import logging
from pathlib import Path

import plotly.express as px

from config import LOGGER_NAME
from utils import file_access

logger = logging.getLogger(LOGGER_NAME)

THEME_PRIMARY_COLOR = "#1E88E5"  # Blue
THEME_TEXT_COLOR = "#31333F"  # Dark grey
THEME_COLORWAY = [THEME_PRIMARY_COLOR, "#FF9800", "#4CAF50", "#F44336", "#9C27B0", "#00BCD4"]

# Label colors for the embedding scatter: normal tissue red, infarcted green
LABEL_COLORS = {"normal": "#F44336", "infarct": "#4CAF50"}


def _apply_theme(fig, xaxis_title=None, yaxis_title=None):
    fig.update_layout(
        font=dict(
            family="sans serif",
            color=THEME_TEXT_COLOR,
        ),
        paper_bgcolor="white",
        plot_bgcolor="white",
        margin=dict(l=40, r=40, t=50, b=40),
        colorway=THEME_COLORWAY,
        title_font=dict(size=16),
    )
    fig.update_xaxes(
        title=xaxis_title,
        gridcolor="rgba(0,0,0,0.1)",
        zerolinecolor="rgba(0,0,0,0.2)",
        title_font=dict(size=14),
    )
    fig.update_yaxes(
        title=yaxis_title,
        gridcolor="rgba(0,0,0,0.1)",
        zerolinecolor="rgba(0,0,0,0.2)",
        title_font=dict(size=14),
    )
    return fig


def create_themed_line(df, x, y, title=None, xaxis_title=None, yaxis_title=None, color=None, markers=True):
    """Themed line chart from a polars DataFrame; one line per value of `color`"""
    fig = px.line(
        df,
        x=x,
        y=y,
        title=title,
        color=color,
        markers=markers,
        color_discrete_sequence=THEME_COLORWAY,
        labels={
            x: xaxis_title if xaxis_title else x,
            y: yaxis_title if yaxis_title else y,
        },
    )
    _apply_theme(fig, xaxis_title or x, yaxis_title or y)
    fig.update_traces(line=dict(width=2.5))
    return fig


def create_themed_scatter(df, x, y, color=None, title=None, xaxis_title=None, yaxis_title=None):
    """Themed scatter chart from a polars DataFrame, colored by label"""
    fig = px.scatter(
        df,
        x=x,
        y=y,
        color=color,
        title=title,
        color_discrete_map=LABEL_COLORS,
        color_discrete_sequence=THEME_COLORWAY,
    )
    _apply_theme(fig, xaxis_title or x, yaxis_title or y)
    fig.update_traces(marker=dict(size=7, opacity=0.8))
    return fig


def write_svg(fig, path, width=720, height=480):
    """Static SVG export through Kaleido"""
    path = Path(path)
    with file_access(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.write_image(str(path), format="svg", width=width, height=height)
    logger.info(f"Saved chart {path}")
