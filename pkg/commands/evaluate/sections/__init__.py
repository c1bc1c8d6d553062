from commands.evaluate.sections.scores import write_scores_section, write_summary_section
from commands.evaluate.sections.trend_chart import write_trend_chart_section

__all__ = [
    "write_scores_section",
    "write_summary_section",
    "write_trend_chart_section",
]
