"""
Formatter utilities
Formats schedules, validation reports, simulation summaries and sweep results
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd
from rich.console import Console
from rich.table import Table

from ..models.schedule import Schedule, ViolationReport


class ReportFormatter:
    def __init__(self, console: Console = None):
        self.console = console or Console()

    def format_summary(self, schedule: Schedule, total: int) -> str:
        """One-line summary of an admission decision"""
        summary = f"accepted {schedule.objective} of {total}"
        if schedule.timed_out:
            summary += " (time budget exhausted)"
        return summary

    def format_json(self, data: Dict[str, Any]) -> str:
        return json.dumps(data, indent=2, sort_keys=False)

    def write_json(self, data: Dict[str, Any], path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.format_json(data) + '\n')

    def schedule_table(self, schedule: Schedule) -> Table:
        table = Table(title="Admission")
        table.add_column("Application")
        table.add_column("Accepted")
        table.add_column("Route")
        for app_id in sorted(schedule.admission):
            route = schedule.routes.get(app_id)
            table.add_row(app_id, "yes" if schedule.admission[app_id] else "no",
                          " > ".join(route.nodes) if route else "-")
        return table

    def violation_table(self, report: ViolationReport) -> Table:
        table = Table(title=f"Violations ({len(report.violations)})")
        table.add_column("Kind")
        table.add_column("Entities")
        table.add_column("Slack", justify="right")
        for violation in report.violations:
            table.add_row(violation.kind.value, ", ".join(violation.entities), str(violation.slack))
        return table

    def frame_table(self, frame: pd.DataFrame, title: str) -> Table:
        table = Table(title=title)
        for column in frame.columns:
            table.add_column(str(column), justify="right")
        for row in frame.itertuples(index=False):
            table.add_row(*(str(v) for v in row))
        return table

    def print_tables(self, tables: Sequence[Table]) -> None:
        for table in tables:
            self.console.print(table)


def rows_to_csv(rows: List[Dict[str, Any]], columns: List[str], path: Path) -> pd.DataFrame:
    """Write sweep rows in a fixed column order"""
    frame = pd.DataFrame(rows, columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return frame
