"""Console tables for CLI summaries."""
import logging
import math
from typing import Any, Dict, List, Optional

from wcwidth import wcswidth

from config import MAX_TABLE_ROWS

logger = logging.getLogger(__name__)

MAX_COLUMN_WIDTH = 50
LABEL_KEYWORDS = ("check", "kind", "family", "direction", "boundary", "error", "message", "name")


class ReportFormatter:
    """Fixed-width tables of result rows; labels left-aligned, numbers right-aligned."""

    def __init__(self, precision: int = 6):
        self.precision = precision

    def _display_width(self, text: str) -> int:
        width = wcswidth(text)
        # wcswidth gives -1 on control characters
        return width if width >= 0 else len(text)

    def _pad_to_width(self, text: str, target_width: int, align_right: bool = False) -> str:
        padding = target_width - self._display_width(text)
        if padding <= 0:
            return text
        return " " * padding + text if align_right else text + " " * padding

    def _truncate(self, text: str, width: int) -> str:
        if self._display_width(text) <= width:
            return text
        out = ""
        for ch in text:
            if self._display_width(out + ch) > width - 1:
                break
            out += ch
        logger.debug(f"cell truncated to {width} columns: {text!r}")
        return out + "…"

    def _is_label_column(self, column: str) -> bool:
        lowered = column.lower()
        return any(keyword in lowered for keyword in LABEL_KEYWORDS)

    def format_value(self, value: Any) -> str:
        if value is None:
            return "-"
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float):
            if math.isnan(value):
                return "nan"
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            return f"{value:.{self.precision}g}"
        if isinstance(value, (list, tuple)):
            return "(" + ", ".join(self.format_value(v) for v in value) + ")"
        return str(value)

    def format_table(self, rows: List[Dict[str, Any]], title: str = "Results",
                     max_rows: int = MAX_TABLE_ROWS) -> str:
        """
        Render rows as a text table.

        Args:
            rows: One dict per row; the first row fixes the columns
            title: Heading printed above the table
            max_rows: Rows shown before the remainder is summarized

        Returns:
            The table as a single string
        """
        if not rows:
            return f"{title}: nothing to show."
        shown = rows[:max_rows]
        columns = list(shown[0].keys())
        cells = [{c: self._truncate(self.format_value(row.get(c)), MAX_COLUMN_WIDTH) for c in columns}
                 for row in shown]

        widths = {}
        for column in columns:
            widest = max([self._display_width(column)] + [self._display_width(r[column]) for r in cells])
            widths[column] = min(widest, MAX_COLUMN_WIDTH)

        total = sum(widths.values()) + 3 * (len(columns) - 1)
        lines = [f"{title}:", "=" * total]
        lines.append(" | ".join(
            self._pad_to_width(c, widths[c], not self._is_label_column(c)) for c in columns
        ))
        lines.append("-" * total)
        for r in cells:
            lines.append(" | ".join(
                self._pad_to_width(r[c], widths[c], not self._is_label_column(c)) for c in columns
            ))
        if len(rows) > max_rows:
            lines.append(f"\n... and {len(rows) - max_rows} more rows")
        return "\n".join(lines)

    def format_verdicts(self, verdicts: List[Dict[str, Any]]) -> str:
        rows = [{"check": v["check"], "passed": v["passed"],
                 "message": v.get("message") or v.get("error") or ""} for v in verdicts]
        passed = sum(1 for v in verdicts if v["passed"])
        return self.format_table(rows, title=f"Verify suite ({passed}/{len(verdicts)} passed)")

    def format_mapping(self, data: Dict[str, Any], title: str, keys: Optional[List[str]] = None) -> str:
        """Two-column name/value table of the scalar entries of ``data``."""
        keys = keys or [k for k, v in data.items() if not isinstance(v, (dict, list))]
        return self.format_table([{"name": k, "value": data.get(k)} for k in keys], title=title)
