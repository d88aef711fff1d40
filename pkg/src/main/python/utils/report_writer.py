"""
Deterministic text reports: `[section]` headers followed by `key = value` lines
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from .spec_parser import format_real

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Render one report value; reals use 17 significant digits"""
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_value(v) for v in value)
    return str(value)


class Report:
    """Ordered sections of key/value pairs"""

    def __init__(self):
        self._sections: List[Tuple[str, Dict[str, Any]]] = []

    def section(self, title: str, /, **values: Any) -> Dict[str, Any]:
        entries: Dict[str, Any] = dict(values)
        self._sections.append((title, entries))
        return entries

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self._sections]

    def get(self, section: str, key: str) -> Any:
        for name, entries in self._sections:
            if name == section and key in entries:
                return entries[key]
        raise KeyError(f"{section}.{key}")

    def render(self) -> str:
        blocks = []
        for name, entries in self._sections:
            lines = [f"[{name}]"]
            lines.extend(f"{key} = {format_value(value)}" for key, value in entries.items())
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def write(self, path: Union[str, Path]) -> Path:
        """Write the report, creating parent directories"""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.render(), encoding="utf-8")
        logger.info(f"Report written to {target}")
        return target


def parse_report(text: str) -> Dict[str, Dict[str, str]]:
    """Read a rendered report back into raw strings per section"""
    sections: Dict[str, Dict[str, str]] = {}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], {})
        elif current is not None and " = " in line:
            key, value = line.split(" = ", 1)
            current[key] = value
    return sections
