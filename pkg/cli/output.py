"""
Terminal and file output: colored banners, tabulate tables, and the CSV /
JSON artifacts of an experiment run.
"""

import csv
import json
import numbers
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from tabulate import tabulate

# 17 significant digits round-trip every double
FLOAT_FORMAT = '%.17g'


# --- Color Support ---

class Colors:
    HEADER = '\033[95m'
    BLUE = '\033[94m'
    CYAN = '\033[96m'
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BOLD = '\033[1m'
    END = '\033[0m'

    @staticmethod
    def disable():
        Colors.HEADER = Colors.BLUE = Colors.CYAN = ''
        Colors.GREEN = Colors.YELLOW = Colors.RED = ''
        Colors.BOLD = Colors.END = ''


def print_header(title: str):
    width = 96
    print(f"\n{Colors.BOLD}{Colors.CYAN}{'═' * width}{Colors.END}")
    print(f"{Colors.BOLD}{Colors.CYAN}{title.center(width)}{Colors.END}")
    print(f"{Colors.BOLD}{Colors.CYAN}{'═' * width}{Colors.END}\n")


def status(passed: bool) -> str:
    return f"{Colors.GREEN}PASS{Colors.END}" if passed else f"{Colors.RED}FAIL{Colors.END}"


def print_table(headers: Sequence[str], rows: Iterable[Sequence[Any]], floatfmt: str = '.6g'):
    print(tabulate(list(rows), headers=list(headers), tablefmt='fancy_grid', floatfmt=floatfmt))


# --- Values ---

def format_value(value: Any) -> str:
    """CSV cell text: blanks stay blank, integers plain, reals with 17 significant digits."""
    if value is None or (isinstance(value, str) and value == ''):
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return FLOAT_FORMAT % float(value)
    return str(value)


def _json_default(value: Any):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return str(value)


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, default=_json_default)


# --- Files ---

def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Path:
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c, '')) for c in columns])
    return path


def write_json(path: Path, payload: Any) -> Path:
    with open(path, 'w') as fh:
        fh.write(to_json(payload))
        fh.write('\n')
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, newline='') as fh:
        return list(csv.DictReader(fh))
