"""
Machine-readable reports.

JSON reports carry `schema: "transquad.report/1"` and are written with sorted
keys and no timestamps, so equal runs give byte-identical files. Tables go to
CSV with one column per tracked coordinate (`coord_1`, `coord_2`, ...).
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .ordinal_core import OrdinalAddress
from .spaces import VectorValue

logger = logging.getLogger(__name__)

SCHEMA = 'transquad.report/1'

STATUS_CERTIFIED = 'certified'
STATUS_INCONCLUSIVE = 'inconclusive'
EXIT_CODES = {STATUS_CERTIFIED: 0, STATUS_INCONCLUSIVE: 2}


def plain(value):
    """JSON-safe copy: numpy scalars and arrays, enums, addresses, vectors, non-finite floats"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, VectorValue):
        return plain(value.to_dict())
    if isinstance(value, OrdinalAddress):
        return {'address': value.to_list(), 'sup': value.is_sup}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


@dataclass
class Table:
    """Rows of dicts; a 'coords' entry is spread over coord_<i> columns"""

    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    def header(self, dim):
        out = []
        for column in self.columns:
            if column == 'coords':
                out.extend(f'coord_{i}' for i in range(1, dim + 1))
            else:
                out.append(column)
        return out

    def flat_rows(self):
        for row in self.rows:
            flat = []
            for column in self.columns:
                value = row.get(column)
                if column == 'coords':
                    flat.extend(plain(list(value)))
                else:
                    flat.append(plain(value))
            yield flat

    @property
    def dim(self):
        for row in self.rows:
            if 'coords' in row:
                return len(row['coords'])
        return 0


@dataclass
class Report:
    command: str
    source: str
    status: str = STATUS_CERTIFIED
    settings: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    @property
    def exit_code(self):
        return EXIT_CODES[self.status]

    def mark_inconclusive(self, message):
        self.status = STATUS_INCONCLUSIVE
        self.messages.append(message)
        logger.warning(message)

    def add_table(self, table):
        self.tables[table.name] = table

    def main_table(self):
        return next(iter(self.tables.values()), None)

    def to_dict(self):
        return plain({
            'schema': SCHEMA,
            'command': self.command,
            'source': self.source,
            'status': self.status,
            'exit_code': self.exit_code,
            'settings': self.settings,
            'results': self.results,
            'messages': self.messages,
            'tables': {
                name: {'columns': table.header(table.dim), 'rows': list(table.flat_rows())}
                for name, table in self.tables.items()
            },
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'


def write_json(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding='utf-8')
    logger.info(f"report written to {path}")
    return path


def write_csv(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(table.header(table.dim))
        for row in table.flat_rows():
            writer.writerow(row)
    logger.info(f"{table.name} table ({len(table.rows)} rows) written to {path}")
    return path
