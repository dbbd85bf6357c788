"""
Report envelopes and their serialization.

Reports are written with sorted keys and no wall clock in the results body,
so equal inputs give byte identical output. Timing is only recorded when
asked for.
"""
import csv
import json
import math
import os
from dataclasses import dataclass, field
from hashlib import sha256
from typing import Optional

import numpy as np


SCHEMA = 'srm-report-v1'


def sha256_hex(data):
    return sha256(data).hexdigest()


def digest_input(source):
    """
    Digest of a definition given as a path (its bytes) or inline text.
    """
    if isinstance(source, str) and os.path.exists(source):
        with open(source, 'rb') as handle:
            return sha256_hex(handle.read())
    if isinstance(source, dict):
        return sha256_hex(canonical_json(source).encode('utf-8'))
    return sha256_hex(str(source).encode('utf-8'))


def jsonable(value):
    """
    Plain JSON types for ``value``: numpy scalars and arrays become Python
    numbers and lists, non finite floats become ``None``.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, 'to_dict'):
        return jsonable(value.to_dict())
    return value


def canonical_json(obj, indent=None):
    separators = (',', ':') if indent is None else (',', ': ')
    return json.dumps(jsonable(obj), sort_keys=True, indent=indent,
                      separators=separators, allow_nan=False)


@dataclass
class ReportEnvelope(object):
    command: str
    parameters: dict
    results: dict
    inputs: dict = field(default_factory=dict)
    version: str = ''
    timing: Optional[float] = None
    schema: str = SCHEMA

    def __post_init__(self):
        if not self.version:
            from srmvariation import __version__
            self.version = __version__

    def to_dict(self):
        out = {
            'schema': self.schema,
            'version': self.version,
            'command': self.command,
            'parameters': self.parameters,
            'inputs': self.inputs,
            'results': self.results,
        }
        if self.timing is not None:
            out['timing'] = self.timing
        return jsonable(out)

    def to_json(self, indent=2):
        return canonical_json(self.to_dict(), indent=indent) + '\n'

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get('schema') != SCHEMA:
            raise ValueError('not an %s report' % SCHEMA)
        return cls(command=data['command'], parameters=data['parameters'],
                   results=data['results'], inputs=data.get('inputs', {}),
                   version=data['version'], timing=data.get('timing'))


def write_csv(path, fieldnames, rows):
    """
    ``rows`` are sequences in ``fieldnames`` order.
    """
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(
                x, (float, np.floating)) else x for x in row])
