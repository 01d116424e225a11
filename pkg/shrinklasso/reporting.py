# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Output plumbing shared by the management commands: full-precision CSV
writing, versioned JSON config documents and run manifests.
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from .exceptions import SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"
MANIFEST_SUFFIX = ".manifest.json"


def check_schema(document, kind):
    if not isinstance(document, dict):
        raise SchemaError("%s document must be a JSON object" % kind)
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            "%s document has schema_version %r, expected %d"
            % (kind, version, SCHEMA_VERSION)
        )


def load_document(path, kind):
    try:
        with open(path) as f:
            document = json.load(f)
    except ValueError as e:
        raise SchemaError("%s is not valid JSON: %s" % (path, e))
    check_schema(document, kind)
    return document


def restriction_from_dict(document):
    """``{"schema_version": 1, "H": [[...], ...], "h": [...]}``"""
    from .model import Restriction

    check_schema(document, "restriction")
    try:
        H = np.array(document["H"], dtype=float)
    except KeyError:
        raise SchemaError("restriction document lacks H")
    except (TypeError, ValueError):
        raise SchemaError("restriction H must be a numeric row-major matrix")
    h = document.get("h")
    if h is None:
        h = np.zeros(H.shape[0] if H.ndim == 2 else 0)
    return Restriction(H, h)


def restriction_to_dict(restriction):
    return {
        "schema_version": SCHEMA_VERSION,
        "H": restriction.H.tolist(),
        "h": restriction.h.tolist(),
    }


def write_frame(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %s (%d rows)", path, len(frame))


def file_digest(path):
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class RunManifest:
    """
    Everything needed to reproduce one output file: the command, its fully
    resolved options, the seed, the package version and digests of every
    input file.
    """

    command: str
    options: Dict[str, object]
    seed: Optional[int]
    version: str
    inputs: Dict[str, str] = field(default_factory=dict)
    duration: float = 0.0
    output: str = ""

    def __post_init__(self):
        self.options = _jsonable(dict(self.options))

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            document = json.loads(text)
        except ValueError as e:
            raise SchemaError("manifest is not valid JSON: %s" % e)
        try:
            return cls(**document)
        except TypeError as e:
            raise SchemaError("malformed manifest: %s" % e)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(f.read())

    @staticmethod
    def path_for(output):
        return output + MANIFEST_SUFFIX

    def write(self):
        path = self.path_for(self.output)
        with open(path, "w") as f:
            f.write(self.to_json())
        return path


def digest_inputs(paths):
    return {
        os.path.abspath(path): file_digest(path)
        for path in paths if path
    }
