import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from core.settings import section

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def schema_version():
    return int(section("output").get("schema_version", 1))


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return sorted(value) if isinstance(value, (set, frozenset)) else list(value)
    if hasattr(value, "value") and hasattr(value, "name"):
        return value.value
    return str(value)


def write_csv(frame, path, digest):
    """CSV with a '# schema=N config=<sha256>' header line; identical input gives identical bytes"""
    path = Path(path)
    with open(path, "w", newline="") as f:
        f.write(f"# schema={schema_version()} config={digest}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload, path):
    path = Path(path)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    return path


def write_results(result, root):
    """
    Writes every table and field of a run under root/<output>/ together with
    a JSON metadata sidecar and a manifest listing all files and the config hash.
    """
    config = result.config
    directory = Path(root) / config.output
    directory.mkdir(parents=True, exist_ok=True)
    digest = config.digest
    files = []

    for name, rows in sorted(result.tables.items()):
        files.append(write_csv(pd.DataFrame(rows), directory / f"{name}.csv", digest))
    for name, solved in sorted(result.fields.items()):
        files.append(write_csv(solved.to_frame(), directory / f"{name}.csv", digest))

    metadata = {
        "config_sha256": digest,
        "schema": schema_version(),
        "config": config.describe(),
        "failures": result.failures,
        **result.metadata,
    }
    files.append(write_json(metadata, directory / "metadata.json"))

    manifest = {
        "config_sha256": digest,
        "config_source": config.source,
        "experiment": config.name,
        "kind": config.kind,
        "schema": schema_version(),
        "files": [f.name for f in files],
        "status": "fail" if result.failed else "pass",
    }
    write_json(manifest, directory / "manifest.json")
    logger.info("wrote %d file(s) to %s", len(files) + 1, directory)
    return directory
