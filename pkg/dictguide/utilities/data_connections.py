"""
Purpose of script: handles reading data in and writing data back out.

All file access in the package goes through these helpers so that OS errors
surface as IoError (exit category "io") and text is always UTF-8.
"""
# Imports
# -------------------------------------------------------------------------
# Python:
import json
import logging
from pathlib import Path
from typing import Any, List, Union

# Local
from dictguide.exceptions import IoError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def data_path(*parts: str) -> Path:
    """
    Resolve a path under the configured data directory.

    The directory comes from params['data_dir'], which honours the
    DICTGUIDE_DATA_DIR environment variable.
    """
    from dictguide.params import params
    return Path(params['data_dir']).joinpath(*parts)


def read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from err


def write_bytes(path: PathLike, payload: bytes) -> None:
    """Write bytes; the parent directory must already exist."""
    try:
        Path(path).write_bytes(payload)
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err
    logger.debug("wrote %d bytes to %s", len(payload), path)


def read_lines(path: PathLike) -> List[str]:
    """Read a UTF-8 text file as a list of lines without line endings."""
    try:
        with open(path, encoding='utf-8') as handle:
            return handle.read().splitlines()
    except (OSError, UnicodeDecodeError) as err:
        raise IoError(f"cannot read {path}: {err}") from err


def write_text(path: PathLike, text: str) -> None:
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err
    logger.debug("wrote %s", path)


def write_json(path: PathLike, obj: Any) -> None:
    """Write canonical JSON (sorted keys, two-space indent, trailing newline)."""
    write_text(path, json.dumps(obj, sort_keys=True, indent=2) + '\n')


def read_json(path: PathLike) -> Any:
    text = '\n'.join(read_lines(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise IoError(f"{path} is not valid JSON: {err}") from err


def ensure_parent(path: PathLike) -> Path:
    """Create the parent directory of an output path if needed."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(f"cannot create {path.parent}: {err}") from err
    return path
