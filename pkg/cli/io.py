"""File parsing and serialisation helpers for the command-line surface."""

import json
import logging
import sys

from optics.errors import InputError, ParseError
from optics.fock import FockState
from optics.interferometer import AdaptiveInterferometer
from optics.permanent import matrix_from_json

logger = logging.getLogger(__name__)


def read_text(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def read_json(path):
    """Parse a JSON file, reporting the line/column of syntax errors."""
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{exc.msg} (column {exc.colno})", source=path, line=exc.lineno) from exc


def dumps(data) -> str:
    """Canonical JSON text: sorted keys, fixed indentation."""
    return json.dumps(data, sort_keys=True, indent=2)


def write_output(data, out=None):
    """Write JSON (dict/list) or raw text to ``out`` or stdout."""
    text = data if isinstance(data, str) else dumps(data) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror}") from exc
    logger.info("Wrote %s", out)


def load_interferometer(path, photons=None) -> AdaptiveInterferometer:
    """Load an adaptive-interferometer file, or a bare matrix (non-adaptive, needs ``photons``)."""
    data = read_json(path)
    if isinstance(data, dict) and "u0" in data:
        a = AdaptiveInterferometer.from_json(data, source=path)
        if photons is not None and photons != a.n:
            raise InputError(f"--photons {photons} disagrees with n={a.n} in {path}")
        return a
    matrix = matrix_from_json(data, source=path)
    if photons is None:
        raise ParseError("a bare matrix needs --photons", source=path, field="n")
    try:
        return AdaptiveInterferometer.non_adaptive(matrix, photons)
    except InputError as exc:
        raise ParseError(str(exc), source=path) from exc


def parse_state(text, what="state") -> FockState:
    """Parse a Fock state given as a JSON array ("[1,0,1]") or comma list ("1,0,1")."""
    raw = text.strip()
    try:
        values = json.loads(raw) if raw.startswith("[") else [int(v) for v in raw.split(",") if v.strip()]
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {what} {text!r}: {exc}") from exc
    return FockState.from_json(values)
