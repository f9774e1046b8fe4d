"""JSON/CSV file formats: spectra, coefficient sets, reports.

Spectrum file::

    {"schema_version": 1, "group": "so3", "entries": [{"label": 0, "alpha": 1.0}, ...]}

``group`` is one of ``cyclic`` (then ``N`` is required), ``circle``, ``so3``
or ``sphere``; labels are integer frequencies or degrees.

Coefficients file::

    {"schema_version": 1, "group": "so3", "encoding": "decimal",
     "blocks": [{"label": 1, "shape": [3, 3], "real": [...], "imag": [...]}]}

With ``"encoding": "base64"`` each block has a ``"data"`` string holding the
row-major complex128 little-endian bytes instead of ``real``/``imag``.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .groups import CyclicGroup, Space, make_space
from .spectral import FieldCoefficients, PowerSpectrum

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """A file does not follow the expected schema."""


def _space_header(space: Space) -> dict:
    head = {"schema_version": SCHEMA_VERSION, "group": space.name}
    if isinstance(space, CyclicGroup):
        head["N"] = space.N
    return head


def _space_from(doc: dict) -> Space:
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema_version {version}")
    try:
        return make_space(doc["group"], doc.get("N"))
    except KeyError:
        raise FormatError("missing 'group'") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from None


def spectrum_to_dict(spec: PowerSpectrum) -> dict:
    doc = _space_header(spec.space)
    doc["entries"] = [{"label": l, "alpha": a} for l, a in spec.alphas.items()]
    return doc


def spectrum_from_dict(doc: dict) -> PowerSpectrum:
    space = _space_from(doc)
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise FormatError("'entries' must be a list")
    alphas = {}
    for e in entries:
        try:
            label, alpha = int(e["label"]), float(e["alpha"])
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"bad spectrum entry {e!r}") from None
        if label in alphas:
            raise FormatError(f"duplicate label {label}")
        alphas[label] = alpha
    try:
        return PowerSpectrum(space, alphas)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def coefficients_to_dict(coeffs: FieldCoefficients, encoding: str = "decimal") -> dict:
    doc = _space_header(coeffs.space)
    doc["encoding"] = encoding
    blocks = []
    for l, b in coeffs.blocks.items():
        item = {"label": l, "shape": list(b.shape)}
        if encoding == "decimal":
            item["real"] = b.real.ravel().tolist()
            item["imag"] = b.imag.ravel().tolist()
        elif encoding == "base64":
            item["data"] = base64.b64encode(np.ascontiguousarray(b, dtype="<c16").tobytes()).decode("ascii")
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
        blocks.append(item)
    doc["blocks"] = blocks
    return doc


def coefficients_from_dict(doc: dict) -> FieldCoefficients:
    space = _space_from(doc)
    encoding = doc.get("encoding", "decimal")
    blocks = {}
    for item in doc.get("blocks", []):
        try:
            label, shape = int(item["label"]), tuple(int(s) for s in item["shape"])
            if encoding == "decimal":
                arr = np.asarray(item["real"], float) + 1j * np.asarray(item["imag"], float)
            elif encoding == "base64":
                arr = np.frombuffer(base64.b64decode(item["data"]), dtype="<c16")
            else:
                raise FormatError(f"unknown encoding {encoding!r}")
            blocks[label] = arr.reshape(shape)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad coefficient block: {exc}") from None
    try:
        return FieldCoefficients(space, blocks)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dumps(doc) -> str:
    """Canonical JSON text used for every written document."""
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None


def load_spectrum(path) -> PowerSpectrum:
    return spectrum_from_dict(read_json(path))


def save_spectrum(spec: PowerSpectrum, path) -> None:
    Path(path).write_text(dumps(spectrum_to_dict(spec)))


def load_coefficients(path) -> FieldCoefficients:
    return coefficients_from_dict(read_json(path))


def save_coefficients(coeffs: FieldCoefficients, path, encoding: str = "decimal") -> None:
    Path(path).write_text(dumps(coefficients_to_dict(coeffs, encoding)))
