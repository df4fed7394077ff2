"""Model persistence: a single self-describing binary container.

Layout (all integers little-endian):

    magic  b"SSBN"
    u32    format version (currently 1)
    u64    header length in bytes
    bytes  header JSON (utf-8, sorted keys): section states + array manifest
    bytes  raw float64 array data, concatenated in manifest order
    bytes  sha256 digest of everything above (32 bytes)

The checksum is verified on load and a version mismatch is rejected.
Floats inside the JSON header round-trip exactly (repr-based), and array
bytes are copied verbatim, so save -> load reproduces bit-identical
predictions.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FeatureScaler
from .forest import RandomForestSentimentClassifier
from .network import FusionNetwork, network_from_state, network_state
from .text import TfidfVectorizer

MAGIC = b"SSBN"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    config: dict
    vectorizer: TfidfVectorizer | None = None
    forest: RandomForestSentimentClassifier | None = None
    scaler: FeatureScaler | None = None
    network: FusionNetwork | None = None


def _collect(bundle: ModelBundle) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    arrays: list[tuple[str, np.ndarray]] = []
    sections: dict = {"config": bundle.config}
    sections["tfidf"] = bundle.vectorizer.get_state() if bundle.vectorizer else None
    sections["forest"] = bundle.forest.get_state() if bundle.forest else None
    if bundle.scaler is not None:
        sections["scaler"] = True
        arrays += [
            ("scaler.min", bundle.scaler.min_),
            ("scaler.max", bundle.scaler.max_),
            ("scaler.scale", bundle.scaler.scale_),
        ]
    else:
        sections["scaler"] = None
    if bundle.network is not None:
        meta, net_arrays = network_state(bundle.network)
        sections["network"] = meta
        arrays += sorted(net_arrays.items())
    else:
        sections["network"] = None
    return sections, arrays


def save_bundle(path: str | Path, bundle: ModelBundle) -> str:
    """Write the bundle; returns the hex checksum of the file contents."""
    sections, arrays = _collect(bundle)
    header = {
        "sections": sections,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<Q", len(header_bytes))
    blob += header_bytes
    for _, a in arrays:
        blob += np.ascontiguousarray(a, dtype="<f8").tobytes()
    digest = hashlib.sha256(bytes(blob)).digest()
    blob += digest
    Path(path).write_bytes(bytes(blob))
    return hashlib.sha256(bytes(blob)).hexdigest()


def bundle_checksum(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_bundle(path: str | Path) -> ModelBundle:
    raw = Path(path).read_bytes()
    if len(raw) < 48 or raw[:4] != MAGIC:
        raise ValueError("not a model bundle (bad magic)")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ValueError("bundle checksum mismatch (corrupt file)")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported bundle version {version}")
    (header_len,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    sections = header["sections"]
    offset = 16 + header_len
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        size = count * 8
        arrays[entry["name"]] = np.frombuffer(
            body, dtype="<f8", count=count, offset=offset
        ).reshape(shape).copy()
        offset += size

    bundle = ModelBundle(config=sections["config"])
    if sections["tfidf"] is not None:
        bundle.vectorizer = TfidfVectorizer.from_state(sections["tfidf"])
    if sections["forest"] is not None:
        bundle.forest = RandomForestSentimentClassifier.from_state(sections["forest"])
    if sections["scaler"] is not None:
        scaler = FeatureScaler()
        scaler.min_ = arrays["scaler.min"]
        scaler.max_ = arrays["scaler.max"]
        scaler.scale_ = arrays["scaler.scale"]
        bundle.scaler = scaler
    if sections["network"] is not None:
        bundle.network = network_from_state(
            sections["network"],
            {k: v for k, v in arrays.items() if not k.startswith("scaler.")},
        )
    return bundle
