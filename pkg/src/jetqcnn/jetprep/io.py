"""File formats: JSON-lines jets, JIMG image containers, feature CSVs."""
from __future__ import annotations

import csv
import io
import json
import logging
import struct

import numpy as np

from ..errors import ParseError
from .kinematics import Jet

log = logging.getLogger(__name__)

MAGIC = b"JIMG"
MIN_CONSTITUENTS = 3
MAX_CONSTITUENTS = 200


def parse_jets(stream) -> tuple[list[Jet], int]:
    """Read ``{"label": 0|1, "constituents": [[E, px, py, pz], ...]}`` lines.

    All-zero constituents are padding and dropped. Jets left with fewer than
    three constituents are skipped; the skip count is returned alongside.
    """
    jets, skipped = [], 0
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode()
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            label = int(doc["label"])
            cons = np.asarray(doc["constituents"], dtype=float).reshape(-1, 4)
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"malformed jet record ({exc})", lineno) from None
        if label not in (0, 1):
            raise ParseError(f"label must be 0 or 1, got {label}", lineno)
        if len(cons) > MAX_CONSTITUENTS:
            log.warning("line %d: %d constituents, keeping the first %d", lineno, len(cons),
                        MAX_CONSTITUENTS)
            cons = cons[:MAX_CONSTITUENTS]
        cons = cons[np.any(cons != 0.0, axis=1)]
        if len(cons) < MIN_CONSTITUENTS:
            skipped += 1
            continue
        jets.append(Jet(cons, label))
    if skipped:
        log.warning("skipped %d jets with fewer than %d constituents", skipped, MIN_CONSTITUENTS)
    return jets, skipped


def format_jet(jet: Jet) -> str:
    return json.dumps({"label": int(jet.label), "constituents": jet.constituents.tolist()})


def write_images(fh, images: np.ndarray, labels) -> None:
    """JIMG: magic, u32 count/H/W (LE), float32 pixels (LE), u8 labels."""
    images = np.asarray(images)
    count, H, W = images.shape
    fh.write(MAGIC)
    fh.write(struct.pack("<III", count, H, W))
    fh.write(images.astype("<f4").tobytes())
    fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


def read_images(fh) -> tuple[np.ndarray, np.ndarray]:
    data = fh.read()
    if data[:4] != MAGIC or len(data) < 16:
        raise ParseError("not a JIMG container")
    count, H, W = struct.unpack("<III", data[4:16])
    npix = count * H * W
    expected = 16 + 4 * npix + count
    if len(data) != expected:
        raise ParseError(f"JIMG size mismatch: {len(data)} bytes, expected {expected}")
    pixels = np.frombuffer(data, dtype="<f4", count=npix, offset=16).reshape(count, H, W)
    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=16 + 4 * npix)
    return pixels.astype(float), labels.astype(int)


def write_features(fh, splits: dict[str, tuple[np.ndarray, np.ndarray]]) -> None:
    """CSV rows ``split,label,f0..f{k-1}``; floats written with 17 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    k = next((X.shape[1] for X, _ in splits.values() if X.ndim == 2), 4)
    w.writerow(["split", "label"] + [f"f{i}" for i in range(k)])
    for name, (X, y) in splits.items():
        for row, label in zip(X, y):
            w.writerow([name, int(label)] + [f"{v:.17g}" for v in row])


def read_features(fh) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or header[:2] != ["split", "label"]:
        raise ParseError("feature file must start with a split,label,... header", 1)
    rows: dict[str, tuple[list, list]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            feats = [float(v) for v in row[2:]]
            xs, ys = rows.setdefault(row[0], ([], []))
            xs.append(feats)
            ys.append(int(row[1]))
        except (ValueError, IndexError):
            raise ParseError(f"bad feature row {row!r}", lineno) from None
    return {k: (np.array(xs, dtype=float), np.array(ys, dtype=int)) for k, (xs, ys) in rows.items()}
