"""
File formats:
    images, labellings, clamp masks: binary portable anymap, P5 (grey) / P6 (rgb)
    models and statistics:           json with full precision floats
"""
import json
import logging
from os import listdir, path, makedirs
from typing import NamedTuple

import numpy as np

from grf_shape.core.grid import (GrfModel, GridDomain, LabelSet, NeighborhoodStructure, PotentialTable, SufficientStatistics,
                                 as_offset, build_model)
from grf_shape.core.evidence import FREE
from grf_shape.core.appearance import AppearanceModel, GaussianComponent
from grf_shape.errors import MalformedHeader, LabelOutOfRange, ChannelMismatch, IncompatibleStatistics, DimensionMismatch

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODEL_FORMAT = "grf-shape-model"
STATISTICS_FORMAT = "grf-shape-statistics"
MAXVAL = 255


def add_zeros(v: int, digits=3):
    """
    return v as string, add leading zeros if len(str(v)) < digits
    """
    s = str(v)
    return '0' * (max(digits - len(s), 0)) + s


def get_next_filename(basename, directory=".", digits=3):
    """
    get the next filename (without extension).
    example:
        basename = grf
        directory has grf001.json, grf002.pgm, grf004.csv
        -> return grf005
    """
    if not path.isdir(directory):
        makedirs(directory)
    highest_number = -1
    for file in listdir(directory):
        if not file.startswith(basename): continue
        try:
            number = int(file[len(basename):file.rfind('.')])
        except ValueError:
            continue
        highest_number = max(highest_number, number)
    return basename + add_zeros(highest_number + 1, digits)


# PNM
def _header_tokens(data: bytes, count: int):
    """
    Read count whitespace separated header tokens, skipping '#' comments.
    @returns tokens, offset of the first raster byte
    """
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i >= len(data):
            raise MalformedHeader(f"PNM header ends after {len(tokens)} of {count} fields")
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        tokens.append(data[start:i])
    # exactly one whitespace character separates the header from the raster
    if i >= len(data) or not data[i:i + 1].isspace():
        raise MalformedHeader("PNM header is not terminated by whitespace")
    return tokens, i + 1


def read_pnm(p: str) -> tuple[np.ndarray, int]:
    """
    Read a binary P5/P6 file.
    @returns array (H, W) for P5 or (H, W, 3) for P6, maxval
    """
    with open(p, "rb") as file:
        data = file.read()
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise MalformedHeader(f"'{p}': unsupported magic number {magic!r}, expected P5 or P6")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeader(f"'{p}': non-integer size or maxval in header")
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MalformedHeader(f"'{p}': invalid size {width}x{height} or maxval {maxval}")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    n = width * height * channels
    if len(data) - offset < n * dtype.itemsize:
        raise MalformedHeader(f"'{p}': raster holds {len(data) - offset} bytes, expected {n * dtype.itemsize}")
    raster = np.frombuffer(data, dtype=dtype, count=n, offset=offset).astype(np.int64)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return raster.reshape(shape), maxval


def write_pnm(p: str, array: np.ndarray, maxval: int = MAXVAL, comment: str | None = None):
    array = np.asarray(array)
    if array.ndim == 2:
        magic = "P5"
    elif array.ndim == 3 and array.shape[2] == 3:
        magic = "P6"
    else:
        raise ChannelMismatch(f"Can only write grey (H, W) or rgb (H, W, 3) images, got shape {array.shape}")
    if array.size and (array.min() < 0 or array.max() > maxval):
        raise LabelOutOfRange(f"Values must be in 0..{maxval}")
    height, width = array.shape[:2]
    header = f"{magic}\n"
    if comment:
        header += f"# {comment}\n"
    header += f"{width} {height}\n{maxval}\n"
    with open(p, "wb") as file:
        file.write(header.encode("ascii"))
        file.write(array.astype(np.uint8 if maxval < 256 else ">u2").tobytes())


def read_image(p: str) -> np.ndarray:
    """
    @returns float image (H, W, C) with values in [0, 1]
    """
    raster, maxval = read_pnm(p)
    image = raster / maxval
    if image.ndim == 2:
        image = image[:, :, np.newaxis]
    return image


def write_image(p: str, image: np.ndarray):
    """Write a float image with values in [0, 1], values outside are clipped"""
    image = np.asarray(image, dtype=float)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[:, :, 0]
    write_pnm(p, np.rint(np.clip(image, 0, 1) * MAXVAL).astype(np.int64))


def read_labelling(p: str, labels: LabelSet | None = None) -> np.ndarray:
    """Pixel value = label id"""
    raster, _ = read_pnm(p)
    if raster.ndim != 2:
        raise MalformedHeader(f"'{p}': labellings must be P5 files")
    if labels is not None and raster.size and raster.max() >= labels.count:
        raise LabelOutOfRange(f"'{p}': label {raster.max()} outside of 0..{labels.count - 1}")
    return raster


def write_labelling(p: str, y: np.ndarray):
    y = np.asarray(y)
    if y.ndim != 2:
        raise DimensionMismatch(f"A labelling must be 2 dimensional, got shape {y.shape}")
    if y.size and (y.min() < 0 or y.max() > MAXVAL):
        raise LabelOutOfRange(f"Labels must be in 0..{MAXVAL} to be stored as P5")
    write_pnm(p, y)


def read_clamps(p: str, labels: LabelSet | None = None) -> np.ndarray:
    """
    0 = free, v >= 1 = clamped to label v - 1
    @returns clamps with FREE (-1) for free nodes
    """
    raster, _ = read_pnm(p)
    if raster.ndim != 2:
        raise MalformedHeader(f"'{p}': clamp masks must be P5 files")
    clamps = raster - 1
    if labels is not None and clamps.size and clamps.max() >= labels.count:
        raise LabelOutOfRange(f"'{p}': clamp value {clamps.max() + 1} addresses label {clamps.max()}, which is outside of 0..{labels.count - 1}")
    return clamps


def write_clamps(p: str, clamps: np.ndarray):
    clamps = np.asarray(clamps)
    if clamps.size and (clamps.min() < FREE or clamps.max() >= MAXVAL):
        raise LabelOutOfRange(f"Clamped labels must be in 0..{MAXVAL - 1}")
    write_pnm(p, clamps + 1)


# json
def _tables_to_json(pairwise: dict) -> list:
    return [{"offset": [a.dx, a.dy], "table": np.asarray(n).tolist()} for a, n in pairwise.items()]


def _tables_from_json(entries: list, K: int) -> dict:
    pairwise = {}
    for entry in entries:
        table = np.array(entry["table"], dtype=float)
        if table.shape != (K, K):
            raise DimensionMismatch(f"Table for offset {entry['offset']} has shape {table.shape}, expected ({K}, {K})")
        pairwise[as_offset(entry["offset"])] = table
    return pairwise


def _check_header(content: dict, fmt: str, p: str):
    if content.get("format") != fmt:
        raise MalformedHeader(f"'{p}' is not a {fmt} file")
    if content.get("version") != FORMAT_VERSION:
        raise MalformedHeader(f"'{p}': unsupported version {content.get('version')}, expected {FORMAT_VERSION}")


def _load_json(p: str) -> dict:
    with open(p, "r") as file:
        try:
            return json.load(file)
        except json.JSONDecodeError as e:
            raise MalformedHeader(f"'{p}' is not valid json: {e}")


def appearance_to_json(app: AppearanceModel) -> dict:
    return {
        "channels": app.channels,
        "regularization": app.regularization,
        "mixtures": [[{"weight": c.weight, "mean": c.mean.tolist(), "covariance": c.covariance.tolist()} for c in mixture] for mixture in app.mixtures],
    }


def appearance_from_json(content: dict) -> AppearanceModel:
    mixtures = tuple(tuple(GaussianComponent(c["weight"], c["mean"], c["covariance"]) for c in mixture) for mixture in content["mixtures"])
    return AppearanceModel(content["channels"], mixtures, content["regularization"])


class ModelFile(NamedTuple):
    model: GrfModel
    appearance: AppearanceModel | None
    provenance: dict


def write_model(p: str, model: GrfModel, appearance: AppearanceModel | None = None, provenance: dict | None = None):
    content = {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "labels": [model.labels.name(k) for k in range(model.labels.count)],
        "domain": {"width": model.domain.width, "height": model.domain.height},
        "structure": [[a.dx, a.dy] for a in model.structure.nonzero],
        "potentials": {
            "unary": model.potentials.unary.tolist(),
            "pairwise": _tables_to_json(model.potentials.pairwise),
        },
        "provenance": provenance or {},
    }
    if appearance is not None:
        content["appearance"] = appearance_to_json(appearance)
    with open(p, "w") as file:
        json.dump(content, file, indent=1)
    log.info(f"write_model: wrote model to '{p}'")


def read_model(p: str) -> ModelFile:
    content = _load_json(p)
    _check_header(content, MODEL_FORMAT, p)
    try:
        labels = LabelSet(len(content["labels"]), tuple(content["labels"]))
        domain = GridDomain(content["domain"]["width"], content["domain"]["height"])
        structure = NeighborhoodStructure.from_offsets(content["structure"])
        potentials = PotentialTable(np.array(content["potentials"]["unary"], dtype=float),
                                    _tables_from_json(content["potentials"]["pairwise"], labels.count))
        appearance = appearance_from_json(content["appearance"]) if "appearance" in content else None
    except (KeyError, TypeError) as e:
        raise MalformedHeader(f"'{p}': missing or invalid field {e}")
    model = build_model(domain, labels, structure, potentials)
    return ModelFile(model, appearance, content.get("provenance", {}))


def write_statistics(p: str, stats: SufficientStatistics, provenance: dict | None = None):
    content = {
        "format": STATISTICS_FORMAT,
        "version": FORMAT_VERSION,
        "kind": stats.kind,
        "unary": stats.unary.tolist(),
        "pairwise": _tables_to_json(stats.pairwise),
        "provenance": provenance or {},
    }
    with open(p, "w") as file:
        json.dump(content, file, indent=1)
    log.info(f"write_statistics: wrote {stats.kind} to '{p}'")


def read_statistics(p: str) -> tuple[SufficientStatistics, dict]:
    content = _load_json(p)
    _check_header(content, STATISTICS_FORMAT, p)
    try:
        unary = np.array(content["unary"], dtype=float)
        stats = SufficientStatistics(unary, _tables_from_json(content["pairwise"], unary.shape[0]), content["kind"])
    except (KeyError, TypeError) as e:
        raise MalformedHeader(f"'{p}': missing or invalid field {e}")
    if np.any(stats.as_vector() < 0):
        raise IncompatibleStatistics(f"'{p}': statistics contain negative entries")
    return stats, content.get("provenance", {})
