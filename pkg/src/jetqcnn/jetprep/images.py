"""Jet images: Gram-Schmidt coordinates histogrammed with energy fractions."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegeneracyError, KinematicsError
from .kinematics import GSBasis, Jet, gram_schmidt_basis, project_all, rescale_and_boost

log = logging.getLogger(__name__)

IMAGE_SIZE = 28


def render_image(jet: Jet, basis: GSBasis, H: int = IMAGE_SIZE, W: int = IMAGE_SIZE,
                 E_B: float = 10.0) -> np.ndarray:
    """``(H, W)`` histogram over [-1, 1]^2, rows indexed by Y and columns by X.

    Each constituent adds E / E_B. Points on the upper edge fall in the last
    bin, points on the lower edge in the first.
    """
    X, Y, E, dropped = project_all(jet.constituents, basis)
    if dropped:
        log.warning("dropped %d constituents with non-positive energy", dropped)
    # |p| <= E bounds the coordinates; clip only rounding excursions
    X = np.clip(X, -1.0, 1.0)
    Y = np.clip(Y, -1.0, 1.0)
    col = np.minimum(((X + 1.0) * (W / 2.0)).astype(int), W - 1)
    row = np.minimum(((Y + 1.0) * (H / 2.0)).astype(int), H - 1)
    img = np.zeros((H, W))
    np.add.at(img, (row, col), E / E_B)
    return img


@dataclass
class PrepReport:
    jets_in: int = 0
    kept: int = 0
    skipped_degenerate: int = 0
    skipped_kinematics: int = 0
    messages: list[str] = field(default_factory=list)

    def summary(self) -> str:
        return (f"jets read: {self.jets_in}, images: {self.kept}, "
                f"degenerate frames: {self.skipped_degenerate}, "
                f"kinematics errors: {self.skipped_kinematics}")


def process_jet(jet: Jet, m_B: float = 1.0, E_B: float = 10.0, H: int = IMAGE_SIZE,
                W: int = IMAGE_SIZE) -> np.ndarray:
    boosted = rescale_and_boost(jet, m_B, E_B)
    basis = gram_schmidt_basis(boosted)
    return render_image(boosted, basis, H, W, E_B)


def _safe(args):
    jet, m_B, E_B, H, W = args
    try:
        return process_jet(jet, m_B, E_B, H, W), None
    except DegeneracyError as exc:
        return None, ("degenerate", str(exc))
    except KinematicsError as exc:
        return None, ("kinematics", str(exc))


def preprocess(jets, m_B: float = 1.0, E_B: float = 10.0, H: int = IMAGE_SIZE,
               W: int = IMAGE_SIZE, jobs: int = 1):
    """Images and labels for every usable jet, in input order."""
    jets = list(jets)
    report = PrepReport(jets_in=len(jets))
    work = [(j, m_B, E_B, H, W) for j in jets]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(_safe, work))
    else:
        results = [_safe(w) for w in work]
    images, labels = [], []
    for i, (img, err) in enumerate(results):
        if err is None:
            images.append(img)
            labels.append(jets[i].label)
        elif err[0] == "degenerate":
            report.skipped_degenerate += 1
            report.messages.append(f"jet {i}: {err[1]}")
        else:
            report.skipped_kinematics += 1
            report.messages.append(f"jet {i}: {err[1]}")
    report.kept = len(images)
    arr = np.stack(images) if images else np.zeros((0, H, W))
    return arr, np.asarray(labels, dtype=np.uint8), report


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit binary PGM, linearly scaled to the image maximum."""
    img = np.asarray(image, dtype=float)
    peak = img.max()
    scaled = np.zeros_like(img) if peak <= 0 else img / peak
    data = np.round(scaled[::-1] * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(data.tobytes())
