"""PSNR / SSIM and the per-dataset averaging protocol.

SSIM follows the standard formulation: 11x11 Gaussian window (sigma 1.5),
K1 = 0.01, K2 = 0.03, dynamic range 1.0, computed on luminance
(Y = 0.299 R + 0.587 G + 0.114 B) over valid window positions only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import check_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    if max_val <= 0:
        raise ValueError(f"max_val must be positive, got {max_val}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def luminance(image: np.ndarray) -> np.ndarray:
    image = check_image(image)
    return (0.299 * image[:, :, 0] + 0.587 * image[:, :, 1]
            + 0.114 * image[:, :, 2]).astype(np.float64)


def _window_stats(y: np.ndarray, win: np.ndarray) -> np.ndarray:
    # weighted window sums via sliding views; (H-10, W-10) result
    views = sliding_window_view(y, win.shape)
    return np.tensordot(views, win, axes=([2, 3], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity on luminance; 1.0 exactly iff a == b."""
    a = check_image(a, "a")
    b = check_image(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"ssim shape mismatch: {a.shape} vs {b.shape}")
    h, w = a.shape[:2]
    if min(h, w) < SSIM_WINDOW:
        raise ValueError(f"image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    ya, yb = luminance(a), luminance(b)
    win = _gaussian_window()
    mu_a = _window_stats(ya, win)
    mu_b = _window_stats(yb, win)
    saa = _window_stats(ya * ya, win) - mu_a * mu_a
    sbb = _window_stats(yb * yb, win) - mu_b * mu_b
    sab = _window_stats(ya * yb, win) - mu_a * mu_b
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * sab + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


@dataclass
class EvalRow:
    image_id: str
    method: str
    regime: str
    psnr_db: float
    ssim: float
    error: str = ""


@dataclass
class EvalAggregate:
    method: str
    regime: str
    mean_psnr_db: float
    mean_ssim: float
    n_images: int
    n_inf_psnr: int


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    aggregates: list[EvalAggregate] = field(default_factory=list)


def evaluate_dataset(pairs, method: str, regime: str) -> EvalReport:
    """Score (restored, clean, image_id) triples and append the mean row.

    Infinite PSNR values are excluded from the PSNR mean and reported as a
    separate count; the SSIM mean covers every image.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluate_dataset needs at least one image pair")
    rows = []
    for restored, clean, image_id in pairs:
        rows.append(EvalRow(image_id=str(image_id), method=method, regime=regime,
                            psnr_db=psnr(restored, clean), ssim=ssim(restored, clean)))
    finite = [r.psnr_db for r in rows if math.isfinite(r.psnr_db)]
    n_inf = len(rows) - len(finite)
    agg = EvalAggregate(
        method=method, regime=regime,
        mean_psnr_db=float(np.mean(finite)) if finite else math.inf,
        mean_ssim=float(np.mean([r.ssim for r in rows])),
        n_images=len(rows), n_inf_psnr=n_inf,
    )
    return EvalReport(rows=rows, aggregates=[agg])


def merge_reports(reports) -> EvalReport:
    out = EvalReport()
    for rep in reports:
        out.rows.extend(rep.rows)
        out.aggregates.extend(rep.aggregates)
    return out


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def write_report_csv(report: EvalReport, path) -> None:
    """CSV layout: per-image rows first, then one __mean__ row per aggregate."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "method", "regime", "psnr_db", "ssim", "errors"])
        for r in report.rows:
            writer.writerow([r.image_id, r.method, r.regime, _fmt(r.psnr_db), _fmt(r.ssim), r.error])
        for a in report.aggregates:
            writer.writerow(["__mean__", a.method, a.regime,
                             _fmt(a.mean_psnr_db), _fmt(a.mean_ssim),
                             f"n={a.n_images};inf_psnr={a.n_inf_psnr}"])


def read_report_csv(path) -> EvalReport:
    report = EvalReport()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            p = float(rec["psnr_db"])
            s = float(rec["ssim"])
            if rec["image_id"] == "__mean__":
                meta = dict(kv.split("=") for kv in rec["errors"].split(";"))
                report.aggregates.append(EvalAggregate(
                    method=rec["method"], regime=rec["regime"],
                    mean_psnr_db=p, mean_ssim=s,
                    n_images=int(meta["n"]), n_inf_psnr=int(meta["inf_psnr"])))
            else:
                report.rows.append(EvalRow(image_id=rec["image_id"], method=rec["method"],
                                           regime=rec["regime"], psnr_db=p, ssim=s,
                                           error=rec.get("errors", "")))
    return report
