"""PSNR and Bjontegaard rate/quality deltas over rate-distortion curves.

BD metrics use the classic four-point variant: fit a cubic polynomial of
log10(rate) against PSNR (or PSNR against log10(rate)), integrate both
fits over the shared interval, and convert the mean gap.  Negative BD-rate
means the test curve needs less bitrate than the anchor at equal quality.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """10*log10(peak^2 / MSE); identical inputs give +inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"plane shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def delta_psnr(enhanced: np.ndarray, baseline: np.ndarray, original: np.ndarray) -> float:
    """PSNR gain of ``enhanced`` over ``baseline`` w.r.t. ``original``."""
    return psnr(enhanced, original) - psnr(baseline, original)


@dataclass(frozen=True)
class RdPoint:
    rate: float  # bits or kbit/s; one unit per curve
    psnr: float  # dB

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")


def _validate_curve(points: list[RdPoint], label: str) -> None:
    if len(points) < 4:
        raise ValueError(f"{label} curve needs >= 4 points, got {len(points)}")
    rates = [p.rate for p in points]
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError(f"{label} curve must have strictly increasing rate")


def _fit_and_integrate(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    """Mean of a cubic least-squares fit of y(x) over [lo, hi]."""
    if len(np.unique(x)) < 4:
        raise ValueError("degenerate fit: duplicate abscissa values")
    coeffs = np.polyfit(x, y, 3)
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("degenerate fit: singular polynomial system")
    integral = np.polyval(np.polyint(coeffs), hi) - np.polyval(np.polyint(coeffs), lo)
    return integral / (hi - lo)


def _overlap(a: np.ndarray, b: np.ndarray, what: str) -> tuple[float, float]:
    lo = max(a.min(), b.min())
    hi = min(a.max(), b.max())
    if hi <= lo:
        raise ValueError(f"curves have no {what} overlap")
    return lo, hi


def bd_rate(anchor: list[RdPoint], test: list[RdPoint]) -> float:
    """Average bitrate difference of ``test`` vs ``anchor`` in percent."""
    _validate_curve(anchor, "anchor")
    _validate_curve(test, "test")
    pa = np.array([p.psnr for p in anchor])
    pt = np.array([p.psnr for p in test])
    ra = np.log10([p.rate for p in anchor])
    rt = np.log10([p.rate for p in test])
    lo, hi = _overlap(pa, pt, "PSNR")
    avg_anchor = _fit_and_integrate(pa, ra, lo, hi)
    avg_test = _fit_and_integrate(pt, rt, lo, hi)
    return (10.0 ** (avg_test - avg_anchor) - 1.0) * 100.0


def bd_psnr(anchor: list[RdPoint], test: list[RdPoint]) -> float:
    """Average PSNR gap of ``test`` over ``anchor`` in dB."""
    _validate_curve(anchor, "anchor")
    _validate_curve(test, "test")
    pa = np.array([p.psnr for p in anchor])
    pt = np.array([p.psnr for p in test])
    ra = np.log10([p.rate for p in anchor])
    rt = np.log10([p.rate for p in test])
    lo, hi = _overlap(ra, rt, "rate")
    avg_anchor = _fit_and_integrate(ra, pa, lo, hi)
    avg_test = _fit_and_integrate(rt, pt, lo, hi)
    return avg_test - avg_anchor


def read_rd_csv(path: str | Path) -> list[RdPoint]:
    """Parse ``rate,psnr`` lines; blank lines, comments and a header allowed."""
    points = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'rate,psnr'")
            try:
                rate, quality = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError(f"{path}:{lineno}: non-numeric RD point {row!r}")
            points.append(RdPoint(rate=rate, psnr=quality))
    return points


# ---------------------------------------------------------------------------
# evaluation reports


@dataclass
class EvalRow:
    frame: int
    plane: str  # "u" or "v"
    psnr_baseline: float
    psnr_enhanced: float

    @property
    def delta(self) -> float:
        if math.isinf(self.psnr_enhanced) and math.isinf(self.psnr_baseline):
            return 0.0
        return self.psnr_enhanced - self.psnr_baseline


@dataclass
class EvalReport:
    """Per-frame, per-plane PSNR table with finite-only averages."""

    rows: list[EvalRow]

    def plane_rows(self, plane: str) -> list[EvalRow]:
        return [r for r in self.rows if r.plane == plane]

    def averages(self, plane: str) -> dict[str, float | int]:
        """Means over rows whose values are finite, plus an inf count."""
        rows = self.plane_rows(plane)
        finite = [r for r in rows if math.isfinite(r.delta) and math.isfinite(r.psnr_baseline)]
        result: dict[str, float | int] = {
            "count": len(rows),
            "inf_count": len(rows) - len(finite),
        }
        if finite:
            result["psnr_baseline"] = sum(r.psnr_baseline for r in finite) / len(finite)
            result["psnr_enhanced"] = sum(r.psnr_enhanced for r in finite) / len(finite)
            result["delta"] = sum(r.delta for r in finite) / len(finite)
        return result

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "plane", "psnr_baseline", "psnr_enhanced", "delta_psnr"])
            for r in self.rows:
                writer.writerow([r.frame, r.plane,
                                 _fmt(r.psnr_baseline), _fmt(r.psnr_enhanced), _fmt(r.delta)])

    def to_text(self) -> str:
        lines = [f"{'frame':>5} {'plane':>5} {'baseline':>10} {'enhanced':>10} {'delta':>8}"]
        for r in self.rows:
            lines.append(f"{r.frame:>5} {r.plane:>5} {_fmt(r.psnr_baseline):>10} "
                         f"{_fmt(r.psnr_enhanced):>10} {_fmt(r.delta):>8}")
        for plane in ("u", "v"):
            avg = self.averages(plane)
            if avg["count"] == 0:
                continue
            note = f" ({avg['inf_count']} inf excluded)" if avg["inf_count"] else ""
            if "delta" in avg:
                lines.append(
                    f"  avg {plane}: baseline {avg['psnr_baseline']:.4f} dB, "
                    f"enhanced {avg['psnr_enhanced']:.4f} dB, "
                    f"delta {avg['delta']:+.4f} dB over {avg['count']} frames{note}")
            else:
                lines.append(f"  avg {plane}: all {avg['count']} frames infinite{note}")
        return "\n".join(lines)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"
