"""Residual control-chart anomaly detection for amplitude images.

Pipeline: fit the regression on a training window, push the whole image
through the fitted model, convert pixels to normal-quantile residuals,
flag everything outside the control limits, then clean the binary mask
with an opening (speckle removal) followed by a dilation (object
consolidation).  Detections whose centroids sit closer than the merge
distance count as one object.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .estimation import FitResult, RobustConfig, fit_both
from .inference import quantile_residuals_from_mean
from .regression import DesignMatrix, ModelSpec, get_link

__all__ = [
    "DetectorConfig",
    "Cluster",
    "DetectionResult",
    "threshold_residuals",
    "erode",
    "dilate",
    "opening",
    "closing",
    "postprocess",
    "extract_clusters",
    "score_detections",
    "detect",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class DetectorConfig:
    """Control limit, structuring-element sizes, and merge geometry.

    The defaults follow the usual three-sigma chart (limit 3), a 3x3
    opening, a 7x7 dilation, and a 10-pixel merge distance at one meter
    per pixel.
    """

    control_limit: float = 3.0
    opening_size: int = 3
    dilation_size: int = 7
    merge_distance: float = 10.0
    pixel_size_m: float = 1.0
    two_sided: bool = True

    def __post_init__(self):
        if self.control_limit <= 0:
            raise ValueError("control_limit must be positive")
        for name in ("opening_size", "dilation_size"):
            size = getattr(self, name)
            if size < 1 or size % 2 == 0:
                raise ValueError(f"{name} must be an odd positive integer, got {size}")
        if self.merge_distance < 0:
            raise ValueError("merge_distance must be nonnegative")
        if self.pixel_size_m <= 0:
            raise ValueError("pixel_size_m must be positive")


def _as_mask(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    return mask.astype(bool)


def _square(size: int) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"structuring element size must be odd and >= 1, got {size}")
    return np.ones((size, size), dtype=bool)


def threshold_residuals(residuals, limit: float, two_sided: bool = True) -> np.ndarray:
    """Binary anomaly mask: pixels strictly outside the control band.

    A residual exactly at the limit stays in control (the in-control band
    is the closed interval).
    """
    if limit <= 0:
        raise ValueError("control limit must be positive")
    residuals = np.asarray(residuals, dtype=np.float64)
    if two_sided:
        return np.abs(residuals) > limit
    return residuals > limit


def erode(mask, size: int) -> np.ndarray:
    """Binary erosion with a filled square; outside the image counts as 0."""
    return ndimage.binary_erosion(_as_mask(mask), structure=_square(size), border_value=0)


def dilate(mask, size: int) -> np.ndarray:
    """Binary dilation with a filled square; outside the image counts as 0."""
    return ndimage.binary_dilation(_as_mask(mask), structure=_square(size), border_value=0)


def opening(mask, size: int) -> np.ndarray:
    return dilate(erode(mask, size), size)


def closing(mask, size: int) -> np.ndarray:
    return erode(dilate(mask, size), size)


def postprocess(mask, cfg: DetectorConfig) -> np.ndarray:
    """Opening (speckle removal) then dilation (object consolidation)."""
    return dilate(opening(mask, cfg.opening_size), cfg.dilation_size)


@dataclass(frozen=True)
class Cluster:
    """One detection: merged connected components with a shared centroid."""

    centroid_row: float
    centroid_col: float
    n_pixels: int
    n_components: int = 1

    def as_dict(self) -> dict:
        return {
            "centroid_row": self.centroid_row,
            "centroid_col": self.centroid_col,
            "n_pixels": self.n_pixels,
            "n_components": self.n_components,
        }


def extract_clusters(mask, merge_distance: float = 0.0, pixel_size_m: float = 1.0) -> tuple:
    """8-connected components of a mask, merged by centroid proximity.

    Components whose centroids lie within ``merge_distance * pixel_size_m``
    meters of each other collapse (transitively) into a single cluster
    whose centroid is the pixel-count weighted mean.
    """
    mask = _as_mask(mask)
    labels, n_comp = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if n_comp == 0:
        return ()
    idx = np.arange(1, n_comp + 1)
    sizes = ndimage.sum_labels(mask, labels, idx)
    centroids = np.asarray(ndimage.center_of_mass(mask, labels, idx), dtype=np.float64)

    # Single-linkage merge on centroid distance via union-find.
    parent = list(range(n_comp))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    limit_m = merge_distance * pixel_size_m
    for i in range(n_comp):
        for j in range(i + 1, n_comp):
            d = np.hypot(*(centroids[i] - centroids[j])) * pixel_size_m
            if d <= limit_m:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups: dict = {}
    for i in range(n_comp):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        w = sizes[members]
        c = centroids[members]
        total = float(np.sum(w))
        clusters.append(
            Cluster(
                centroid_row=float(np.sum(w * c[:, 0]) / total),
                centroid_col=float(np.sum(w * c[:, 1]) / total),
                n_pixels=int(total),
                n_components=len(members),
            )
        )
    clusters.sort(key=lambda cl: (cl.centroid_row, cl.centroid_col))
    return tuple(clusters)


def score_detections(clusters, truth, radius_m: float, pixel_size_m: float = 1.0) -> tuple:
    """Greedy one-to-one matching of clusters to ground-truth points.

    Candidate pairs within ``radius_m`` meters are taken nearest first;
    every unmatched cluster is a false alarm and every unmatched truth a
    miss.  Returns ``(hits, false_alarms, missed)``.
    """
    if radius_m < 0:
        raise ValueError("radius must be nonnegative")
    truth = [(float(r), float(c)) for r, c in truth]
    pairs = []
    for ci, cl in enumerate(clusters):
        for ti, (tr, tc) in enumerate(truth):
            d = np.hypot(cl.centroid_row - tr, cl.centroid_col - tc) * pixel_size_m
            if d <= radius_m:
                pairs.append((d, ci, ti))
    pairs.sort()
    used_c: set = set()
    used_t: set = set()
    hits = 0
    for _, ci, ti in pairs:
        if ci in used_c or ti in used_t:
            continue
        used_c.add(ci)
        used_t.add(ti)
        hits += 1
    return hits, len(clusters) - hits, len(truth) - hits


@dataclass(frozen=True)
class DetectionResult:
    """Mask, clusters, and (when truth is known) the detection score."""

    mask: np.ndarray
    clusters: tuple
    fit: FitResult
    n_flagged: int
    hits: int | None = None
    false_alarms: int | None = None
    missed: int | None = None
    residuals: np.ndarray = field(repr=False, default=None)

    def clusters_as_dicts(self) -> list:
        return [c.as_dict() for c in self.clusters]


def _check_image(arr, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite pixels")
    return arr


def _check_region(region, shape) -> tuple:
    r0, c0, r1, c1 = (int(v) for v in region)
    rows, cols = shape
    if not (0 <= r0 < r1 <= rows and 0 <= c0 < c1 <= cols):
        raise ValueError(f"training region {region} does not fit image shape {shape}")
    return r0, c0, r1, c1


def detect(
    interest,
    covariates,
    training_region,
    cfg: DetectorConfig | None = None,
    robust: RobustConfig | None = None,
    method: str = "wmle",
    truth=None,
    truth_radius_m: float | None = None,
    link: str = "log",
) -> DetectionResult:
    """Run the full control-chart detector on one amplitude image.

    Parameters
    ----------
    interest : 2-D array
        Amplitude image to screen (nonnegative pixels).
    covariates : sequence of 2-D arrays
        Reference images of the same shape; an intercept is always added.
    training_region : (row0, col0, row1, col1)
        Half-open window whose pixels train the regression.  Every
        training pixel of ``interest`` must be strictly positive.
    cfg, robust : configuration for the chart and the fit.
    method : 'wmle' (robust, default) or 'mle'.
    truth : optional sequence of (row, col) target positions; scored with
        ``truth_radius_m`` (defaults to the merge distance in meters).

    Returns a :class:`DetectionResult`; deterministic for fixed inputs.
    """
    cfg = cfg or DetectorConfig()
    robust = robust or RobustConfig()
    if method not in ("wmle", "mle"):
        raise ValueError("method must be 'wmle' or 'mle'")
    interest = _check_image(interest, "interest image")
    if np.any(interest < 0):
        raise ValueError("interest image must be nonnegative")
    covariates = [_check_image(c, f"covariate {i + 1}") for i, c in enumerate(covariates)]
    for i, cov in enumerate(covariates):
        if cov.shape != interest.shape:
            raise ValueError(
                f"covariate {i + 1} shape {cov.shape} does not match interest {interest.shape}"
            )
    r0, c0, r1, c1 = _check_region(training_region, interest.shape)

    k = 1 + len(covariates)
    window = np.s_[r0:r1, c0:c1]
    y_train = interest[window].ravel()
    if y_train.size < 10 * k:
        raise ValueError(
            f"training region holds {y_train.size} pixels; need at least {10 * k} for {k} parameters"
        )
    nonpos = np.flatnonzero(y_train <= 0.0)
    if nonpos.size:
        width = c1 - c0
        coords = [(r0 + int(i) // width, c0 + int(i) % width) for i in nonpos[:10]]
        raise ValueError(
            f"training region contains {nonpos.size} nonpositive pixel(s), "
            f"first at (row, col): {coords}"
        )

    names = ("intercept",) + tuple(f"cov{i + 1}" for i in range(len(covariates)))
    X_train = np.column_stack([np.ones(y_train.size)] + [c[window].ravel() for c in covariates])
    spec = ModelSpec(design=DesignMatrix(X_train, names), link=link, response=y_train)
    mle, wmle = fit_both(spec, robust)
    fit = wmle if method == "wmle" else mle

    X_full = np.column_stack(
        [np.ones(interest.size)] + [c.ravel() for c in covariates]
    )
    eta = X_full @ fit.beta_hat
    mu_full = get_link(link).inverse(eta)
    if np.any(mu_full <= 0.0) or not np.all(np.isfinite(mu_full)):
        raise ValueError("fitted mean field is not strictly positive over the image")
    residuals = quantile_residuals_from_mean(interest.ravel(), mu_full).reshape(interest.shape)

    raw = threshold_residuals(residuals, cfg.control_limit, two_sided=cfg.two_sided)
    mask = postprocess(raw, cfg)
    clusters = extract_clusters(mask, cfg.merge_distance, cfg.pixel_size_m)

    hits = false_alarms = missed = None
    if truth is not None:
        radius = cfg.merge_distance * cfg.pixel_size_m if truth_radius_m is None else truth_radius_m
        hits, false_alarms, missed = score_detections(
            clusters, truth, radius, cfg.pixel_size_m
        )
    return DetectionResult(
        mask=mask,
        clusters=clusters,
        fit=fit,
        n_flagged=int(np.count_nonzero(raw)),
        hits=hits,
        false_alarms=false_alarms,
        missed=missed,
        residuals=residuals,
    )
