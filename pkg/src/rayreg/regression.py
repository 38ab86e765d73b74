"""Regression structure: link functions, design matrices, model specification.

The model ties the mean of a positive amplitude signal to covariates
through a strictly monotonic, twice differentiable link ``g``:

    g(mu[n]) = sum_i beta_i * x_i[n],   n = 0..N-1.

Two links are provided.  The log link is the default and is used by every
shipped experiment; the identity link exists as a minimal second option
that exercises the general link machinery (and its positivity guard).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LogLink",
    "IdentityLink",
    "get_link",
    "NonpositiveMeanError",
    "DesignMatrix",
    "ModelSpec",
    "predict_mean",
    "dummy_design",
]


class NonpositiveMeanError(ValueError):
    """Raised when a linear predictor maps to a nonpositive mean."""


class LogLink:
    """g(mu) = log(mu); the inverse is positive for every finite predictor."""

    name = "log"

    def link(self, mu):
        return np.log(mu)

    def inverse(self, eta):
        return np.exp(eta)

    def deriv(self, mu):
        """g'(mu)."""
        return 1.0 / np.asarray(mu, dtype=np.float64)

    def mean_deriv(self, mu):
        """d mu / d eta = 1 / g'(mu)."""
        return np.asarray(mu, dtype=np.float64)

    def fisher_weight(self, mu):
        """(4 / mu^2) * (d mu / d eta)^2; collapses to the constant 4."""
        mu = np.asarray(mu, dtype=np.float64)
        return np.full(mu.shape, 4.0)


class IdentityLink:
    """g(mu) = mu; valid only while the linear predictor stays positive."""

    name = "identity"

    def link(self, mu):
        return np.asarray(mu, dtype=np.float64)

    def inverse(self, eta):
        return np.asarray(eta, dtype=np.float64)

    def deriv(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return np.ones(mu.shape)

    def mean_deriv(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return np.ones(mu.shape)

    def fisher_weight(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return 4.0 / (mu * mu)


_LINKS = {"log": LogLink(), "identity": IdentityLink()}


def get_link(name):
    """Look up a link by name ('log' or 'identity'); instances are shared."""
    if isinstance(name, (LogLink, IdentityLink)):
        return name
    try:
        return _LINKS[name]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; expected one of {sorted(_LINKS)}") from None


def _readonly(arr):
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DesignMatrix:
    """N x k covariate matrix with one row per observation.

    The full-rank requirement is checked at fit time via
    :meth:`assert_full_rank`, not at construction, so partially built
    designs can still be inspected.
    """

    X: np.ndarray
    column_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"design matrix must be 2-D, got shape {X.shape}")
        n, k = X.shape
        if k == 0:
            raise ValueError("design matrix needs at least one column")
        if n <= k:
            raise ValueError(f"need more observations than covariates (N={n}, k={k})")
        if not np.all(np.isfinite(X)):
            raise ValueError("design matrix contains non-finite values")
        names = tuple(self.column_names) or tuple(f"x{i + 1}" for i in range(k))
        if len(names) != k:
            raise ValueError(f"expected {k} column names, got {len(names)}")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "column_names", names)

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_params(self) -> int:
        return self.X.shape[1]

    def assert_full_rank(self, tol_factor: float = 1e-10) -> None:
        """Raise if any singular value falls below tol_factor * largest."""
        s = np.linalg.svd(self.X, compute_uv=False)
        if s[-1] <= tol_factor * s[0]:
            raise ValueError(
                "design matrix is rank deficient "
                f"(singular values range {s[-1]:.3e} .. {s[0]:.3e})"
            )


@dataclass(frozen=True)
class ModelSpec:
    """Design, link, and strictly positive response, bundled for fitting."""

    design: DesignMatrix
    link: object
    response: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.response, dtype=np.float64)
        if y.ndim != 1:
            raise ValueError("response must be a 1-D vector")
        if y.shape[0] != self.design.n_obs:
            raise ValueError(
                f"response length {y.shape[0]} does not match design rows {self.design.n_obs}"
            )
        bad = np.flatnonzero(~(y > 0.0) | ~np.isfinite(y))
        if bad.size:
            head = ", ".join(str(i) for i in bad[:10])
            raise ValueError(
                f"response must be strictly positive and finite; "
                f"{bad.size} offending value(s), first indices: [{head}]"
            )
        object.__setattr__(self, "link", get_link(self.link))
        object.__setattr__(self, "response", _readonly(y))

    @classmethod
    def build(cls, X, y, link="log", column_names=()) -> "ModelSpec":
        """Convenience constructor from plain arrays."""
        return cls(design=DesignMatrix(np.asarray(X), tuple(column_names)), link=link, response=y)

    @property
    def n_obs(self) -> int:
        return self.design.n_obs

    @property
    def n_params(self) -> int:
        return self.design.n_params


def predict_mean(spec: ModelSpec, beta) -> np.ndarray:
    """Mean vector ``mu = g^{-1}(X beta)``.

    For the identity link, a nonpositive linear predictor has no valid
    mean and raises :class:`NonpositiveMeanError` naming the first
    offending index.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (spec.n_params,):
        raise ValueError(f"beta must have shape ({spec.n_params},), got {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta contains non-finite values")
    eta = spec.design.X @ beta
    mu = spec.link.inverse(eta)
    if np.any(mu <= 0.0):
        idx = int(np.flatnonzero(mu <= 0.0)[0])
        raise NonpositiveMeanError(
            f"{spec.link.name} link produced nonpositive mean at index {idx} "
            f"(eta={eta[idx]:.6g})"
        )
    return mu


def dummy_design(labels, reference) -> DesignMatrix:
    """Treatment-coded design for categorical region labels.

    Produces an intercept column of ones plus one 0/1 indicator per
    non-reference category, ordered by first appearance in ``labels``.
    The reference category is the all-zeros row.
    """
    labels = list(labels)
    if reference not in labels:
        raise ValueError(f"reference level {reference!r} does not occur in labels")
    seen: dict = {}
    for lab in labels:
        if lab != reference and lab not in seen:
            seen[lab] = None
    others = list(seen)
    if not others:
        raise ValueError("labels contain a single category; design would be degenerate")
    n = len(labels)
    X = np.zeros((n, 1 + len(others)))
    X[:, 0] = 1.0
    for j, cat in enumerate(others, start=1):
        X[:, j] = [1.0 if lab == cat else 0.0 for lab in labels]
    names = ("intercept",) + tuple(f"is_{cat}" for cat in others)
    return DesignMatrix(X, names)
