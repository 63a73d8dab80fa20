"""Spectral covariance models and angle metrics on the unit sphere.

A :class:`SpectralModel` fixes a covariance matrix through its ordered
eigenvalues and an orthonormal eigenbasis.  The first eigenvector is the
principal direction that every estimator in this package is judged against.
All angle arithmetic lives here so that the rest of the package can speak in
``sin^2`` / ``tan^2`` without re-deriving trigonometry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Tolerances used by the constructors and invariant checks.
ORTHONORMAL_TOL = 1e-10
UNIT_NORM_TOL = 1e-9
EQUATOR_TOL = 1e-14
DEGENERATE_NORM = 1e-300


def random_orthogonal(d: int, seed: int) -> np.ndarray:
    """Seeded random orthogonal d x d matrix.

    QR of a standard-normal matrix with the signs fixed so the R factor has a
    positive diagonal, which makes the draw unique and Haar-distributed.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen=True)
class SpectralModel:
    """Covariance model with a strictly dominant top eigenvalue.

    ``eigenvalues`` must be nonincreasing with ``lam1 > lam2 >= ... >= 0``;
    ``basis`` holds the eigenvectors as columns, column 0 being the principal
    component.  ``basis_spec`` remembers how the basis was built
    ("identity", "seed:<n>", or None for an explicit matrix) so the model can
    be serialized compactly.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    basis_spec: str | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        basis = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", basis)
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("need at least two eigenvalues")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if lam[-1] < 0:
            raise ValueError("eigenvalues must be nonnegative")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        if not lam[0] > lam[1]:
            raise ValueError("top eigenvalue gap must be strictly positive")
        d = lam.size
        if basis.shape != (d, d):
            raise ValueError(f"basis must be {d}x{d}, got {basis.shape}")
        dev = np.max(np.abs(basis.T @ basis - np.eye(d)))
        if dev > ORTHONORMAL_TOL:
            raise ValueError(f"basis not orthonormal (max deviation {dev:.3g})")

    @classmethod
    def from_eigenvalues(cls, eigenvalues, basis="identity") -> "SpectralModel":
        """Build a model from eigenvalues and a basis spec.

        ``basis`` may be the string "identity", "seed:<int>", an integer seed,
        or an explicit orthonormal matrix.
        """
        lam = np.asarray(eigenvalues, dtype=float)
        d = lam.size
        if isinstance(basis, str):
            if basis == "identity":
                return cls(lam, np.eye(d), "identity")
            if basis.startswith("seed:"):
                seed = int(basis[5:], 0)
                return cls(lam, random_orthogonal(d, seed), f"seed:{seed}")
            raise ValueError(f"unknown basis spec {basis!r}")
        if isinstance(basis, (int, np.integer)):
            return cls(lam, random_orthogonal(d, int(basis)), f"seed:{int(basis)}")
        return cls(lam, np.asarray(basis, dtype=float), None)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def gap(self) -> float:
        """Distance between the top two eigenvalues."""
        return float(self.eigenvalues[0] - self.eigenvalues[1])

    @property
    def principal(self) -> np.ndarray:
        """The true principal component (first basis column)."""
        return self.basis[:, 0]

    @cached_property
    def covariance(self) -> np.ndarray:
        cov = (self.basis * self.eigenvalues) @ self.basis.T
        return (cov + cov.T) / 2.0

    @cached_property
    def sqrt_covariance(self) -> np.ndarray:
        """Symmetric PSD square root of the covariance."""
        root = (self.basis * np.sqrt(self.eigenvalues)) @ self.basis.T
        return (root + root.T) / 2.0

    def to_json(self) -> str:
        if self.basis_spec is not None:
            basis = self.basis_spec
        else:
            basis = self.basis.tolist()
        return json.dumps(
            {"dim": self.dim, "eigenvalues": self.eigenvalues.tolist(), "basis": basis}
        )

    @classmethod
    def from_json(cls, text_or_dict) -> "SpectralModel":
        data = text_or_dict
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        lam = np.asarray(data["eigenvalues"], dtype=float)
        if "dim" in data and int(data["dim"]) != lam.size:
            raise ValueError("dim does not match eigenvalue count")
        return cls.from_eigenvalues(lam, data.get("basis", "identity"))


def effective_noise_variance(model: SpectralModel) -> float:
    """lam1 * lam2 / (lam1 - lam2)^2, the scale of every rate bound here."""
    lam1, lam2 = model.eigenvalues[0], model.eigenvalues[1]
    return float(lam1 * lam2 / (lam1 - lam2) ** 2)


def project_to_sphere(v) -> np.ndarray:
    """Euclidean projection onto the unit sphere; errors on (near-)zero input."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not norm > DEGENERATE_NORM:
        raise ValueError("degenerate direction")
    return v / norm


def _check_unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"{name} is not unit-norm")
    return v


@dataclass(frozen=True)
class AngleReport:
    """Angle between two unit vectors in every form the package consumes.

    ``tan2`` is ``math.inf`` when the vectors are orthogonal (cosine zero
    within :data:`EQUATOR_TOL`), so aggregation code can count rather than
    average such cases.
    """

    theta: float
    sin2: float
    tan2: float
    cos: float


def report_from_cosine(c: float) -> AngleReport:
    """AngleReport from a raw inner product, clamped before arccos."""
    c = min(1.0, max(-1.0, float(c)))
    sin2 = 1.0 - c * c
    if abs(c) <= EQUATOR_TOL:
        tan2 = math.inf
    else:
        tan2 = sin2 / (c * c)
    return AngleReport(theta=math.acos(c), sin2=sin2, tan2=tan2, cos=c)


def angle_report(u, v) -> AngleReport:
    """Angle between two unit vectors."""
    u = _check_unit(u, "u")
    v = _check_unit(v, "v")
    return report_from_cosine(float(np.dot(u, v)))


def rescale_to_eigenbasis(model: SpectralModel, u) -> np.ndarray:
    """Coordinates of ``u`` in the model's eigenbasis (norm preserving).

    The angle to the principal component equals the angle between the result
    and the first canonical axis.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (model.dim,):
        raise ValueError(f"expected vector of dimension {model.dim}")
    return model.basis.T @ u


def coordinate_ratios(v) -> np.ndarray:
    """Ratios v_k / v_1 for k >= 2; their squares sum to tan^2 of the angle
    to the first axis."""
    v = np.asarray(v, dtype=float)
    if abs(float(v[0])) <= EQUATOR_TOL:
        raise ValueError("ratio undefined on equator")
    return v[1:] / v[0]
