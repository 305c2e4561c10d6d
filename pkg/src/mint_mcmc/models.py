"""Benchmark models, synthetic data generators and dataset ingestion."""
from __future__ import annotations

import csv
import gzip
import math
import os
import struct
from itertools import permutations
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ConfigError, Dataset, Model

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

LOG_2PI = math.log(2 * math.pi)


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    mx = a.max(axis=1)
    return mx + np.log(np.exp(a - mx[:, None]).sum(axis=1))


def _mixture_loglik_py(theta, x, inv_s2):
    m, d = x.shape[0], theta.shape[0]
    out = np.empty(m)
    w = np.empty(d)
    for i in range(m):
        mx = -np.inf
        for j in range(d):
            t = x[i] - theta[j]
            w[j] = -0.5 * inv_s2 * t * t
            mx = max(mx, w[j])
        s = 0.0
        for j in range(d):
            s += math.exp(w[j] - mx)
        out[i] = mx + math.log(s)
    return out


def _mixture_grad_sum_py(theta, x, inv_s2):
    m, d = x.shape[0], theta.shape[0]
    g = np.zeros(d)
    w = np.empty(d)
    for i in range(m):
        mx = -np.inf
        for j in range(d):
            t = x[i] - theta[j]
            w[j] = -0.5 * inv_s2 * t * t
            mx = max(mx, w[j])
        s = 0.0
        for j in range(d):
            w[j] = math.exp(w[j] - mx)
            s += w[j]
        for j in range(d):
            g[j] += w[j] / s * (x[i] - theta[j]) * inv_s2
    return g


def _two_component_loglik_py(x, a, b, inv_s, const):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        u = -0.5 * inv_s * (x[i] - a) ** 2
        v = -0.5 * inv_s * (x[i] - b) ** 2
        hi, lo = (u, v) if u > v else (v, u)
        out[i] = hi + math.log1p(math.exp(lo - hi)) + const
    return out


if numba is not None:
    _mixture_loglik = numba.njit(cache=True)(_mixture_loglik_py)
    _mixture_grad_sum = numba.njit(cache=True)(_mixture_grad_sum_py)
    _two_component_loglik = numba.njit(cache=True)(_two_component_loglik_py)
else:  # pragma: no cover
    _mixture_loglik = _mixture_grad_sum = _two_component_loglik = None


class TiedMeansMixture(Model):
    """x ~ 0.5 N(theta1, sx2) + 0.5 N(theta1 + theta2, sx2), with Gaussian priors
    theta1 ~ N(0, s1sq) and theta2 ~ N(0, s2sq)."""

    name = "tied-means"
    dim = 2

    def __init__(self, sigma1_sq: float = 10.0, sigma2_sq: float = 1.0, sigmax_sq: float = 2.0):
        self.sigma1_sq = sigma1_sq
        self.sigma2_sq = sigma2_sq
        self.sigmax_sq = sigmax_sq

    def params(self) -> dict:
        return {"sigma1_sq": self.sigma1_sq, "sigma2_sq": self.sigma2_sq, "sigmax_sq": self.sigmax_sq}

    def _parts(self, theta, x):
        s = self.sigmax_sq
        a = -0.5 * (x - theta[0]) ** 2 / s
        b = -0.5 * (x - theta[0] - theta[1]) ** 2 / s
        return a, b

    def loglik(self, theta, x):
        const = math.log(0.5) - 0.5 * (LOG_2PI + math.log(self.sigmax_sq))
        if _two_component_loglik is not None:
            x = np.ascontiguousarray(x, dtype=float)
            return _two_component_loglik(x, float(theta[0]), float(theta[0] + theta[1]), 1.0 / self.sigmax_sq, const)
        a, b = self._parts(theta, x)
        return np.logaddexp(a, b) + const

    def grad_loglik(self, theta, x):
        a, b = self._parts(theta, x)
        w2 = 1.0 / (1.0 + np.exp(a - b))
        w1 = 1.0 - w2
        r1 = (x - theta[0]) / self.sigmax_sq
        r2 = (x - theta[0] - theta[1]) / self.sigmax_sq
        return np.stack([w1 * r1 + w2 * r2, w2 * r2], axis=1)

    def log_prior(self, theta):
        return float(-0.5 * (theta[0] ** 2 / self.sigma1_sq + theta[1] ** 2 / self.sigma2_sq)
                     - 0.5 * (2 * LOG_2PI + math.log(self.sigma1_sq * self.sigma2_sq)))

    def grad_log_prior(self, theta):
        return np.array([-theta[0] / self.sigma1_sq, -theta[1] / self.sigma2_sq])

    def generate(self, theta_star, n, rng):
        theta_star = self.check_theta(theta_star)
        second = rng.random(n) < 0.5
        loc = theta_star[0] + second * theta_star[1]
        return Dataset(loc + math.sqrt(self.sigmax_sq) * rng.standard_normal(n), {"kind": self.name})

    def true_modes(self, theta_star=(0.0, 1.0)):
        t1, t2 = np.asarray(theta_star, dtype=float)
        return [np.array([t1, t2]), np.array([t1 + t2, -t2])]


class SymmetricMixture(Model):
    """Equal-weight mixture (1/d) sum_j N(theta_j, sigma2) with known variance.

    With ``d == 1`` this is the Gaussian location model.
    """

    name = "symmetric-mixture"

    def __init__(self, d: int = 10, sigma_sq: float = 1.0):
        if d < 1:
            raise ConfigError("mixture needs at least one component")
        self.dim = d
        self.sigma_sq = sigma_sq
        self._const = -math.log(d) - 0.5 * (LOG_2PI + math.log(sigma_sq))

    def params(self) -> dict:
        return {"d": self.dim, "sigma_sq": self.sigma_sq}

    def loglik(self, theta, x):
        if self.dim == 1:
            return -0.5 * (x - theta[0]) ** 2 / self.sigma_sq + self._const
        if _mixture_loglik is not None:
            return _mixture_loglik(theta, np.ascontiguousarray(x, dtype=float), 1.0 / self.sigma_sq) + self._const
        a = (-0.5 / self.sigma_sq) * (x[:, None] - theta[None, :]) ** 2
        return _logsumexp_rows(a) + self._const

    def grad_loglik(self, theta, x):
        diff = x[:, None] - theta[None, :]
        if self.dim == 1:
            return diff / self.sigma_sq
        a = (-0.5 / self.sigma_sq) * diff**2
        a -= a.max(axis=1, keepdims=True)
        r = np.exp(a)
        r /= r.sum(axis=1, keepdims=True)
        return r * diff / self.sigma_sq

    def grad_loglik_sum(self, theta, x):
        if self.dim > 1 and _mixture_grad_sum is not None:
            return _mixture_grad_sum(theta, np.ascontiguousarray(x, dtype=float), 1.0 / self.sigma_sq)
        return self.grad_loglik(theta, x).sum(axis=0)

    def generate(self, theta_star, n, rng):
        theta_star = self.check_theta(theta_star)
        comp = rng.integers(0, self.dim, n)
        x = theta_star[comp] + math.sqrt(self.sigma_sq) * rng.standard_normal(n)
        return Dataset(x, {"kind": self.name})

    def true_modes(self, theta_star=None):
        """Coordinate permutations of theta*; for theta* = a*e_1 these are a*e_j."""
        if theta_star is None:
            theta_star = np.zeros(self.dim)
            theta_star[0] = 2.0
        theta_star = self.check_theta(theta_star)
        seen, modes = set(), []
        nz = np.flatnonzero(theta_star)
        if len(nz) == 1:
            for j in range(self.dim):
                v = np.zeros(self.dim)
                v[j] = theta_star[nz[0]]
                modes.append(v)
            return modes
        if self.dim > 8:
            raise ConfigError("mode catalogue limited to single-spike theta* for d > 8")
        for p in permutations(range(self.dim)):
            v = theta_star[list(p)]
            key = tuple(v)
            if key not in seen:
                seen.add(key)
                modes.append(v)
        return modes


class LogisticRegressionModel(Model):
    """Binary logistic regression.

    Dataset rows are ``[features..., 1 (bias), label]``; ``dim`` counts the
    bias. The prior is uniform unless ``prior_precision`` is given, in which
    case it is N(0, I/prior_precision).
    """

    name = "logistic"

    def __init__(self, dim: int, prior_precision: float | None = None):
        self.dim = dim
        self.prior_precision = prior_precision

    def params(self) -> dict:
        return {"dim": self.dim, "prior_precision": self.prior_precision}

    def _split(self, x):
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim + 1:
            raise ConfigError(f"logistic rows need {self.dim + 1} columns, got {x.shape[1]}")
        return x[:, :-1], x[:, -1]

    def loglik(self, theta, x):
        feats, y = self._split(x)
        z = feats @ theta
        return y * z - np.logaddexp(0.0, z)

    def grad_loglik(self, theta, x):
        feats, y = self._split(x)
        p = 0.5 * (1.0 + np.tanh(0.5 * (feats @ theta)))
        return (y - p)[:, None] * feats

    def log_prior(self, theta):
        if self.prior_precision is None:
            return 0.0
        return float(-0.5 * self.prior_precision * theta @ theta)

    def grad_log_prior(self, theta):
        if self.prior_precision is None:
            return np.zeros(self.dim)
        return -self.prior_precision * theta

    def predict_proba(self, theta, x):
        feats = np.atleast_2d(x)[:, : self.dim]
        return 0.5 * (1.0 + np.tanh(0.5 * (feats @ theta)))

    def generate(self, theta_star, n, rng, feature_scale: float = 1.0, design: str = "bernoulli"):
        """Synthetic data whose true log-odds are theta*.[x, 1].

        ``design="bernoulli"`` draws Gaussian features and labels
        ~ Bernoulli(sigmoid(theta*.x)). ``design="class-conditional"`` draws a
        balanced label y and features N((2y - 1) mu, I) with
        mu = theta*[:-1] / 2; the bias of theta* must then be 0.
        """
        theta_star = self.check_theta(theta_star)
        feats = np.empty((n, self.dim))
        feats[:, -1] = 1.0
        if design == "bernoulli":
            feats[:, :-1] = feature_scale * rng.standard_normal((n, self.dim - 1))
            y = rng.random(n) < self.predict_proba(theta_star, feats)
        elif design == "class-conditional":
            if theta_star[-1] != 0.0:
                raise ConfigError("class-conditional design needs a zero bias in theta*")
            y = rng.random(n) < 0.5
            sign = np.where(y, 1.0, -1.0)[:, None]
            feats[:, :-1] = sign * (0.5 * theta_star[:-1])[None, :] + rng.standard_normal((n, self.dim - 1))
        else:
            raise ConfigError(f"unknown design {design!r}")
        return Dataset(np.column_stack([feats, y.astype(float)]), {"kind": self.name, "design": design})

    def true_modes(self, theta_star=None):
        return []


MODEL_KINDS = ("tied-means", "symmetric-mixture", "logistic")


def make_model(kind: str, **params) -> Model:
    if kind == "tied-means":
        return TiedMeansMixture(**params)
    if kind == "symmetric-mixture":
        return SymmetricMixture(**params)
    if kind == "logistic":
        return LogisticRegressionModel(**params)
    raise ConfigError(f"unsupported model kind {kind!r}; expected one of {MODEL_KINDS}")


def generate_data(kind: str | Model, theta_star, n: int, rng: np.random.Generator, **params) -> Dataset:
    """n i.i.d. draws from the model at theta*."""
    model = kind if isinstance(kind, Model) else make_model(kind, **params)
    if n < 1:
        raise ConfigError("n must be positive")
    return model.generate(theta_star, n, rng)


def true_modes(kind: str | Model, theta_star=None, **params) -> list[np.ndarray]:
    model = kind if isinstance(kind, Model) else make_model(kind, **params)
    if theta_star is None:
        return model.true_modes()
    return model.true_modes(theta_star)


# ---------------------------------------------------------------- IDX / CSV

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class ParseError(ValueError):
    pass


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def parse_idx_images(buf: bytes) -> np.ndarray:
    if len(buf) < 16:
        raise ParseError("IDX image file truncated in header")
    magic, n, rows, cols = struct.unpack(">IIII", buf[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise ParseError(f"bad IDX image magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
    need = n * rows * cols
    if len(buf) - 16 < need:
        raise ParseError(f"IDX image file truncated: need {need} pixel bytes, have {len(buf) - 16}")
    return np.frombuffer(buf, dtype=np.uint8, count=need, offset=16).reshape(n, rows * cols)


def parse_idx_labels(buf: bytes) -> np.ndarray:
    if len(buf) < 8:
        raise ParseError("IDX label file truncated in header")
    magic, n = struct.unpack(">II", buf[:8])
    if magic != IDX_LABELS_MAGIC:
        raise ParseError(f"bad IDX label magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
    if len(buf) - 8 < n:
        raise ParseError(f"IDX label file truncated: need {n} labels, have {len(buf) - 8}")
    return np.frombuffer(buf, dtype=np.uint8, count=n, offset=8)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path, rows: int, cols: int) -> None:
    images = np.asarray(images, dtype=np.uint8).reshape(len(images), rows * cols)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, len(images), rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def load_idx(images_path, labels_path, digit_a: int = 1, digit_b: int = 7) -> Dataset:
    """Two-digit binary dataset from IDX files: digit_a -> 0, digit_b -> 1.

    Pixels are scaled to [0, 1] and a bias column of ones is appended.
    """
    images = parse_idx_images(_read_bytes(images_path))
    labels = parse_idx_labels(_read_bytes(labels_path))
    if len(images) != len(labels):
        raise ParseError(f"image count {len(images)} does not match label count {len(labels)}")
    keep = (labels == digit_a) | (labels == digit_b)
    if not keep.any():
        raise ParseError(f"no examples with digits {digit_a} or {digit_b}")
    x = images[keep].astype(float) / 255.0
    y = (labels[keep] == digit_b).astype(float)
    rows = np.column_stack([x, np.ones(len(x)), y])
    return Dataset(rows, {"kind": "logistic", "source": str(images_path), "digits": [digit_a, digit_b]})


def find_mnist(split: str = "train", data_dir=None) -> tuple[Path, Path] | None:
    """Locate MNIST IDX files under ``data_dir`` or ``$MINT_DATA_DIR``."""
    root = data_dir or os.environ.get("MINT_DATA_DIR")
    if not root:
        return None
    prefix = "train" if split == "train" else "t10k"
    for suffix in ("", ".gz"):
        img = Path(root) / f"{prefix}-images-idx3-ubyte{suffix}"
        lab = Path(root) / f"{prefix}-labels-idx1-ubyte{suffix}"
        if img.exists() and lab.exists():
            return img, lab
    return None


def write_csv(data: Dataset, path, columns: Sequence[str] | None = None) -> None:
    """Write a dataset with a header row; floats use 17 significant digits."""
    pts = data.points.reshape(data.n, -1)
    if columns is None:
        columns = ["x"] if pts.shape[1] == 1 else [f"c{j}" for j in range(pts.shape[1])]
    if len(columns) != pts.shape[1]:
        raise ConfigError(f"{len(columns)} column names for {pts.shape[1]} columns")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in pts:
            w.writerow([f"{v:.17g}" for v in row])


def load_csv(path, schema: Sequence[str]) -> Dataset:
    """Read a CSV whose header must equal ``schema``; every field must parse as float."""
    schema = list(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != schema:
            raise ParseError(f"{path}: header {header} does not match schema {schema}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(schema):
                raise ParseError(f"{path}:{line_no}: expected {len(schema)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows)
    if len(schema) == 1:
        arr = arr[:, 0]
    return Dataset(arr, {"source": str(path)})
