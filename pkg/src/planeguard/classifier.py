"""Ridge-regression tampering detector solved with LSMR.

Features are z-scored per column (population std, floored at 1e-8 so
constant columns survive), labels are -1 authentic / +1 tampered with
the class-imbalance offset folded into the intercept, and the damped
least-squares problem min ||Z w - (y - offset)||^2 + lambda ||w||^2 is
solved iteratively with damp = sqrt(lambda). Scores are thresholded at
zero; an exact tie counts as tampered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidTrainingSetError,
)
from .fileio import atomic_write_text

STD_FLOOR = 1e-8
LABEL_AUTHENTIC = -1.0
LABEL_TAMPERED = 1.0
LABEL_VALUES = {"authentic": LABEL_AUTHENTIC, "tampered": LABEL_TAMPERED}

STOP_REASONS = (
    "x = 0 is the exact solution",
    "Ax - b is small per atol and btol",
    "the least-squares residual is small per atol",
    "condition number estimate exceeds the limit",
    "Ax - b is small at machine precision",
    "the least-squares residual is small at machine precision",
    "condition number estimate exceeds machine precision",
    "iteration limit reached",
)


@dataclass
class LsmrResult:
    """Solution plus the solver's state at termination."""

    x: np.ndarray
    istop: int
    iterations: int
    residual_norm: float
    normal_residual_norm: float
    matrix_norm: float
    condition: float
    solution_norm: float

    @property
    def converged(self) -> bool:
        return self.istop in (0, 1, 2, 4, 5)

    @property
    def reason(self) -> str:
        return STOP_REASONS[self.istop]


def _sym_ortho(a, b):
    """Stable Givens rotation (c, s, r) with r = hypot(a, b)."""
    if b == 0:
        return math.copysign(1.0, a), 0.0, abs(a)
    if a == 0:
        return 0.0, math.copysign(1.0, b), abs(b)
    if abs(b) > abs(a):
        tau = a / b
        s = math.copysign(1.0, b) / math.sqrt(1 + tau * tau)
        return s * tau, s, b / s
    tau = b / a
    c = math.copysign(1.0, a) / math.sqrt(1 + tau * tau)
    return c, c * tau, a / c


def lsmr_solve(A, b, damp=0.0, atol=1e-8, btol=1e-8, max_iter=None, conlim=1e8) -> LsmrResult:
    """Minimize ||A x - b||^2 + damp^2 ||x||^2 by Golub-Kahan bidiagonalization.

    Dense-matrix variant of the standard LSMR recurrences: two matrix
    products per iteration, all state in a handful of scalars, so the
    normal matrix is never formed.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise InvalidInputError(f"incompatible shapes A{A.shape} and b{b.shape}")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise InvalidInputError("matrix and vector must be finite")
    if damp < 0 or atol < 0 or btol < 0:
        raise InvalidArgumentError("damp, atol, and btol must be >= 0")
    m, n = A.shape
    if max_iter is None:
        max_iter = min(m, n) + max(m, n)
    if max_iter < 1:
        raise InvalidArgumentError("max_iter must be >= 1")

    x = np.zeros(n)
    beta = float(np.linalg.norm(b))
    u = b / beta if beta > 0 else b.copy()
    if beta > 0:
        v = A.T @ u
        alpha = float(np.linalg.norm(v))
    else:
        v = np.zeros(n)
        alpha = 0.0
    if alpha > 0:
        v /= alpha

    zetabar = alpha * beta
    if zetabar == 0:
        # b = 0 or A.T b = 0: x = 0 is already the minimizer
        return LsmrResult(x, 0, 0, beta, 0.0, 0.0, 1.0, 0.0)

    normb = beta
    alphabar = alpha
    rho = rhobar = cbar = 1.0
    sbar = 0.0
    h = v.copy()
    hbar = np.zeros(n)

    # ||r|| estimation state
    betadd = beta
    betad = 0.0
    rhodold = 1.0
    tautildeold = 0.0
    thetatilde = 0.0
    zeta = 0.0
    d = 0.0

    # ||A|| and cond(A) estimation state
    norma2 = alpha * alpha
    maxrbar = 0.0
    minrbar = 1e100
    norma = math.sqrt(norma2)
    conda = 1.0
    normx = 0.0
    normr = beta
    normar = zetabar
    ctol = 1.0 / conlim if conlim > 0 else 0.0
    istop = 0
    itn = 0

    while itn < max_iter:
        itn += 1

        u = A @ v - alpha * u
        beta = float(np.linalg.norm(u))
        if beta > 0:
            u /= beta
            v = A.T @ u - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0:
                v /= alpha

        # fold the damping term into the bidiagonal factor
        chat, shat, alphahat = _sym_ortho(alphabar, damp)

        rhoold = rho
        c, s, rho = _sym_ortho(alphahat, beta)
        thetanew = s * alpha
        alphabar = c * alpha

        rhobarold = rhobar
        zetaold = zeta
        thetabar = sbar * rho
        rhotemp = cbar * rho
        cbar, sbar, rhobar = _sym_ortho(cbar * rho, thetanew)
        zeta = cbar * zetabar
        zetabar = -sbar * zetabar

        hbar = h - (thetabar * rho / (rhoold * rhobarold)) * hbar
        x = x + (zeta / (rho * rhobar)) * hbar
        h = v - (thetanew / rho) * h

        # residual-norm recurrences
        betaacute = chat * betadd
        betacheck = -shat * betadd
        betahat = c * betaacute
        betadd = -s * betaacute

        thetatildeold = thetatilde
        ctildeold, stildeold, rhotildeold = _sym_ortho(rhodold, thetabar)
        thetatilde = stildeold * rhobar
        rhodold = ctildeold * rhobar
        betad = -stildeold * betad + ctildeold * betahat

        tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold
        taud = (zeta - thetatilde * tautildeold) / rhodold
        d = d + betacheck * betacheck
        normr = math.sqrt(d + (betad - taud) ** 2 + betadd * betadd)

        norma2 = norma2 + beta * beta
        norma = math.sqrt(norma2)
        norma2 = norma2 + alpha * alpha

        maxrbar = max(maxrbar, rhobarold)
        if itn > 1:
            minrbar = min(minrbar, rhobarold)
        conda = max(maxrbar, rhotemp) / min(minrbar, rhotemp)

        normar = abs(zetabar)
        normx = float(np.linalg.norm(x))

        test1 = normr / normb
        test2 = normar / (norma * normr) if norma * normr != 0 else math.inf
        test3 = 1.0 / conda
        t1 = test1 / (1 + norma * normx / normb)
        rtol = btol + atol * norma * normx / normb

        if itn >= max_iter:
            istop = 7
        if 1 + test3 <= 1:
            istop = 6
        if 1 + test2 <= 1:
            istop = 5
        if 1 + t1 <= 1:
            istop = 4
        if test3 <= ctol:
            istop = 3
        if test2 <= atol:
            istop = 2
        if test1 <= rtol:
            istop = 1
        if istop > 0:
            break

    return LsmrResult(x, istop, itn, normr, normar, norma, conda, normx)


# ---------------------------------------------------------------------------
# labeled data and the ridge model


@dataclass(frozen=True)
class LabeledFeatureSet:
    """Feature matrix with aligned -1/+1 labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidInputError(f"feature matrix must be 2-D, got ndim={X.ndim}")
        if y.shape != (X.shape[0],):
            raise InvalidInputError(
                f"{X.shape[0]} feature rows but {y.shape[0] if y.ndim == 1 else '?'} labels"
            )
        if not np.isfinite(X).all():
            raise InvalidInputError("features must be finite")
        if not np.isin(y, (LABEL_AUTHENTIC, LABEL_TAMPERED)).all():
            raise InvalidInputError("labels must be -1 (authentic) or +1 (tampered)")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]


def labels_to_values(names) -> np.ndarray:
    """Map label names to the -1/+1 convention."""
    out = np.empty(len(names))
    for i, name in enumerate(names):
        if name not in LABEL_VALUES:
            raise InvalidInputError(f"unknown label {name!r}, expected one of {sorted(LABEL_VALUES)}")
        out[i] = LABEL_VALUES[name]
    return out


def label_name(value: float) -> str:
    return "tampered" if value > 0 else "authentic"


@dataclass(frozen=True)
class RidgeModel:
    """Frozen result of a training run."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    label_offset: float
    lam: float


def train(data: LabeledFeatureSet, lam: float = 1.0, atol: float = 1e-8,
          btol: float = 1e-8, max_iter: int | None = None) -> RidgeModel:
    """Fit the regularized regression on z-scored features."""
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    y = data.labels
    n_pos = int((y == LABEL_TAMPERED).sum())
    n_neg = int((y == LABEL_AUTHENTIC).sum())
    if n_pos < 2 or n_neg < 2:
        raise InvalidTrainingSetError(
            f"need at least 2 samples per class, got {n_neg} authentic / {n_pos} tampered"
        )
    X = data.features
    means = X.mean(axis=0)
    stds = np.maximum(X.std(axis=0), STD_FLOOR)
    Z = (X - means) / stds
    offset = float(y.mean())
    if max_iter is None:
        max_iter = 4 * X.shape[1]
    result = lsmr_solve(Z, y - offset, damp=math.sqrt(lam), atol=atol, btol=btol,
                        max_iter=max_iter)
    return RidgeModel(result.x, means, stds, offset, float(lam))


def decision_scores(model: RidgeModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.weights.shape[0]:
        raise InvalidInputError(
            f"feature dimension {X.shape[1]} does not match the model ({model.weights.shape[0]})"
        )
    return ((X - model.means) / model.stds) @ model.weights + model.label_offset


def predict(model: RidgeModel, features) -> tuple[float, str]:
    """Score one feature vector; ties at zero count as tampered."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1:
        raise InvalidInputError(f"expected a single feature vector, got ndim={features.ndim}")
    score = float(decision_scores(model, features)[0])
    return score, ("tampered" if score >= 0 else "authentic")


def evaluate(model: RidgeModel, data: LabeledFeatureSet) -> float:
    """Accuracy of the sign rule against the -1/+1 labels."""
    if len(data) == 0:
        raise InvalidInputError("empty evaluation set")
    scores = decision_scores(model, data.features)
    predicted = np.where(scores >= 0, LABEL_TAMPERED, LABEL_AUTHENTIC)
    return float((predicted == data.labels).mean())


def cv_lambda(data: LabeledFeatureSet, grid=(0.01, 0.1, 1.0, 10.0, 100.0),
              folds: int = 5, seed: int = 0):
    """Pick lambda by stratified K-fold accuracy; ties go to the smaller."""
    if folds < 2:
        raise InvalidArgumentError("need at least 2 folds")
    y = data.labels
    fold_of = np.empty(len(data), dtype=np.int64)
    rng = np.random.default_rng(seed)
    for value in (LABEL_AUTHENTIC, LABEL_TAMPERED):
        idx = np.flatnonzero(y == value)
        if len(idx) < 2 * folds:
            raise InvalidTrainingSetError(
                f"need at least {2 * folds} samples per class for {folds}-fold selection"
            )
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % folds
    table = []
    for lam in grid:
        accs = []
        for k in range(folds):
            tr = fold_of != k
            model = train(LabeledFeatureSet(data.features[tr], y[tr]), lam=lam)
            accs.append(evaluate(model, LabeledFeatureSet(data.features[~tr], y[~tr])))
        table.append((float(lam), float(np.mean(accs))))
    best = max(table, key=lambda row: (row[1], -row[0]))
    return best[0], table


# ---------------------------------------------------------------------------
# model file round trip


def save_model(path, model: RidgeModel) -> None:
    """Plain-text model file with full float round-trip precision."""
    dim = model.weights.shape[0]
    lines = [f"dim {dim}", f"lambda {model.lam:.17g}", f"label_offset {model.label_offset:.17g}"]
    for name, values in (("means", model.means), ("stds", model.stds), ("weights", model.weights)):
        lines.append(name)
        lines.extend(f"{v:.17g}" for v in values)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path) -> RidgeModel:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc

    def fail(ln, msg):
        raise DataFormatError(f"{path}:{ln}: {msg}")

    if len(lines) < 6 or not lines[0].startswith("dim "):
        fail(1, "expected 'dim N' on the first line")
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise DataFormatError(f"{path}:1: expected 'dim N' on the first line") from None
    scalars = {}
    for ln, key in ((2, "lambda"), (3, "label_offset")):
        parts = lines[ln - 1].split()
        if len(parts) != 2 or parts[0] != key:
            fail(ln, f"expected '{key} VALUE'")
        try:
            scalars[key] = float(parts[1])
        except ValueError:
            fail(ln, f"bad {key} value {parts[1]!r}")
    sections = {}
    ln = 3
    for name in ("means", "stds", "weights"):
        ln += 1
        if ln > len(lines) or lines[ln - 1] != name:
            fail(ln, f"expected section header '{name}'")
        values = []
        for _ in range(dim):
            ln += 1
            if ln > len(lines):
                fail(ln, f"section '{name}' truncated (expected {dim} values)")
            try:
                values.append(float(lines[ln - 1]))
            except ValueError:
                fail(ln, f"bad float {lines[ln - 1]!r}")
        sections[name] = np.asarray(values)
    if any(line.strip() for line in lines[ln:]):
        fail(ln + 1, "trailing content after the weights section")
    return RidgeModel(sections["weights"], sections["means"], sections["stds"],
                      scalars["label_offset"], scalars["lambda"])
