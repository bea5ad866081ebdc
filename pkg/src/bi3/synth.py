"""Seeded two-dimensional Gaussian benchmark families.

``overlap``: minority ~ N((dist, 0), S_pos), majority ~ N((0, 0), S_neg), with
N_p = 100 and N_n = 100 * ir. ``noise``: the same at dist = 2, followed by
swapping the labels of an equal number of samples from each class.
"""
from dataclasses import dataclass, field

import numpy as np

from bi3.dataset import Dataset, FeatureSchema
from bi3.errors import PreconditionError
from bi3.measures import bi3_value
from bi3.neighbors import DEFAULT_METRIC

FAMILIES = {"overlap": 0, "noise": 1}
IR_GRID = (5, 10, 50)
DIST_GRID = (0.0, 1.0, 2.0, 3.0)
NOISE_GRID = (0.0, 0.1, 0.2, 0.3)
NOISE_DIST = 2.0
N_POS = 100
DRAWS = 10
MAX_COV_TRIES = 1000


@dataclass(frozen=True)
class CovarianceSpec:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (2, 2) or not np.array_equal(m, m.T):
            raise PreconditionError("covariance must be a symmetric 2x2 matrix")
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise PreconditionError("covariance is not positive definite") from None
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "cholesky", chol)

    def to_list(self):
        return self.matrix.tolist()


def is_positive_definite(m):
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def covariance_from_draw(s11, s22, s12):
    return np.array([[s11, s12], [s12, s22]]) + 0.1 * np.eye(2)


def random_covariance(rng, max_tries=MAX_COV_TRIES):
    """Draw ``[[s11, s12], [s12, s22]] + 0.1 I`` with s11, s22 ~ U[0,1] and
    s12 ~ U[-1,1], redrawing until the matrix is positive definite."""
    for _ in range(max_tries):
        s11, s22 = rng.uniform(0.0, 1.0, 2)
        s12 = rng.uniform(-1.0, 1.0)
        m = covariance_from_draw(s11, s22, s12)
        if is_positive_definite(m):
            return CovarianceSpec(m)
    raise RuntimeError(f"no positive definite covariance after {max_tries} draws")


@dataclass(frozen=True)
class SyntheticSpec:
    family: str
    ir: int
    dist: float = NOISE_DIST
    noise: float = 0.0
    n_pos: int = N_POS
    seed: object = 0
    cov_pos: CovarianceSpec = None
    cov_neg: CovarianceSpec = None
    flipped: dict = field(default_factory=dict)

    def to_dict(self):
        seed = self.seed
        if isinstance(seed, np.random.SeedSequence):
            seed = {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
        elif isinstance(seed, (list, tuple)):
            seed = [int(s) for s in seed]
        return {
            "family": self.family, "ir": self.ir, "dist": self.dist, "noise": self.noise,
            "n_pos": self.n_pos, "n_neg": self.n_pos * self.ir, "seed": seed,
            "cov_pos": self.cov_pos.to_list() if self.cov_pos is not None else None,
            "cov_neg": self.cov_neg.to_list() if self.cov_neg is not None else None,
            "flipped": self.flipped,
        }


def _gaussian(rng, mean, cov, n):
    z = rng.standard_normal((n, 2))
    return np.asarray(mean, dtype=np.float64) + z @ cov.cholesky.T


def _generate(rng, ir, dist, cov_pos, cov_neg, n_pos):
    if dist < 0:
        raise PreconditionError("dist must be non-negative")
    if ir < 1 or n_pos < 1:
        raise PreconditionError("need ir >= 1 and n_pos >= 1")
    n_neg = int(round(n_pos * ir))
    X_neg = _gaussian(rng, (0.0, 0.0), cov_neg, n_neg)
    X_pos = _gaussian(rng, (dist, 0.0), cov_pos, n_pos)
    X = np.vstack([X_pos, X_neg])
    y = np.concatenate([np.ones(n_pos, dtype=np.int8), -np.ones(n_neg, dtype=np.int8)])
    return X, y


def _as_rng(seed):
    return np.random.default_rng(seed)


def gen_overlap(ir, dist, cov_pos, cov_neg, seed, n_pos=N_POS):
    """Minority rows come first, then majority rows."""
    X, y = _generate(_as_rng(seed), ir, dist, cov_pos, cov_neg, n_pos)
    spec = SyntheticSpec("overlap", ir, float(dist), 0.0, n_pos, seed, cov_pos, cov_neg)
    return Dataset(X, y, FeatureSchema.numeric(2), name=f"overlap_ir{ir}_dist{dist:g}",
                   meta={"spec": spec.to_dict()})


def gen_noise(ir, noise_rate, cov_pos, cov_neg, seed, n_pos=N_POS):
    """Flip ``floor(noise_rate * n_pos)`` labels in each direction."""
    if not 0.0 <= noise_rate < 0.5:
        raise PreconditionError("noise rate must lie in [0, 0.5)")
    rng = _as_rng(seed)
    X, y = _generate(rng, ir, NOISE_DIST, cov_pos, cov_neg, n_pos)
    m = int(np.floor(noise_rate * n_pos + 1e-9))
    n_neg = len(y) - n_pos
    if m > n_pos or m > n_neg:
        raise PreconditionError("flip count exceeds class size")
    to_neg = np.sort(rng.choice(n_pos, m, replace=False)) if m else np.empty(0, dtype=np.int64)
    to_pos = np.sort(n_pos + rng.choice(n_neg, m, replace=False)) if m else np.empty(0, dtype=np.int64)
    y[to_neg] = -1
    y[to_pos] = 1
    flipped = {"to_negative": to_neg.tolist(), "to_positive": to_pos.tolist()}
    spec = SyntheticSpec("noise", ir, NOISE_DIST, float(noise_rate), n_pos, seed, cov_pos, cov_neg, flipped)
    return Dataset(X, y, FeatureSchema.numeric(2), name=f"noise_ir{ir}_noise{noise_rate:g}",
                   meta={"spec": spec.to_dict()})


def covariance_draws(seed, family, draws=DRAWS):
    """Covariance pairs shared by every cell of one family's grid."""
    code = FAMILIES[family]
    out = []
    for t in range(draws):
        rng = np.random.default_rng([seed, code, t])
        out.append((random_covariance(rng), random_covariance(rng)))
    return out


@dataclass(frozen=True)
class GridCell:
    family: str
    ir: int
    level: float  # dist for overlap, noise rate for noise
    draw: int


def suite(family, seed=0, draws=DRAWS, irs=IR_GRID, levels=None, n_pos=N_POS):
    """Yield ``(GridCell, Dataset)`` for every cell and covariance draw."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {tuple(FAMILIES)}")
    code = FAMILIES[family]
    if levels is None:
        levels = DIST_GRID if family == "overlap" else NOISE_GRID
    covs = covariance_draws(seed, family, draws)
    for ir in irs:
        for li, level in enumerate(levels):
            for t, (cp, cn) in enumerate(covs):
                ss = np.random.SeedSequence([seed, code, ir, li, t])
                if family == "overlap":
                    ds = gen_overlap(ir, level, cp, cn, ss, n_pos)
                else:
                    ds = gen_noise(ir, level, cp, cn, ss, n_pos)
                ds = Dataset(ds.X, ds.y, ds.schema, ds.class_names, name=f"{ds.name}_draw{t}",
                             meta=ds.meta)
                yield GridCell(family, ir, level, t), ds


def averaged_grid(family, seed=0, draws=DRAWS, k0=5, metric=None, irs=IR_GRID, levels=None):
    """Mean BI³ over covariance draws for each (ir, level) cell."""
    metric = DEFAULT_METRIC if metric is None else metric
    acc = {}
    for cell, ds in suite(family, seed, draws, irs, levels):
        acc.setdefault((cell.ir, cell.level), []).append(bi3_value(ds, k0, metric))
    return {key: float(np.mean(v)) for key, v in acc.items()}
