"""Regression data with known discrimination and explanatory bias.

Each group draws explanatory and non-explanatory features from unit-covariance
Gaussians with group-specific means, and labels are

    y = w_e . x_e + w_n . x_n + w_s s + eps,   eps ~ N(0, 1).

The discrimination is then ``w_n . (mu_n+ - mu_n-) + w_s`` and the
explanatory bias ``w_e . (mu_e+ - mu_e-)``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import expit

from .data import Dataset, Task
from .errors import ConfigError


class Case(str, enum.Enum):
    DEFAULT = "default"
    IMBALANCE = "imbalance"
    DEGENERATE = "degenerate"
    INFERRED = "inferred"


def _vec(v, n, what):
    a = np.full(n, float(v)) if np.ndim(v) == 0 else np.asarray(v, dtype=float)
    if a.shape != (n,):
        raise ConfigError(f"{what} must have length {n}, got {a.shape}")
    return a


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator parameters. Scalar means/weights broadcast to constant vectors."""

    N: int = 2000
    d: int = 14
    d_e: int = 4
    r: float = 0.5
    mu_e_plus: object = 1.0
    mu_e_minus: object = 0.0
    mu_n_plus: object = 0.5
    mu_n_minus: object = 0.0
    w_e: object = 1.75
    w_n: object = 1.0
    w_s: float = 1.0
    noise_sd: float = 1.0
    seed: int = 0
    intercept: bool = True

    def __post_init__(self):
        if not (0 < self.d_e < self.d):
            raise ConfigError(f"need 0 < d_e < d, got d_e={self.d_e}, d={self.d}")
        if not (0.0 < self.r < 1.0):
            raise ConfigError(f"r must lie in (0, 1), got {self.r}")
        if self.N * self.r < 2 or self.N * (1.0 - self.r) < 2:
            raise ConfigError("each group needs at least two rows")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")
        dn = self.d - self.d_e
        for name, n in (("mu_e_plus", self.d_e), ("mu_e_minus", self.d_e), ("w_e", self.d_e),
                        ("mu_n_plus", dn), ("mu_n_minus", dn), ("w_n", dn)):
            _vec(getattr(self, name), n, name)

    def vec(self, name):
        n = self.d_e if name.endswith("_e") or "_e_" in name else self.d - self.d_e
        return _vec(getattr(self, name), n, name)

    @property
    def n_plus(self):
        return int(round(self.N * self.r))

    def to_dict(self):
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, np.ndarray):
                out[k] = v.tolist()
            elif isinstance(v, tuple):
                out[k] = list(v)
        return out


@dataclass(frozen=True)
class GroundTruth:
    discrim: float
    explanatory_bias: float

    @property
    def md(self):
        return self.discrim + self.explanatory_bias


def ground_truth(config):
    c = config
    discrim = float(c.vec("w_n") @ (c.vec("mu_n_plus") - c.vec("mu_n_minus")) + c.w_s)
    bias = float(c.vec("w_e") @ (c.vec("mu_e_plus") - c.vec("mu_e_minus")))
    return GroundTruth(discrim, bias)


def preset(case):
    """Default (N=2000, d=14, d_e=4, r=0.5) or one of the Multi MD failure cases."""
    case = Case(case)
    base = SyntheticConfig()
    if case is Case.IMBALANCE:
        return replace(base, r=0.8)
    if case is Case.DEGENERATE:
        return replace(base, d=7, d_e=2)
    if case is Case.INFERRED:
        return replace(base, mu_e_plus=1.5, mu_e_minus=0.0)
    return base


def trial_seed(seed, trial):
    """Independent per-trial seed derived from ``(seed, trial)``."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


def generate(config):
    """Draw a dataset; deterministic in ``config.seed`` (numpy PCG64)."""
    c = config
    rng = np.random.Generator(np.random.PCG64(c.seed))
    n1 = c.n_plus
    s = np.r_[np.ones(n1), np.zeros(c.N - n1)]
    s = s[rng.permutation(c.N)]
    plus = s[:, None] == 1.0
    dn = c.d - c.d_e
    Xe = rng.standard_normal((c.N, c.d_e)) + np.where(plus, c.vec("mu_e_plus"), c.vec("mu_e_minus"))
    Xn = rng.standard_normal((c.N, dn)) + np.where(plus, c.vec("mu_n_plus"), c.vec("mu_n_minus"))
    eps = c.noise_sd * rng.standard_normal(c.N)
    y = Xe @ c.vec("w_e") + Xn @ c.vec("w_n") + c.w_s * s + eps
    names = tuple(f"xe{j}" for j in range(c.d_e)) + tuple(f"xn{j}" for j in range(dn))
    ds = Dataset(
        X=np.hstack([Xe, Xn]),
        s=s,
        y=y,
        explanatory_idx=tuple(range(c.d_e)),
        task=Task.REGRESSION,
        intercept=c.intercept,
        feature_names=names,
    )
    return ds, ground_truth(c)


def oracle_propensity(config, Xe):
    """True P(S=1 | x_e) implied by the two Gaussians and the group fraction."""
    c = config
    mp, mm = c.vec("mu_e_plus"), c.vec("mu_e_minus")
    r = c.n_plus / c.N
    logit = np.log(r / (1.0 - r)) + np.asarray(Xe) @ (mp - mm) - 0.5 * (mp @ mp - mm @ mm)
    return expit(logit)


def write_sidecar(path, config, truth, csv_config=None):
    doc = {"config": config.to_dict(), "discrim": truth.discrim,
           "explanatory_bias": truth.explanatory_bias}
    if csv_config is not None:
        doc.update(csv_config.to_dict())
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    return doc
