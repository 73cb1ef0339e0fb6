"""Initial distributions over critical parameters.

Each distribution can evaluate its density and CDF, integrate itself over
grid cells (for projecting onto a PDE grid) and draw samples from a
caller-owned :class:`numpy.random.Generator` (for seeding a population).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .errors import DomainError

MAX_REJECTION_ATTEMPTS = 1_000_000


class InitialDistribution:
    dim: int = 1

    def pdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def cell_mass(self, edges: list[np.ndarray]) -> np.ndarray:
        """Probability mass of every grid cell delimited by per-axis ``edges``."""
        raise NotImplementedError


class Univariate(InitialDistribution):
    dim = 1
    support: tuple[float, float]

    def cdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def cell_mass(self, edges):
        (e,) = edges
        return np.diff(self.cdf(np.asarray(e, dtype=float)))

    @property
    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class TruncNormal(Univariate):
    """Normal ``N(mu, sigma^2)`` conditioned on ``[lo, hi]``."""

    mu: float
    sigma: float
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got [{self.lo!r}, {self.hi!r}]")
        if not self._z > 0.0:
            raise DomainError(f"N({self.mu}, {self.sigma}^2) has no mass on [{self.lo}, {self.hi}]")

    @property
    def support(self):
        return (self.lo, self.hi)

    @property
    def _bounds(self):
        return (self.lo - self.mu) / self.sigma, (self.hi - self.mu) / self.sigma

    @property
    def _z(self) -> float:
        a, b = self._bounds
        return float(special.ndtr(b) - special.ndtr(a))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * self.sigma * self._z)
        return np.where((x >= self.lo) & (x <= self.hi), dens, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        a, _ = self._bounds
        return (special.ndtr((x - self.mu) / self.sigma) - special.ndtr(a)) / self._z

    @property
    def mean(self):
        a, b = self._bounds
        phi = lambda u: math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        return self.mu + self.sigma * (phi(a) - phi(b)) / self._z

    def sample(self, rng, size=None):
        """Rejection from the untruncated normal.

        Raises once more than ``MAX_REJECTION_ATTEMPTS`` candidates per
        requested sample have been drawn.
        """
        m = 1 if size is None else int(size)
        out = np.empty(m)
        filled = 0
        drawn = 0
        accept = max(self._z, 1e-300)
        while filled < m:
            if drawn >= MAX_REJECTION_ATTEMPTS * m:
                raise DomainError(
                    f"rejection sampling of {self} exceeded {MAX_REJECTION_ATTEMPTS} attempts per sample"
                )
            need = m - filled
            # aim for all remaining slots in one draw, at most ~1M normals at a time
            batch = int(min(2**20, MAX_REJECTION_ATTEMPTS * m - drawn, max(need, math.ceil(1.2 * need / accept))))
            cand = rng.normal(self.mu, self.sigma, size=batch)
            ok = cand[(cand >= self.lo) & (cand <= self.hi)]
            take = min(ok.size, need)
            out[filled:filled + take] = ok[:take]
            filled += take
            drawn += batch
        return out[0] if size is None else out


@dataclass(frozen=True)
class Beta(Univariate):
    """Beta(a, b) on [0, 1]."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise DomainError(f"Beta parameters must be positive, got ({self.a!r}, {self.b!r})")

    support = (0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        xs = np.where(inside, x, 0.5)
        with np.errstate(divide="ignore"):
            logp = (
                special.xlogy(self.a - 1.0, xs)
                + special.xlog1py(self.b - 1.0, -xs)
                - special.betaln(self.a, self.b)
            )
        return np.where(inside, np.exp(logp), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return special.betainc(self.a, self.b, x)

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    def sample(self, rng, size=None):
        m = 1 if size is None else int(size)
        ga = rng.gamma(self.a, size=m)
        gb = rng.gamma(self.b, size=m)
        out = ga / (ga + gb)
        return out[0] if size is None else out


@dataclass(frozen=True)
class ProductOfIndependent(InitialDistribution):
    """Independent product of univariate marginals, one per coordinate."""

    components: tuple[Univariate, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 2:
            raise DomainError("a product distribution needs at least two components")
        if not all(isinstance(c, Univariate) for c in comps):
            raise DomainError("product components must be univariate distributions")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return len(self.components)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"point has {x.shape[-1]} coordinates, distribution has {self.dim}")
        out = np.ones(x.shape[:-1])
        for j, c in enumerate(self.components):
            out = out * c.pdf(x[..., j])
        return out

    def cell_mass(self, edges):
        if len(edges) != self.dim:
            raise DomainError(f"grid has {len(edges)} axes, distribution has {self.dim}")
        mass = np.ones(())
        for c, e in zip(self.components, edges):
            mass = np.multiply.outer(mass, c.cell_mass([e]))
        return mass

    def sample(self, rng, size=None):
        cols = [c.sample(rng, 1 if size is None else size) for c in self.components]
        out = np.stack(cols, axis=-1)
        return out[0] if size is None else out


def pdf(dist: InitialDistribution, x):
    return dist.pdf(x)


def sample(dist: InitialDistribution, rng: np.random.Generator, size: int | None = None):
    return dist.sample(rng, size)
