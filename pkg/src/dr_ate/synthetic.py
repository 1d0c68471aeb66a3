"""Synthetic consumption models with known main effects and treatment effects.

Random streams
--------------
All randomness comes from numpy's counter-based Philox generator. A stream is
keyed by ``SeedSequence([seed, tag])`` where ``tag`` names its purpose
(covariates, treatment, noise), so the three never share draws. Monte Carlo
replication ``r`` under master seed ``m`` uses ``seed = split_seed(m, r)``.
Draws are sequential within a stream, so sample ``i`` sees the same values
whatever the total sample size.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .data_io import Dataset
from .errors import DimensionMismatch, POutOfRange, UnknownFamily, ValidationError

COVARIATES, TREATMENT, NOISE = 1, 2, 3

# family code -> {coefficient name: shape}, with "d" standing for the dimension
_COEFS = {
    "14a": {"alpha1": (), "alpha2": ()},
    "14b": {"alpha0": (), "alpha2": ()},
    "28": {"gamma": ("d",), "alpha": ("d",)},
    "29a": {"gamma": ("d",), "theta": ("d",)},
    "29b": {"alpha": ("d",), "theta": ("d",), "theta_pairs": ("d", "d")},
    "29c": {"theta0": (), "theta": ("d",), "theta_pairs": ("d", "d")},
    "29d": {"theta": ("d",)},
    "const_effect": {"alpha": ("d",), "g0": ()},
}
_SCALAR_FAMILIES = ("14a", "14b")
_ALIASES = {
    "linearboth_14a": "14a",
    "constantf_14b": "14b",
    "nonlinearf_28": "28",
    "model29a": "29a",
    "model29b": "29b",
    "model29c": "29c",
    "model29d": "29d",
    "nonlinearf_constg": "const_effect",
}
FAMILIES = tuple(_COEFS)


def family_code(name) -> str:
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in _COEFS:
        raise UnknownFamily(f"unknown model family {name!r}; known: {', '.join(FAMILIES)}")
    return key


def split_seed(seed: int, *path: int) -> int:
    """Derive an independent 64-bit seed from ``seed`` and an index path."""
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1, np.uint64)[0])


def stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(tag)])))


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _quartic_root(x, w):
    return np.abs((x**3) @ w) ** 0.25


def _quadratic(x, theta, pairs):
    off = pairs - np.diag(np.diag(pairs))
    return (x**2) @ theta + np.einsum("ij,jk,ik->i", x, off, x)


@dataclass(frozen=True, eq=False)
class SyntheticModelSpec:
    """Generative model ``y = f(x) + g(x) t + noise`` with ``x ~ N(mu, I)``, ``t ~ Bernoulli(p)``.

    Effects by family::

        14a           f = alpha1 x                g = alpha2 x
        14b           f = alpha0                  g = alpha2 x
        28            f = |sum x_j^3 gamma_j|^1/4 g = x' alpha
        29a           f = x' gamma                g = x' theta
        29b           f = |sum x_j^3 alpha_j|^1/4 g = sum x_j^2 theta_j + sum_{j!=k} x_j x_k theta_jk
        29c           f = theta0                  g = (as 29b)
        29d           f = |sum x_j^3 theta_j|^1/4 g = x' theta
        const_effect  f = |sum x_j^3 alpha_j|^1/4 g = g0
    """

    family: str
    d: int
    coefficients: dict
    covariate_mean: np.ndarray
    p: float
    noise_sd: float = 0.0
    seed: int | None = None
    name: str = field(default="")

    def __post_init__(self):
        fam = family_code(self.family)
        d = int(self.d)
        if d < 1:
            raise DimensionMismatch("d must be at least 1")
        if fam in _SCALAR_FAMILIES and d != 1:
            raise DimensionMismatch(f"family {fam} is defined for d = 1 only")
        shapes = _COEFS[fam]
        coefs = {}
        for key, shape in shapes.items():
            if key not in self.coefficients:
                raise DimensionMismatch(f"family {fam} needs coefficient {key!r}")
            want = tuple(d if s == "d" else s for s in shape)
            arr = np.array(self.coefficients[key], dtype=np.float64)
            if arr.shape != want and not (want == () and arr.size == 1):
                try:
                    arr = arr.reshape(want)
                except ValueError:
                    raise DimensionMismatch(
                        f"coefficient {key!r} has shape {arr.shape}, expected {want}"
                    ) from None
            arr = arr.reshape(want)
            arr.setflags(write=False)
            coefs[key] = arr
        extra = set(self.coefficients) - set(shapes)
        if extra:
            raise DimensionMismatch(f"unexpected coefficients for {fam}: {sorted(extra)}")
        mu = np.array(self.covariate_mean, dtype=np.float64).reshape(-1)
        if mu.size == 1 and d > 1:
            mu = np.full(d, mu[0])
        if mu.size != d:
            raise DimensionMismatch(f"covariate_mean has {mu.size} entries for d = {d}")
        mu.setflags(write=False)
        if not 0.0 < self.p < 1.0:
            raise POutOfRange(f"p must lie in (0, 1), got {self.p}")
        if not self.noise_sd >= 0.0:
            raise ValidationError("noise_sd must be non-negative")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "covariate_mean", mu)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "noise_sd", float(self.noise_sd))
        if self.seed is not None:
            object.__setattr__(self, "seed", _check_seed(self.seed))

    def with_p(self, p: float) -> "SyntheticModelSpec":
        return replace(self, p=p)

    def effects(self, x):
        """Main effect ``f`` and treatment effect ``g`` for covariates ``x`` (n, d)."""
        c = self.coefficients
        fam = self.family
        xs = x[:, 0]
        if fam == "14a":
            return c["alpha1"] * xs, c["alpha2"] * xs
        if fam == "14b":
            return np.full(len(x), float(c["alpha0"])), c["alpha2"] * xs
        if fam == "28":
            return _quartic_root(x, c["gamma"]), x @ c["alpha"]
        if fam == "29a":
            return x @ c["gamma"], x @ c["theta"]
        if fam == "29b":
            return _quartic_root(x, c["alpha"]), _quadratic(x, c["theta"], c["theta_pairs"])
        if fam == "29c":
            return (
                np.full(len(x), float(c["theta0"])),
                _quadratic(x, c["theta"], c["theta_pairs"]),
            )
        if fam == "29d":
            return _quartic_root(x, c["theta"]), x @ c["theta"]
        return _quartic_root(x, c["alpha"]), np.full(len(x), float(c["g0"]))

    # -- flat key-value config -------------------------------------------

    def to_config(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        sec = {
            "family": self.family,
            "d": str(self.d),
            "mu": _fmt(self.covariate_mean),
            "p": repr(self.p),
            "noise_sd": repr(self.noise_sd),
        }
        if self.seed is not None:
            sec["seed"] = str(self.seed)
        if self.name:
            sec["name"] = self.name
        for key, arr in self.coefficients.items():
            sec[f"coef.{key}"] = _fmt(arr)
        cp["model"] = sec
        from io import StringIO

        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_config(), encoding="utf-8")

    @classmethod
    def from_config(cls, text: str) -> "SyntheticModelSpec":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read_string(text)
            sec = cp["model"]
        except (configparser.Error, KeyError) as exc:
            raise ValidationError(f"bad model config: {exc}") from None
        try:
            fam = family_code(sec["family"])
            d = int(sec["d"])
            coefs = {}
            for key, value in sec.items():
                if key.startswith("coef."):
                    arr = _parse_list(value)
                    name = key[5:]
                    shape = _COEFS[fam].get(name, ())
                    coefs[name] = arr.reshape(d, d) if shape == ("d", "d") else arr
            return cls(
                family=fam,
                d=d,
                coefficients=coefs,
                covariate_mean=_parse_list(sec.get("mu", "1")),
                p=float(sec["p"]),
                noise_sd=float(sec.get("noise_sd", "0")),
                seed=int(sec["seed"]) if "seed" in sec else None,
                name=sec.get("name", ""),
            )
        except KeyError as exc:
            raise ValidationError(f"model config missing key {exc}") from None
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad model config value: {exc}") from None

    @classmethod
    def load(cls, path) -> "SyntheticModelSpec":
        return cls.from_config(Path(path).read_text(encoding="utf-8"))


def _fmt(arr) -> str:
    return ", ".join(repr(float(v)) for v in np.asarray(arr).reshape(-1))


def _parse_list(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace("\n", ",").split(",") if v.strip()])


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    dataset: Dataset
    f_true: np.ndarray
    g_true: np.ndarray
    noise: np.ndarray
    ate_true: float
    seed: int


def assign_treatment(n: int, p: float, seed: int) -> np.ndarray:
    """``n`` independent Bernoulli(p) draws as a 0/1 float vector."""
    if not 0.0 < p < 1.0:
        raise POutOfRange(f"p must lie in (0, 1), got {p}")
    if n < 2:
        raise ValidationError("n must be at least 2")
    return (stream(_check_seed(seed), TREATMENT).random(n) < p).astype(np.float64)


def draw(spec: SyntheticModelSpec, n: int, seed: int):
    """Raw arrays ``(x, t, f, g, noise, y)`` without building a :class:`Dataset`."""
    x = spec.covariate_mean + stream(seed, COVARIATES).standard_normal((n, spec.d))
    t = (stream(seed, TREATMENT).random(n) < spec.p).astype(np.float64)
    f, g = spec.effects(x)
    if spec.noise_sd > 0.0:
        noise = spec.noise_sd * stream(seed, NOISE).standard_normal(n)
    else:
        noise = np.zeros(n)
    y = f + g * t + noise
    return x, t, f, g, noise, y


def generate(spec: SyntheticModelSpec, n: int, seed: int, sample_index=None) -> SyntheticDataset:
    """Draw ``n`` samples.

    ``sample_index`` (a sequence of ``n`` distinct non-negative integers)
    selects which stream positions to use, so a permuted index gives the
    permuted dataset.
    """
    seed = _check_seed(seed)
    if n < spec.d + 2:
        raise ValidationError(f"n = {n} is too small for d = {spec.d}")
    if sample_index is None:
        x, t, f, g, noise, y = draw(spec, n, seed)
    else:
        idx = np.asarray(sample_index, dtype=np.int64)
        if idx.shape != (n,) or idx.min() < 0 or np.unique(idx).size != n:
            raise ValidationError("sample_index must hold n distinct non-negative integers")
        parts = draw(spec, int(idx.max()) + 1, seed)
        x, t, f, g, noise, y = (a[idx] for a in parts)
    names = tuple(f"x{j + 1}" for j in range(spec.d))
    ds = Dataset(y, t, x, names)
    for a in (f, g, noise):
        a.setflags(write=False)
    return SyntheticDataset(ds, f, g, noise, float(g.mean()), seed)


DEFAULT_FAMILIES = ("14a", "14b", "29a", "29b", "29c", "29d")


def load_default_spec(family: str) -> SyntheticModelSpec:
    """The shipped configuration for ``family`` (coefficients frozen in ``models/``)."""
    code = family_code(family)
    text = resources.files("dr_ate").joinpath("models", f"{code}.ini").read_text(encoding="utf-8")
    return SyntheticModelSpec.from_config(text)


def default_specs():
    """The six canonical configurations as ``(spec, p)`` pairs."""
    out = []
    for fam in DEFAULT_FAMILIES:
        spec = load_default_spec(fam)
        out.append((spec, spec.p))
    return out
