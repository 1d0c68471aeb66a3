"""Regenerate the shipped model configs in src/dr_ate/models/.

Coefficients the literature leaves unspecified are drawn once from a seeded
standard Gaussian (``COEF_SEED``) in a fixed order and written out; the files,
not this script, are the reference. Rerunning reproduces them exactly.
"""

from pathlib import Path

import numpy as np

from dr_ate.synthetic import SyntheticModelSpec

COEF_SEED = 0
D = 3
OUT = Path(__file__).resolve().parents[1] / "src" / "dr_ate" / "models"


def pairs(rng, d):
    m = rng.standard_normal((d, d))
    np.fill_diagonal(m, 0.0)
    return m


def main():
    rng = np.random.default_rng(COEF_SEED)
    specs = [
        SyntheticModelSpec("14a", 1, {"alpha1": 6.0, "alpha2": 20.0}, [1.0], 0.9,
                           name="linear main and treatment effects"),
        SyntheticModelSpec("14b", 1, {"alpha0": 20.0, "alpha2": 20.0}, [1.0], 0.25,
                           name="constant main effect, linear treatment effect"),
        SyntheticModelSpec("28", D, {"gamma": rng.standard_normal(D), "alpha": rng.standard_normal(D)},
                           [1.0] * D, 0.5, name="quartic-root main effect, linear treatment effect"),
        SyntheticModelSpec("29a", D, {"gamma": rng.standard_normal(D), "theta": rng.standard_normal(D)},
                           [1.0] * D, 0.8, name="linear"),
        SyntheticModelSpec("29b", D, {"alpha": rng.standard_normal(D), "theta": rng.standard_normal(D),
                                      "theta_pairs": pairs(rng, D)},
                           [1.0] * D, 0.9, name="nonlinear"),
        SyntheticModelSpec("29c", D, {"theta0": rng.standard_normal(), "theta": rng.standard_normal(D),
                                      "theta_pairs": pairs(rng, D)},
                           [1.0] * D, 0.75, name="constant main effect, quadratic treatment effect"),
        SyntheticModelSpec("29d", D, {"theta": rng.standard_normal(D)},
                           [1.0] * D, 0.1, name="nonlinear main effect, linear treatment effect"),
        SyntheticModelSpec("const_effect", D, {"alpha": rng.standard_normal(D), "g0": 1.0},
                           [1.0] * D, 0.5, name="quartic-root main effect, constant treatment effect"),
    ]
    OUT.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        (OUT / f"{spec.family}.ini").write_text(spec.to_config(), encoding="utf-8")
        print("wrote", spec.family)


if __name__ == "__main__":
    main()
