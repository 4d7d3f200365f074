import numpy as np
import pytest

from qregress import (
    LossFunction,
    RegressionData,
    RngSeed,
    build_true_pair,
    diagonal_operator,
    eigen_pmf,
    grid_oracle,
    maximally_mixed,
)


@pytest.fixture(scope="session")
def reference_model():
    """dim-3 model used across suites: spectrum (1, 2, 3), state I/3, slope 2."""
    operator = diagonal_operator([1.0, 2.0, 3.0])
    state = maximally_mixed(3)
    pair = build_true_pair(operator, 2.0)
    pmf = eigen_pmf(state, pair.decomposition)
    return operator, state, pair, pmf


def random_symmetric_entries(dim: int, seed: int) -> np.ndarray:
    raw = RngSeed(seed).generator().standard_normal((dim, dim))
    return (raw + raw.T) / 2.0


LOSS_CYCLE = (
    LossFunction("square"),
    LossFunction("absolute"),
    LossFunction("huber", c=1.345),
    LossFunction("lq", q=1.5),
    LossFunction("quantile", alpha=0.25),
)


def random_instance(seed: int, max_n: int = 200):
    """Seeded (loss, data, beta_true) triple with continuous noise.

    Continuous errors keep the piecewise-linear losses away from flat
    minimizing segments, so solvers and oracles agree pointwise.
    """
    gen = RngSeed(seed, 900).generator()
    loss = LOSS_CYCLE[seed % len(LOSS_CYCLE)]
    n = int(gen.integers(5, max_n + 1))
    lambdas = gen.standard_normal(n)
    lambdas[np.abs(lambdas) < 1e-3] += 1.0
    beta = float(gen.uniform(-3.0, 3.0))
    noise = gen.standard_normal(n) if seed % 2 else gen.laplace(0.0, 1.0, n)
    return loss, RegressionData(lambdas, beta * lambdas + noise), beta


def ratio_bracket(data: RegressionData) -> tuple[float, float]:
    """Interval certain to contain the argmin of any convex loss objective.

    Past the largest response/predictor ratio every residual pushes the
    objective up, so the minimizer lies inside the ratio hull.
    """
    ratios = data.mus[data.lambdas != 0.0] / data.lambdas[data.lambdas != 0.0]
    return float(ratios.min()) - 1.0, float(ratios.max()) + 1.0


def refined_grid_argmin(loss, data, lo, hi, step):
    """Grid argmin at resolution ``step`` by window refinement.

    Each pass keeps the one grid cell that convexity guarantees to
    contain the true argmin, so the composition stays an independent
    brute-force oracle at fine resolution without a huge single grid.
    """
    coarse = max(step, (hi - lo) / 2000.0)
    while True:
        beta = grid_oracle(loss, data, lo, hi, coarse)
        if coarse <= step:
            return beta
        lo, hi = beta - coarse, beta + coarse
        coarse = max(step, coarse / 1000.0)
