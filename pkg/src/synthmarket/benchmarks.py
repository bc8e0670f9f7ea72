"""Recorded outputs of the original large-universe research run.

These numbers come from a run on a proprietary 433-stock daily panel
(2010-2021 train, 2022 to mid-2024 test) that this package's pipeline
reimplements. The dataset is not redistributable, so none of these values
can be regenerated here; they are kept as documented reference points for
orders of magnitude and sanity checks, not as test targets. The test suite
never asserts against them.

Formats mirror the report documents: bands are (lo, hi) covering 95% of
the per-asset or per-scenario values around the median.
"""

from __future__ import annotations

__all__ = [
    "REFERENCE_UNIVERSE",
    "REFERENCE_CLUSTERS",
    "REFERENCE_WASSERSTEIN_X1E4",
    "REFERENCE_TEMPORAL_X1E2",
    "REFERENCE_CORR_DISTANCE_X1E3",
    "REFERENCE_PORTFOLIO",
]

# Panel geometry and spectral summary of the original run.
REFERENCE_UNIVERSE = {
    "d": 433,
    "n_train": 3020,
    "n_test": 605,
    "mp_edge": 1.90,            # sigma^2 = 1 after standardization
    "n_factors": 16,            # eigenvalues above the edge
    "explained_variance": 0.589,
    "scenario_count": 100,
}

# Ward clustering of the 16 retained factors (scaled exponent 0.5) into
# three groups; labels are factor ranks by eigenvalue, 1 = market mode.
REFERENCE_CLUSTERS = {
    1: (1,),
    2: (3, 6, 12, 14, 15),
    3: (2, 4, 5, 7, 8, 9, 10, 11, 13, 16),
}
# Sliding 63-day windows over 3020 training rows gave per-cluster
# training sets of 2958, 14790 and 29580 rows respectively.
REFERENCE_TRAINING_ROWS = {1: 2958, 2: 14790, 3: 29580}

# Median 1-Wasserstein distance across the universe, scaled by 1e4,
# with the 95% band in brackets. Marginal fits used the training set.
REFERENCE_WASSERSTEIN_X1E4 = {
    "gaussian": {"in_sample": (3.19, (2.02, 6.84)), "out_of_sample": (2.69, (1.23, 7.59))},
    "student_t": {"in_sample": (0.65, (0.43, 1.24)), "out_of_sample": (2.40, (1.21, 7.21))},
    "generator": {"in_sample": (1.45, (0.79, 4.35)), "out_of_sample": (2.26, (1.07, 7.10))},
}

# Median volatility-clustering and leverage scores across assets, x1e2.
REFERENCE_TEMPORAL_X1E2 = {
    "vol_clustering": {
        "in_sample": (53.88, (0.69, 174.34)),
        "out_of_sample": (3.60, (0.0, 42.94)),
        "generator": (14.66, (0.0, 63.77)),
    },
    "leverage": {
        "in_sample": (4.69, (0.0, 14.65)),
        "out_of_sample": (2.08, (0.0, 8.77)),
        "generator": (1.16, (0.0, 4.84)),
    },
}

# Squared lower-triangle distance to the historical correlation matrix, x1e3.
REFERENCE_CORR_DISTANCE_X1E3 = {
    "one_factor": {"in_sample": 13.27, "out_of_sample": 20.98},
    "ledoit_wolf": {"in_sample": 0.04, "out_of_sample": 13.23},
    "generator": {
        "in_sample": (2.27, (0.79, 11.71)),
        "out_of_sample": (16.39, (11.60, 112.10)),
    },
}

# Equal-weighted portfolio statistics: generator median with 95% band,
# then the in-sample and out-of-sample historical values. Percent units
# where noted; VaR/ES are positive loss magnitudes.
REFERENCE_PORTFOLIO = {
    "ann_return_pct": ((19.86, (14.73, 26.19)), 19.90, 5.98),
    "ann_vol_pct": ((18.53, (15.19, 22.52)), 18.50, 17.97),
    "sharpe": ((1.09, (0.70, 1.61)), 1.08, 0.33),
    "skewness": ((-0.45, (-0.95, 0.23)), -0.57, 0.02),
    "kurtosis": ((11.40, (2.33, 30.78)), 15.89, 1.59),
    "max_drawdown_pct": ((29.48, (15.45, 44.09)), 38.00, 19.45),
    "var_95_daily_pct": ((1.71, (1.39, 2.06)), 1.66, 1.67),
    "var_95_weekly_pct": ((3.75, (2.96, 4.50)), 3.50, 4.10),
    "var_95_monthly_pct": ((5.87, (3.75, 8.34)), 5.52, 8.09),
    "var_99_daily_pct": ((3.32, (2.63, 4.13)), 3.19, 3.06),
    "var_99_weekly_pct": ((7.10, (5.28, 8.68)), 6.67, 6.64),
    "var_99_monthly_pct": ((12.90, (7.72, 20.15)), 13.09, 10.39),
    "es_95_daily_pct": ((2.80, (2.23, 3.47)), 2.77, 2.42),
    "es_95_weekly_pct": ((5.90, (4.43, 7.20)), 5.77, 5.78),
    "es_95_monthly_pct": ((10.16, (6.13, 14.73)), 10.54, 9.54),
    "es_99_daily_pct": ((4.75, (3.43, 6.54)), 4.80, 3.47),
    "es_99_weekly_pct": ((9.50, (6.83, 12.71)), 10.25, 8.72),
    "es_99_monthly_pct": ((17.32, (9.81, 27.50)), 21.96, 11.66),
    "vol_clustering_score": ((1.26, (0.34, 2.42)), 1.69, 0.43),
    "leverage_score": ((0.11, (0.06, 0.19)), 0.15, 0.11),
}
