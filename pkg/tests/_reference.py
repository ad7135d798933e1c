"""Published reference values used by the acceptance and regression tests."""

X0 = [[0.84, 0.3266], [0.3266, 0.22]]

# threshold -> P(Y > threshold) at t = 1
TAIL_PROBABILITIES = {"x11": (1.0, 0.0910), "s": (1.3, 0.0584), "x12": (0.435, 0.0544)}

# one date, t = 1; order follows the bundled table2 config
TABLE2 = [1.0613, 1.1293, 1.3729, 1.8892, 1.0807, 1.1715, 1.3320, 1.7803, 1.3628, 1.8635,
          1.4871]

# zero-dependence process: value and percentage-point difference to TABLE2
TABLE3 = [(1.0613, 0.00), (1.1293, 0.00), (1.3558, -1.71), (1.8408, -4.84), (1.1033, 2.25),
          (1.2214, 4.99), (1.2813, -5.07), (1.6466, -13.37), (1.4982, 1.11)]
TABLE3_BASE = [0, 1, 2, 3, 4, 5, 6, 7, 10]   # matching TABLE2 rows

# two dates t0 = 1, t1 = 1.5 (as printed); differences in percent
TABLE4 = [(1.0405, -2.00), (1.0944, -3.19), (1.3406, -2.41), (1.8160, -4.03),
          (1.0594, -1.97), (1.1346, -3.14), (1.3011, -2.32), (1.7127, -3.80)]

FIGURE3_T1 = [1.5, 5, 20, 50, 100, 200]

ALLOCATION = {
    "dependent": {"z_star": 0.438, "p": (1.031, 0.269), "ratio": 3.836},
    "zero_dependence": {"z_star": 0.085, "p": (0.965, 0.335), "ratio": 2.877},
}

GH_TABLE7 = {"tce": 2.4649, "tv": 0.8749, "ts": 2.6444}

DANISH = {
    "beta": 3.24,
    "varsigma_inf": [[7.09, 4.65], [4.65, 9.60]],
    "implied_correlation": 0.44,
    # model column: x11, x11^2, x22, x22^2, s, s^2 at the 0.95 quantile
    "model": [74.09, 5732.04, 100.40, 10534.68, 145.47, 21632.63],
}
