"""Statistical battery for bit streams.

Four tests: monobit frequency, runs, chi-square over bytes, and serial
correlation. A stream that passes all four is indistinguishable from
uniform as far as this battery can tell, which is the precondition for
blaming any downstream ML difference on where the bits came from rather
than on bias in one of the generators.

Every test returns a TestReport; pass/fail is always expressed as
p_value >= significance so reports can be compared uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from randlab.errors import BadLag, GatePrecondition, TooFewBits


@dataclass(frozen=True)
class TestConfig:
    """Significance levels; chi-square is stricter because a 256-bin
    histogram is sensitive to far smaller distortions."""

    monobit_significance: float = 0.01
    runs_significance: float = 0.01
    chi_square_significance: float = 0.001
    serial_sigma: float = 4.0  # pass when |r| < serial_sigma / sqrt(n)


DEFAULT_CONFIG = TestConfig()


@dataclass(frozen=True)
class TestReport:
    test_name: str
    statistic: float
    p_value: float
    passed: bool
    n: int


# not test classes, despite the names pytest sees
TestConfig.__test__ = False
TestReport.__test__ = False


def _as_bits(bits):
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit stream must be one-dimensional")
    if len(arr) and arr.max() > 1:
        raise ValueError("bit stream may contain only 0 and 1")
    return arr


def monobit_frequency(bits, config=DEFAULT_CONFIG):
    """Is the ones/zeros balance plausible for a fair stream?

    S = sum(2b - 1), s_obs = |S| / sqrt(n), p = erfc(s_obs / sqrt(2)).
    """
    arr = _as_bits(bits)
    n = len(arr)
    if n < 100:
        raise TooFewBits(f"monobit needs >= 100 bits, got {n}")
    s = 2 * int(arr.sum()) - n
    s_obs = abs(s) / math.sqrt(n)
    p = math.erfc(s_obs / math.sqrt(2.0))
    return TestReport(
        test_name="monobit",
        statistic=s_obs,
        p_value=p,
        passed=p >= config.monobit_significance,
        n=n,
    )


def runs_test(bits, config=DEFAULT_CONFIG, monobit_report=None):
    """Count maximal runs of equal bits and compare with expectation.

    Gated on monobit: a stream that already failed the balance test
    makes the runs statistic meaningless, so this raises
    GatePrecondition instead of reporting.
    """
    arr = _as_bits(bits)
    n = len(arr)
    if n < 100:
        raise TooFewBits(f"runs needs >= 100 bits, got {n}")
    if monobit_report is None:
        monobit_report = monobit_frequency(arr, config)
    if not monobit_report.passed:
        raise GatePrecondition("runs test requires a passing monobit result")
    pi = float(arr.mean())
    v = 1 + int(np.count_nonzero(arr[1:] != arr[:-1]))
    denom = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = math.erfc(abs(v - 2.0 * n * pi * (1.0 - pi)) / denom)
    return TestReport(
        test_name="runs",
        statistic=float(v),
        p_value=p,
        passed=p >= config.runs_significance,
        n=n,
    )


def chi_square_bytes(bits, config=DEFAULT_CONFIG):
    """Histogram non-overlapping bytes into 256 bins, chi-square against
    uniform with 255 degrees of freedom."""
    arr = _as_bits(bits)
    n = len(arr)
    if n < 256 * 8 * 10:
        raise TooFewBits(f"chi-square needs >= {256 * 8 * 10} bits, got {n}")
    byte_count = n // 8
    values = np.packbits(arr[: byte_count * 8].reshape(byte_count, 8), axis=1)
    histogram = np.bincount(values.ravel(), minlength=256)
    expected = byte_count / 256.0
    chi2 = float(((histogram - expected) ** 2 / expected).sum())
    p = float(gammaincc(255 / 2.0, chi2 / 2.0))
    return TestReport(
        test_name="chi_square_bytes",
        statistic=chi2,
        p_value=p,
        passed=p >= config.chi_square_significance,
        n=n,
    )


def serial_correlation(bits, lag=1, config=DEFAULT_CONFIG):
    """Pearson correlation between the stream and its lag-shifted self.

    Pass criterion |r| < serial_sigma / sqrt(n), expressed as a p-value
    via p = erfc(|r| sqrt(n) / sqrt(2)) against the significance
    erfc(serial_sigma / sqrt(2)); the two formulations accept the same
    streams. A constant stream has no variance to correlate, which is
    reported as a failure with statistic NaN, not as an error.
    """
    arr = _as_bits(bits)
    n = len(arr)
    if n < 1000:
        raise TooFewBits(f"serial correlation needs >= 1000 bits, got {n}")
    if not isinstance(lag, int) or isinstance(lag, bool) or lag < 1:
        raise BadLag(f"lag must be a positive integer, got {lag!r}")
    if lag >= n / 10:
        raise BadLag(f"lag {lag} too large for stream of {n} bits")
    x = arr[:-lag].astype(np.float64)
    y = arr[lag:].astype(np.float64)
    x_var = x.var()
    y_var = y.var()
    if x_var == 0.0 or y_var == 0.0:
        return TestReport(
            test_name="serial_correlation",
            statistic=float("nan"),
            p_value=0.0,
            passed=False,
            n=n,
        )
    r = float(((x - x.mean()) * (y - y.mean())).mean() / math.sqrt(x_var * y_var))
    p = math.erfc(abs(r) * math.sqrt(n) / math.sqrt(2.0))
    significance = math.erfc(config.serial_sigma / math.sqrt(2.0))
    return TestReport(
        test_name="serial_correlation",
        statistic=r,
        p_value=p,
        passed=p >= significance,
        n=n,
    )


def run_battery(bits, lag=1, config=DEFAULT_CONFIG):
    """Run all four tests in a fixed order and return their reports.

    The runs test is gated on monobit; when the gate fails the battery
    still emits a runs row, marked failed with statistic NaN, so report
    files always hold exactly four rows.
    """
    arr = _as_bits(bits)
    monobit = monobit_frequency(arr, config)
    try:
        runs = runs_test(arr, config, monobit_report=monobit)
    except GatePrecondition:
        runs = TestReport(
            test_name="runs",
            statistic=float("nan"),
            p_value=0.0,
            passed=False,
            n=len(arr),
        )
    return [
        monobit,
        runs,
        chi_square_bytes(arr, config),
        serial_correlation(arr, lag=lag, config=config),
    ]


def format_report_rows(reports):
    """Render reports as `test,<name>,<n>,<statistic>,<p>,<pass>` lines."""
    rows = []
    for report in reports:
        rows.append(
            "test,{},{},{!r},{!r},{}".format(
                report.test_name,
                report.n,
                report.statistic,
                report.p_value,
                "true" if report.passed else "false",
            )
        )
    return rows


def write_reports_csv(reports, path, comment=None):
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for row in format_report_rows(reports):
            fh.write(row + "\n")
