"""Randomness checks for sifted keys.

Min-entropy uses the most-common-value estimator. The binomial balance test
is exact and two-sided. The IID screen is the binary chi-square independence
and goodness-of-fit pair plus the longest-repeated-substring collision test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import chi2

Bits = Union[str, bytes, np.ndarray, list]

Z_99 = 2.576
GOF_SEGMENTS = 10
# 4 pair cells, minus 1 for the fixed total and 1 for the estimated ones fraction
IND_DOF = 2

# minimum sample length per test
MIN_LENGTH = {"entropy": 2, "binomial": 1, "ind": 200, "gof": 100, "lrs": 1000}
P_TESTS = ("binomial", "ind", "gof", "lrs")

PASS, FAIL, NOT_RUN = "pass", "fail", "not run"


def as_bits(bits: Bits) -> np.ndarray:
    """Coerce ``"0101"``, bytes of ASCII digits, or an int sequence to a uint8 array."""
    if isinstance(bits, np.ndarray):
        arr = bits.astype(np.uint8, copy=False)
    elif isinstance(bits, (str, bytes)):
        raw = bits.encode("ascii") if isinstance(bits, str) else bits
        arr = np.frombuffer(raw, dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or (arr.size and arr.max() > 1):
        raise ValueError("bit sample must be a flat sequence over {0, 1}")
    return arr


def mcv_min_entropy(bits: Bits) -> tuple[float, float]:
    """Most-common-value min-entropy per bit and the 99% upper bound on the modal probability."""
    x = as_bits(bits)
    n = x.size
    if n < 2:
        raise ValueError("MCV estimate needs at least 2 bits")
    ones = int(x.sum())
    p_hat = max(ones, n - ones) / n
    p_upper = min(1.0, p_hat + Z_99 * math.sqrt(p_hat * (1 - p_hat) / (n - 1)))
    return -math.log2(p_upper) + 0.0, p_upper


def binomial_balance_p(bits: Bits) -> float:
    """Exact two-sided binomial p-value of the ones count under a fair coin."""
    x = as_bits(bits)
    n = x.size
    if n < 1:
        raise ValueError("empty sample")
    k = int(x.sum())
    m = max(k, n - k)
    j = np.arange(m, n + 1)
    log_terms = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1) - n * math.log(2)
    log_tail = logsumexp(log_terms)
    return float(min(1.0, math.exp(math.log(2) + log_tail)))


def _ones_fraction(x: np.ndarray) -> float:
    return float(x.mean()) if x.size else 0.0


def ind_statistic(bits: Bits) -> tuple[float, bool]:
    """Chi-square statistic over non-overlapping pairs and a degeneracy flag."""
    x = as_bits(bits)
    p1 = _ones_fraction(x)
    if p1 in (0.0, 1.0):
        return math.inf, True
    pairs = x[: 2 * (x.size // 2)].reshape(-1, 2)
    n_pairs = pairs.shape[0]
    observed = np.bincount(2 * pairs[:, 0] + pairs[:, 1], minlength=4)
    p = np.array([1 - p1, p1])
    expected = n_pairs * np.outer(p, p).ravel()
    return float(np.sum((observed - expected) ** 2 / expected)), False


def ind_test_p(bits: Bits) -> float:
    stat, degenerate = ind_statistic(bits)
    return 0.0 if degenerate else float(chi2.sf(stat, IND_DOF))


def gof_statistic(bits: Bits) -> tuple[float, bool]:
    x = as_bits(bits)
    m = x.size // GOF_SEGMENTS
    if m == 0:
        raise ValueError(f"goodness-of-fit needs at least {GOF_SEGMENTS} bits")
    seg = x[: GOF_SEGMENTS * m].reshape(GOF_SEGMENTS, m)
    p1 = _ones_fraction(seg)
    if p1 in (0.0, 1.0):
        return math.inf, True
    observed = seg.sum(axis=1)
    e = p1 * m
    return float(np.sum((observed - e) ** 2) / (e * (1 - p1))), False


def gof_test_p(bits: Bits) -> float:
    stat, degenerate = gof_statistic(bits)
    return 0.0 if degenerate else float(chi2.sf(stat, GOF_SEGMENTS - 1))


def suffix_array(x: np.ndarray) -> np.ndarray:
    """Suffix array by prefix doubling on rank pairs."""
    n = x.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = x.astype(np.int64)
    sa = np.argsort(rank, kind="stable")
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        second[: n - k] = rank[k:] if k < n else second[:0]
        sa = np.lexsort((second, rank))
        r, s = rank[sa], second[sa]
        new_group = np.empty(n, dtype=np.int64)
        new_group[0] = 0
        new_group[1:] = (r[1:] != r[:-1]) | (s[1:] != s[:-1])
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[sa] = np.cumsum(new_group)
        rank = new_rank
        if rank[sa[-1]] == n - 1 or k >= n:
            return sa
        k *= 2


def lcp_array(x: np.ndarray, sa: np.ndarray) -> np.ndarray:
    """Kasai's algorithm; ``lcp[i]`` is the common prefix of ``sa[i-1]`` and ``sa[i]``."""
    n = x.size
    rank = np.empty(n, dtype=np.int64)
    rank[sa] = np.arange(n)
    s = x.tolist()
    sa_l = sa.tolist()
    rank_l = rank.tolist()
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank_l[i]
        if r == 0:
            h = 0
            continue
        j = sa_l[r - 1]
        while i + h < n and j + h < n and s[i + h] == s[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.asarray(lcp, dtype=np.int64)


def longest_repeat_length(bits: Bits) -> int:
    """Length of the longest substring that occurs at least twice (overlaps allowed)."""
    x = as_bits(bits)
    if x.size < 2:
        return 0
    return int(lcp_array(x, suffix_array(x)).max())


def lrs_statistic(bits: Bits) -> tuple[float, int]:
    """P-value and longest repeat length ``W``.

    The p-value is the chance that some pair among the ``C(L-W+1, 2)``
    length-``W`` windows collides under the observed collision probability.
    """
    x = as_bits(bits)
    n = x.size
    w = longest_repeat_length(x)
    p1 = _ones_fraction(x)
    p_col = (1 - p1) ** 2 + p1 ** 2
    pairs = math.comb(n - w + 1, 2)
    q = p_col ** w
    if q >= 1.0:
        return 1.0, w
    # 1 - (1 - q)^pairs
    return float(-math.expm1(pairs * math.log1p(-q))), w


def lrs_test_p(bits: Bits) -> float:
    return lrs_statistic(bits)[0]


@dataclass(frozen=True)
class Thresholds:
    binomial: float = 0.000005
    ind: float = 0.001
    gof: float = 0.001
    lrs: float = 0.001

    @classmethod
    def with_iid(cls, binomial: float = 0.000005, iid: float = 0.001) -> Thresholds:
        return cls(binomial=binomial, ind=iid, gof=iid, lrs=iid)

    def to_dict(self) -> dict:
        return {t: getattr(self, t) for t in P_TESTS}


@dataclass(frozen=True)
class BitSample:
    bits: str
    source_label: str = ""

    def __post_init__(self):
        if not self.bits:
            raise ValueError("bit sample is empty")
        if set(self.bits) - {"0", "1"}:
            raise ValueError("bit sample must contain only '0' and '1'")


@dataclass
class ValidationReport:
    length: int
    source_label: str
    thresholds: Thresholds
    entropy_per_bit: Optional[float] = None
    p_upper: Optional[float] = None
    binomial_p: Optional[float] = None
    ind_p: Optional[float] = None
    gof_p: Optional[float] = None
    lrs_p: Optional[float] = None
    lrs_length: Optional[int] = None
    degenerate: list[str] = field(default_factory=list)
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v != FAIL for v in self.verdicts.values())

    def p_value(self, test: str) -> Optional[float]:
        return getattr(self, f"{test}_p")

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "source_label": self.source_label,
            "entropy_per_bit": self.entropy_per_bit,
            "p_upper": self.p_upper,
            "binomial_p": self.binomial_p,
            "ind_p": self.ind_p,
            "gof_p": self.gof_p,
            "lrs_p": self.lrs_p,
            "lrs_length": self.lrs_length,
            "degenerate": list(self.degenerate),
            "thresholds": self.thresholds.to_dict(),
            "verdicts": dict(self.verdicts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ValidationReport:
        d = dict(d)
        d["thresholds"] = Thresholds(**d["thresholds"])
        return cls(**d)


_P_FUNCS = {"binomial": binomial_balance_p, "ind": ind_test_p, "gof": gof_test_p}


def validate(sample: BitSample, thresholds: Thresholds = Thresholds()) -> ValidationReport:
    x = as_bits(sample.bits)
    report = ValidationReport(x.size, sample.source_label, thresholds)
    if x.size >= MIN_LENGTH["entropy"]:
        report.entropy_per_bit, report.p_upper = mcv_min_entropy(x)
    for test in P_TESTS:
        if x.size < MIN_LENGTH[test]:
            report.verdicts[test] = NOT_RUN
            continue
        if test == "lrs":
            p, report.lrs_length = lrs_statistic(x)
        else:
            p = _P_FUNCS[test](x)
        setattr(report, f"{test}_p", p)
        report.verdicts[test] = PASS if p >= getattr(thresholds, test) else FAIL
    p1 = _ones_fraction(x)
    if p1 in (0.0, 1.0):
        report.degenerate = [t for t in ("ind", "gof") if report.verdicts[t] != NOT_RUN]
    return report


def read_bits(path: Union[str, Path], fmt: str = "ascii") -> str:
    """Decode a bitstream file.

    ``ascii``: one ``'0'``/``'1'`` per character, whitespace ignored.
    ``binary``: 8 bits per byte, most significant bit first.
    """
    data = Path(path).read_bytes()
    if fmt == "ascii":
        text = b"".join(data.split()).decode("ascii", errors="replace")
        if set(text) - {"0", "1"}:
            raise ValueError(f"{path}: ASCII bit file contains characters other than 0/1")
        bits = text
    elif fmt == "binary":
        bits = "".join(map(str, np.unpackbits(np.frombuffer(data, dtype=np.uint8)).tolist()))
    else:
        raise ValueError(f"unknown bit file format {fmt!r}")
    if not bits:
        raise ValueError(f"{path}: no bits decoded")
    return bits
