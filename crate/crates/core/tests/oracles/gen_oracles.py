#!/usr/bin/env python3
"""Independent high-precision reference values for the statistics tests.

Everything here is evaluated with mpmath at 50 decimal digits and shares no
code with the Rust implementation. Re-running the script regenerates the
tables under ../data/ byte-for-byte.

    python3 crates/core/tests/oracles/gen_oracles.py
"""

import os

import mpmath as mp
import numpy as np

mp.mp.dps = 50

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")


def t_cdf(t, df):
    t = mp.mpf(t)
    df = mp.mpf(df)
    x = df / (df + t * t)
    tail = mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True) / 2
    return 1 - tail if t > 0 else tail


def two_tailed(t, df):
    t = abs(mp.mpf(t))
    df = mp.mpf(df)
    x = df / (df + t * t)
    return mp.betainc(df / 2, mp.mpf(1) / 2, 0, x, regularized=True)


def williams(r12, r13, r23, n):
    r12, r13, r23, n = map(mp.mpf, (r12, r13, r23, n))
    det = 1 - r12**2 - r13**2 - r23**2 + 2 * r12 * r13 * r23
    rbar = (r13 + r23) / 2
    denom = 2 * ((n - 1) / (n - 3)) * det + rbar**2 * (1 - r12) ** 3
    t = (r13 - r23) * mp.sqrt(((n - 1) * (1 + r12)) / denom)
    return t, two_tailed(t, n - 3)


def students_t(a, b):
    a = [mp.mpf(repr(v)) for v in a]
    b = [mp.mpf(repr(v)) for v in b]
    na, nb = len(a), len(b)
    ma = mp.fsum(a) / na
    mb = mp.fsum(b) / nb
    ssa = mp.fsum((v - ma) ** 2 for v in a)
    ssb = mp.fsum((v - mb) ** 2 for v in b)
    df = na + nb - 2
    pooled = (ssa + ssb) / df
    t = (ma - mb) / mp.sqrt(pooled * (mp.mpf(1) / na + mp.mpf(1) / nb))
    return t, two_tailed(t, df)


def fmt(x):
    return mp.nstr(x, 25, min_fixed=-5, max_fixed=5)


def write_t_cdf_grid():
    ts = [k / 2 for k in range(-20, 21)]
    with open(os.path.join(DATA, "t_cdf_grid.tsv"), "w") as f:
        f.write("df\tt\tcdf\n")
        for df in range(1, 201):
            for t in ts:
                f.write(f"{df}\t{t!r}\t{fmt(t_cdf(t, df))}\n")


def write_williams_grid():
    rng = np.random.default_rng(20200601)
    rows = [(0.3, 0.7, 0.5, 100)]
    while len(rows) < 50:
        r12, r13, r23 = (round(float(v), 4) for v in rng.uniform(-0.95, 0.95, 3))
        n = int(rng.integers(5, 1500))
        det = 1 - r12**2 - r13**2 - r23**2 + 2 * r12 * r13 * r23
        if det <= 1e-3:
            continue
        rows.append((r12, r13, r23, n))
    with open(os.path.join(DATA, "williams_grid.tsv"), "w") as f:
        f.write("r12\tr13\tr23\tn\tt\tp\n")
        for r12, r13, r23, n in rows:
            t, p = williams(r12, r13, r23, n)
            f.write(f"{r12!r}\t{r13!r}\t{r23!r}\t{n}\t{fmt(t)}\t{fmt(p)}\n")


def write_students_t_grid():
    rng = np.random.default_rng(7)
    cases = [(rng.normal(0.0, 1.0, 50), rng.normal(1.0, 1.0, 50))]
    while len(cases) < 50:
        ka, kb = (int(v) for v in rng.integers(2, 60, 2))
        shift = float(rng.uniform(-1.5, 1.5))
        sa, sb = (float(v) for v in rng.uniform(0.2, 3.0, 2))
        cases.append((rng.normal(0.0, sa, ka), rng.normal(shift, sb, kb)))
    with open(os.path.join(DATA, "students_t_grid.tsv"), "w") as f:
        f.write("a\tb\tt\tp\n")
        for a, b in cases:
            a = [round(float(v), 6) for v in a]
            b = [round(float(v), 6) for v in b]
            t, p = students_t(a, b)
            sa = ",".join(repr(v) for v in a)
            sb = ",".join(repr(v) for v in b)
            f.write(f"{sa}\t{sb}\t{fmt(t)}\t{fmt(p)}\n")


if __name__ == "__main__":
    os.makedirs(DATA, exist_ok=True)
    write_t_cdf_grid()
    write_williams_grid()
    write_students_t_grid()
