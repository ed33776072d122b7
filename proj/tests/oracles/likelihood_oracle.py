"""Straight-line likelihood recursion, independent of the library.

Writes tests/data/likelihood_cases.json: 20 random (model, params) cases over n=500 returns drawn
from a 64-bit LCG that the C++ test regenerates bit for bit.
"""
import json
import math
from pathlib import Path

import numpy as np
from scipy import integrate, special, stats

N = 500
MASK = (1 << 64) - 1


def lcg_stream(seed):
    state = seed & MASK
    while True:
        state = (6364136223846793005 * state + 1442695040888963407) & MASK
        yield (state >> 11) * 2.0 ** -53


def make_data(seed, cols):
    u = lcg_stream(seed)
    returns = [0.02 * (next(u) - 0.5) for _ in range(N)]
    x = [[float(math.floor(next(u) * 4.0)) for _ in range(cols)] for _ in range(N)]
    return returns, x


def logpdf(law, shape, z):
    if law == "N":
        return stats.norm.logpdf(z)
    if law == "T":
        s = math.sqrt((shape - 2.0) / shape)
        return stats.t.logpdf(z / s, shape) - math.log(s)
    scale = math.sqrt(special.gamma(1.0 / shape) / special.gamma(3.0 / shape))
    return stats.gennorm.logpdf(z, shape, scale=scale)


def abs_moment(law, shape):
    if law == "N":
        return math.sqrt(2.0 / math.pi)
    if law == "T":
        s = math.sqrt((shape - 2.0) / shape)
        val, _ = integrate.quad(lambda v: 2.0 * v * s * stats.t.pdf(v, shape), 0, np.inf, epsabs=1e-14, epsrel=1e-13)
        return val
    scale = math.sqrt(special.gamma(1.0 / shape) / special.gamma(3.0 / shape))
    return scale * special.gamma(2.0 / shape) / special.gamma(1.0 / shape)


def loglik(dyn, law, p, returns, x):
    r0 = sum(returns) / len(returns)
    var = sum((r - r0) ** 2 for r in returns) / len(returns)
    m = abs_moment(law, p["shape"])
    prev_r, prev_e, prev_s2 = r0, 0.0, var
    total = 0.0
    for t, r in enumerate(returns):
        if t == 0:
            s2 = var
        else:
            news = sum(d * v for d, v in zip(p["delta"], x[t]))
            if dyn == "GARCH":
                s2 = p["omega"] + news + p["alpha"] * prev_e ** 2 + p["beta"] * prev_s2
            elif dyn == "GJR":
                lev = p["gamma"] * prev_e ** 2 if prev_e <= 0 else 0.0
                s2 = p["omega"] + news + p["alpha"] * prev_e ** 2 + lev + p["beta"] * prev_s2
            else:
                z = prev_e / math.sqrt(prev_s2)
                g = p["alpha"] * z + p["gamma"] * (abs(z) - m)
                s2 = math.exp(p["omega"] + news + g + p["beta"] * math.log(prev_s2))
        e = r - p["mu"] - p["phi"] * prev_r
        total += logpdf(law, p["shape"], e / math.sqrt(s2)) - 0.5 * math.log(s2)
        prev_r, prev_e, prev_s2 = r, e, s2
    return float(total)


def main():
    rng = np.random.default_rng(20240601)
    cols_of = {"N": 0, "IV": 2, "SE": 3}
    cases = []
    for k in range(20):
        dyn = ["GARCH", "EGARCH", "GJR"][k % 3]
        law = ["N", "T", "GED"][(k // 3) % 3]
        reg = ["N", "IV", "SE"][(k // 9 + k) % 3]
        cols = cols_of[reg]
        seed = int(rng.integers(1, 2**62))
        returns, x = make_data(seed, cols)
        var = 0.02 ** 2 / 12.0
        p = {"mu": float(rng.uniform(-1e-4, 1e-4)), "phi": float(rng.uniform(-0.2, 0.2)), "gamma": 0.0, "shape": 0.0}
        if dyn == "EGARCH":
            p["beta"] = float(rng.uniform(0.8, 0.97))
            p["alpha"] = float(rng.uniform(-0.1, 0.1))
            p["gamma"] = float(rng.uniform(0.05, 0.2))
            p["omega"] = (1.0 - p["beta"]) * math.log(var)
            p["delta"] = [float(v) for v in rng.uniform(-0.05, 0.05, cols)]
        else:
            p["alpha"] = float(rng.uniform(0.02, 0.15))
            p["beta"] = float(rng.uniform(0.6, 0.8))
            if dyn == "GJR":
                p["gamma"] = float(rng.uniform(0.0, 0.1))
            p["omega"] = var * (1.0 - p["alpha"] - p["beta"] - 0.5 * p["gamma"])
            p["delta"] = [float(v) for v in rng.uniform(0.0, 1e-6, cols)]
        if law == "T":
            p["shape"] = float(rng.uniform(4.0, 12.0))
        elif law == "GED":
            p["shape"] = float(rng.uniform(1.0, 2.5))
        cases.append({"dynamics": dyn, "law": law, "regressors": reg, "seed": seed, "params": p,
                      "loglik": loglik(dyn, law, p, returns, x)})
    out = Path(__file__).resolve().parents[1] / "data" / "likelihood_cases.json"
    out.write_text(json.dumps({"n": N, "cases": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main()
