"""Hand-rolled artifact files matching the documented annealab schemas."""

import json

import numpy as np
import pytest


def _write(path, header, rows):
    lines = [header] + [",".join(str(c) for c in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    root = tmp_path_factory.mktemp("artifacts")
    rng = np.random.default_rng(7)

    gam = np.round(np.linspace(2.4, 0.0, 13), 6)
    for seed in (0, 1):
        rows = [
            (t, g, 20.0, round(0.02 + 0.06 * g + 0.001 * seed, 6),
             round(0.9 - 0.02 * t, 6), round(0.8 - 0.02 * t, 6),
             round(0.5 + 0.01 * t, 6), round(0.05 + 0.002 * t, 6))
            for t, g in enumerate(gam)
        ]
        _write(root / f"sqa_y4_seed{seed}.csv",
               "step,gamma,beta,energy_density,q1_lag1,q1_lag2,transverse,acc_rate",
               rows)

    _write(root / "theory.csv",
           "gamma,q0,q1,p0hat,p1hat,E,T,H,phi,converged",
           [(g, 0.1, 0.2, 0.3, 0.4, round(0.019 + 0.061 * g, 6),
             0.9, 0.1, -0.5, 1) for g in gam])

    g_fine = np.round(np.linspace(2.5, 0.0, 600), 6)
    osc = 0.05 + 0.08 * g_fine + 0.01 * np.sin(40 * g_fine) \
        + 0.002 * rng.standard_normal(g_fine.size)
    _write(root / "exact_qa.csv", "gamma,E_mean",
           [(g, round(e, 6)) for g, e in zip(g_fine, osc)])

    for name, scale in (("gaps_original.csv", 1.0), ("gaps_randomized.csv", 0.3)):
        _write(root / name, "gamma,H0,H1",
               [(g, round(-2.0 - g, 6), round(-2.0 - g + scale * (0.2 + g), 6))
                for g in np.round(np.arange(0.8, 0.19, -0.1), 6)])

    lams = np.round(np.linspace(0.2, 3.0, 8), 6)
    _write(root / "bp_energy.csv", "lambda,distance,value,converged,iters",
           [(l, round(0.5 - 0.15 * l, 6), round(0.3 * np.exp(-l), 6), 1, 20)
            for l in lams])
    _write(root / "bp_entropy.csv", "lambda,distance,value,converged,iters",
           [(l, round(0.5 - 0.15 * l, 6), round(0.4 - 0.1 * l, 6), 1, 35)
            for l in lams])

    d = np.arange(16)
    phi_w = np.where(d == 0, -np.inf, 0.3 * np.log1p(d) - 0.02 * d)
    _write(root / "local_entropy.csv", "d,phi_w,phi_sol",
           [(int(k), w, round(0.25 * np.log1p(k) - 0.02 * k, 6))
            for k, w in zip(d, phi_w)])

    (root / "stats.json").write_text(json.dumps({"n_sol": 3}) + "\n")
    return root


@pytest.fixture()
def spec_file(tmp_path):
    def make(obj):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(obj))
        return str(path)
    return make
