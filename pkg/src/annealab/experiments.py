"""Config-driven experiment orchestration and artifact emission.

A run is described by a flat JSON config (a kind plus its parameters),
validated against a documented schema before any compute happens.  Every
job derives its random state from the base seed through named streams,
writes artifacts to per-job files (created atomically), and the run ends
with a manifest recording the resolved config, seeds, package version and
per-job status.  Re-running from the manifest reproduces every CSV byte
for byte.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bp, mc, model, quantum, theory
from .rng import generator_for

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised for malformed configs; maps to exit code 2 at the CLI."""


# --- config schema -----------------------------------------------------------

@dataclass(frozen=True)
class Field:
    typ: str
    required: bool = False
    default: object = None
    help: str = ""


_MC_COMMON = {
    "n": Field("int", True, help="number of spins"),
    "p": Field("int", help="number of patterns (or give alpha)"),
    "alpha": Field("float", help="pattern density P/N (or give p)"),
    "variant": Field("str", default="r0", help="cost variant: r0 | r1"),
    "tau": Field("int", default=1, help="schedule length multiplier"),
    "n_seeds": Field("int", default=1, help="independent samples"),
    "gamma0": Field("float", default=2.5, help="initial field"),
    "gamma1": Field("float", default=0.0, help="final field"),
    "flips_per_site": Field("float", default=1e4,
                            help="attempts per site per tau unit"),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "theory": {
        "alpha": Field("float", True, help="pattern density"),
        "beta": Field("float", True, help="inverse temperature"),
        "variant": Field("str", default="r0"),
        "gammas": Field("list[float]", True, help="field grid"),
        "nodes": Field("int", default=96, help="quadrature density"),
    },
    "sqa-sweep": {
        **_MC_COMMON,
        "y": Field("int|list[int]", True, help="Trotter slices (one or more)"),
        "beta": Field("float", True, help="inverse temperature"),
    },
    "committee-sweep": {
        **_MC_COMMON,
        "y": Field("int|list[int]", True, help="Trotter slices (one or more)"),
        "beta": Field("float", True, help="inverse temperature"),
        "k_units": Field("int", True, help="committee units (odd unit size)"),
    },
    "sa-sweep": {
        **_MC_COMMON,
        "beta_quantum": Field("float", True,
                              help="quantum beta the schedule shadows"),
        "betas": Field("list[float]",
                       help="explicit ladder; skips the theory map"),
        "nodes": Field("int", default=48,
                       help="quadrature density for the map"),
    },
    "bp-profile": {
        "n": Field("int", True),
        "p": Field("int", True),
        "seed_index": Field("int", default=0, help="instance stream index"),
        "lambdas": Field("list[float]", True, help="coupling grid"),
        "reference": Field("str", default="ones",
                           help="ones | mode (enumerated mode solution)"),
        "profile": Field("str", default="entropy", help="entropy | energy"),
        "tol": Field("float", default=1e-8),
        "max_iter": Field("int", default=2000),
        "damping": Field("float", default=0.5),
    },
    "exact-qa": {
        "n": Field("int", True),
        "p": Field("int", True),
        "seed_index": Field("int", default=0),
        "variant": Field("str", default="r0"),
        "gamma_start": Field("float", default=5.0),
        "delta_gamma": Field("float", default=1e-3),
        "delta_t": Field("float", default=0.2),
        "krylov_dim": Field("int", default=10),
        "record_every": Field("int", default=100),
        "save_state": Field("bool", default=True,
                            help="write final amplitudes next to the trace"),
    },
    "gaps": {
        "n": Field("int", True),
        "p": Field("int", True),
        "seed_index": Field("int", default=0),
        "variant": Field("str", default="r0"),
        "gammas": Field("list[float]", True),
        "tables": Field("str", default="both",
                        help="original | randomized | both"),
        "tol": Field("float", default=0.0, help="eigensolver tolerance"),
    },
    "stats": {
        "n": Field("int", True),
        "p": Field("int", True),
        "seed_index": Field("int", default=0),
        "variant": Field("str", default="r0"),
        "state_file": Field("str", help="reuse a saved exact-qa state"),
        "gamma_start": Field("float", default=5.0),
        "delta_gamma": Field("float", default=1e-3),
        "delta_t": Field("float", default=0.2),
        "krylov_dim": Field("int", default=10),
        "sqa_y": Field("int", help="run SQA for the rank column"),
        "sqa_tau": Field("int", default=1),
        "sqa_beta": Field("float", default=20.0),
        "entropy_w": Field("float", default=0.9,
                           help="weight for the local-entropy curves"),
    },
    "select-samples": {
        "n": Field("int", default=21),
        "p": Field("int", default=17),
        "pool": Field("int", default=450),
        "min_solutions": Field("int", default=21),
        "fast_tau": Field("int", default=1),
        "sqa_y": Field("int", default=512),
        "sqa_tau": Field("int", default=1),
        "beta": Field("float", default=20.0),
        "variant": Field("str", default="r0"),
        "max_keep": Field("int", help="stop after this many kept samples"),
        "nodes": Field("int", default=48),
    },
}

KINDS = tuple(SCHEMAS)

_CHECKERS = {
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "list[float]": lambda v: isinstance(v, list) and len(v) > 0
    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v),
    "list[int]": lambda v: isinstance(v, list) and len(v) > 0
    and all(isinstance(x, int) and not isinstance(x, bool) for x in v),
}
_CHECKERS["int|list[int]"] = (
    lambda v: _CHECKERS["int"](v) or _CHECKERS["list[int]"](v))


def validate_params(kind: str, params: dict) -> dict:
    """Check fields against the schema and fill defaults; raises ConfigError."""
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    schema = SCHEMAS[kind]
    out = {}
    for name, value in params.items():
        if name not in schema:
            raise ConfigError(f"unknown field {name!r} for kind {kind!r}")
        if not _CHECKERS[schema[name].typ](value):
            raise ConfigError(
                f"field {name!r} for kind {kind!r} must be {schema[name].typ}")
        out[name] = value
    for name, spec in schema.items():
        if name not in out:
            if spec.required:
                raise ConfigError(
                    f"missing required field {name!r} for kind {kind!r}")
            if spec.default is not None:
                out[name] = spec.default
    if kind in ("sqa-sweep", "sa-sweep", "committee-sweep"):
        if ("p" in out) == ("alpha" in out):
            raise ConfigError(
                f"kind {kind!r} needs exactly one of 'p' or 'alpha'")
    return out


def schema_text(kind: str | None = None) -> str:
    """Human-readable JSON description of the config schema."""
    def one(k):
        return {
            name: {"type": s.typ, "required": s.required,
                   **({"default": s.default} if s.default is not None else {}),
                   **({"help": s.help} if s.help else {})}
            for name, s in SCHEMAS[k].items()
        }
    body = {"_reserved": {"kind": "one of " + " | ".join(KINDS),
                          "seed": "base seed (int, default 0)",
                          "out": "output directory"}}
    if kind is None:
        body.update({k: one(k) for k in KINDS})
    elif kind in SCHEMAS:
        body[kind] = one(kind)
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    return json.dumps(body, indent=2)


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    base_seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self):
        self.params = validate_params(self.kind, dict(self.params))

    @classmethod
    def from_dict(cls, raw: dict, seed: int | None = None,
                  out_dir: str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if "config" in raw and "schema" in raw:   # a manifest: re-run it
            raw = raw["config"]
        raw = dict(raw)
        kind = raw.pop("kind", None)
        if kind is None:
            raise ConfigError("missing required field 'kind'")
        file_seed = raw.pop("seed", 0)
        file_out = raw.pop("out", "runs")
        if not isinstance(file_seed, int) or isinstance(file_seed, bool):
            raise ConfigError("field 'seed' must be an integer")
        if not isinstance(file_out, str):
            raise ConfigError("field 'out' must be a string")
        return cls(kind=kind, params=raw,
                   base_seed=file_seed if seed is None else seed,
                   out_dir=file_out if out_dir is None else out_dir)

    @classmethod
    def from_file(cls, path, seed: int | None = None,
                  out_dir: str | None = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, seed=seed, out_dir=out_dir)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.base_seed,
                "out": self.out_dir, **self.params}


# --- artifact helpers --------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header: str, rows) -> str:
    return "\n".join([header] + [",".join(r) for r in rows]) + "\n"


def _f(x) -> str:
    return repr(float(x))


def _instance_for(base_seed: int, n: int, p: int, index: int) -> model.Instance:
    return model.generate_instance(n, p, generator_for(base_seed, "instance",
                                                       index))


def _resolve_p(params: dict) -> int:
    return params["p"] if "p" in params else round(params["alpha"] * params["n"])


# --- job implementations -----------------------------------------------------
# Each takes the output directory plus JSON-serializable kwargs and returns
# the list of files it wrote; top-level so a process pool can import them.

def _job_theory(out_dir, *, alpha, beta, variant, gammas, nodes):
    curve = theory.sweep_gamma(alpha, beta, gammas, variant,
                               theory.QuadratureSpec(nodes=nodes))
    rows = [
        (_f(pt.gamma), _f(pt.q0), _f(pt.q1), _f(pt.p0_hat), _f(pt.p1_hat),
         _f(pt.energy), _f(pt.transverse), _f(pt.hamiltonian), _f(pt.action),
         str(int(pt.converged)))
        for pt in curve
    ]
    path = os.path.join(out_dir, "theory.csv")
    _atomic_write(path, _csv_text(
        "gamma,q0,q1,p0hat,p1hat,E,T,H,phi,converged", rows))
    return ["theory.csv"]


def _write_trace(out_dir: str, fname: str, trace: mc.McTrace) -> None:
    tmp = os.path.join(out_dir, fname + ".tmp")
    trace.to_csv(tmp)
    os.replace(tmp, os.path.join(out_dir, fname))


def _job_mc_trace(out_dir, *, base_seed, n, p, variant, y, beta, tau,
                  gamma0, gamma1, flips_per_site, seed_index, k_units,
                  name):
    inst = _instance_for(base_seed, n, p, seed_index)
    trace = mc.run_sqa(inst, y=y, beta=beta, tau=tau, seed=base_seed,
                       variant=variant, k_units=k_units, gamma0=gamma0,
                       gamma1=gamma1, flips_per_site=flips_per_site,
                       stream_index=seed_index)
    fname = f"{name}.csv"
    _write_trace(out_dir, fname, trace)
    return [fname]


def _job_sa_trace(out_dir, *, base_seed, n, p, variant, tau, betas, gammas,
                  flips_per_site, seed_index, name):
    inst = _instance_for(base_seed, n, p, seed_index)
    trace = mc.run_sa(inst, betas=np.asarray(betas), tau=tau, seed=base_seed,
                      variant=variant, gammas=np.asarray(gammas),
                      flips_per_site=flips_per_site, stream_index=seed_index)
    fname = f"{name}.csv"
    _write_trace(out_dir, fname, trace)
    return [fname]


def _mode_solution(table: np.ndarray, n: int) -> np.ndarray:
    sols = model.solutions_of(table)
    if sols.size == 0:
        raise ValueError("instance has no solutions; no mode reference")
    sigs = np.stack([model.sigma_from_index(int(s), n) for s in sols])
    vote = np.where(sigs.sum(axis=0) >= 0, 1, -1)
    return sigs[np.argmin((sigs != vote).sum(axis=1))]


def _job_bp_profile(out_dir, *, base_seed, n, p, seed_index, lambdas,
                    reference, profile, tol, max_iter, damping):
    inst = _instance_for(base_seed, n, p, seed_index)
    if reference == "ones":
        ref = np.ones(n, dtype=np.int8)
    elif reference == "mode":
        ref = _mode_solution(model.enumerate_table(inst, "r0"), n)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    if profile == "entropy":
        points = bp.profile_entropy(inst, ref, lambdas, tol=tol,
                                    max_iter=max_iter, damping=damping,
                                    seed=base_seed)
    elif profile == "energy":
        points = bp.profile_energy(inst, ref, lambdas)
    else:
        raise ValueError(f"unknown profile {profile!r}")
    rows = [(_f(pt.lam), _f(pt.distance), _f(pt.value),
             str(int(pt.converged)), str(pt.iterations)) for pt in points]
    fname = f"bp_{profile}.csv"
    _atomic_write(os.path.join(out_dir, fname),
                  _csv_text("lambda,distance,value,converged,iters", rows))
    return [fname]


def _job_exact_qa(out_dir, *, base_seed, n, p, seed_index, variant,
                  gamma_start, delta_gamma, delta_t, krylov_dim,
                  record_every, save_state):
    inst = _instance_for(base_seed, n, p, seed_index)
    table = model.enumerate_table(inst, variant)
    params = quantum.SilParams(gamma_start=gamma_start,
                               delta_gamma=delta_gamma, delta_t=delta_t,
                               krylov_dim=krylov_dim,
                               record_every=record_every)
    res = quantum.sil_evolve(table, params)
    rows = [(_f(g), _f(e)) for g, e in zip(res.gammas, res.energies)]
    files = ["exact_qa.csv"]
    _atomic_write(os.path.join(out_dir, "exact_qa.csv"),
                  _csv_text("gamma,E_mean", rows))
    if save_state:
        tmp = os.path.join(out_dir, "exact_qa_state.npz.tmp")
        with open(tmp, "wb") as fh:
            np.savez(fh, amplitudes=res.state.amplitudes,
                     n=n, p=p, seed_index=seed_index, variant=variant,
                     renormalizations=res.renormalizations)
        os.replace(tmp, os.path.join(out_dir, "exact_qa_state.npz"))
        files.append("exact_qa_state.npz")
    return files


def _job_gaps(out_dir, *, base_seed, n, p, seed_index, variant, gammas,
              tables, tol):
    inst = _instance_for(base_seed, n, p, seed_index)
    table = model.enumerate_table(inst, variant)
    files = []
    jobs = []
    if tables in ("original", "both"):
        jobs.append(("gaps_original.csv", table))
    if tables in ("randomized", "both"):
        twin = model.randomize_table(
            table, generator_for(base_seed, "twin", seed_index))
        jobs.append(("gaps_randomized.csv", twin))
    if not jobs:
        raise ValueError(f"unknown tables selector {tables!r}")
    for fname, tab in jobs:
        curve = quantum.gap_curve(tab, gammas, tol=tol)
        rows = [(_f(g), _f(h0), _f(h1))
                for g, (h0, h1) in zip(gammas, curve)]
        _atomic_write(os.path.join(out_dir, fname),
                      _csv_text("gamma,H0,H1", rows))
        files.append(fname)
    return files


def _best_replica(sigma: np.ndarray, xi: np.ndarray,
                  variant: str) -> tuple[np.ndarray, float]:
    """Lowest-energy replica of a Trotter stack; ties take the first."""
    energies = [model.energy(xi, s, variant) for s in sigma]
    a = int(np.argmin(energies))
    return sigma[a].copy(), float(energies[a])


def _job_stats(out_dir, *, base_seed, n, p, seed_index, variant, state_file,
               gamma_start, delta_gamma, delta_t, krylov_dim, sqa_y,
               sqa_tau, sqa_beta, entropy_w):
    inst = _instance_for(base_seed, n, p, seed_index)
    table = model.enumerate_table(inst, variant)
    if state_file is not None:
        with np.load(state_file) as dat:
            state = quantum.QuantumState(dat["amplitudes"])
        if state.amplitudes.size != table.size:
            raise ValueError("saved state does not match the instance size")
    else:
        params = quantum.SilParams(gamma_start=gamma_start,
                                   delta_gamma=delta_gamma, delta_t=delta_t,
                                   krylov_dim=krylov_dim)
        state = quantum.sil_evolve(table, params).state
    sqa_config = None
    if sqa_y is not None:
        trace = mc.run_sqa(inst, y=sqa_y, beta=sqa_beta, tau=sqa_tau,
                           seed=base_seed, variant=variant,
                           stream_index=seed_index)
        sqa_config, _ = _best_replica(trace.final_sigma, inst.xi, variant)
    st = quantum.distribution_stats(state, table, sqa_config=sqa_config)
    record = {
        "n_sol": st.n_sol,
        "p_sol": st.p_sol,
        "E_mean": st.mean_energy / n,
        "E_argmax": float(table[st.argmax_config]) / n,
        "p_argmax": st.p_argmax,
        "ipr": st.ipr,
        "dbar": st.mean_distance,
        "rank_sqa": st.rank,
    }
    _atomic_write(os.path.join(out_dir, "stats.json"),
                  json.dumps(record, indent=2) + "\n")
    files = ["stats.json"]
    if st.n_sol > 0:
        curves = quantum.weighted_local_entropy(state, table, w=entropy_w)
        rows = ["d,phi_w,phi_sol"]
        for k in range(curves.d.size):
            rows.append("%.10g,%.10g,%.10g"
                        % (curves.d[k], curves.phi_w[k], curves.phi_sol[k]))
        _atomic_write(os.path.join(out_dir, "local_entropy.csv"),
                      "\n".join(rows) + "\n")
        files.append("local_entropy.csv")
    return files


# --- sample selection --------------------------------------------------------

@dataclass
class SampleRecord:
    """One kept sample: the instance, its filter evidence, and the twin seed."""

    index: int
    instance: model.Instance
    n_sol: int
    sa_final_energy: float
    sqa_final_energy: float
    sqa_config: np.ndarray
    twin_seed_index: int

    def table(self, variant: str = "r0") -> np.ndarray:
        return model.enumerate_table(self.instance, variant)

    def twin_table(self, base_seed: int, variant: str = "r0") -> np.ndarray:
        return model.randomize_table(
            self.table(variant),
            generator_for(base_seed, "select/twin", self.twin_seed_index))


@dataclass
class SampleSet:
    records: list[SampleRecord]
    counts: dict
    base_seed: int
    params: dict = field(default_factory=dict)


def select_samples(n: int = 21, p: int = 17, pool: int = 450,
                   min_solutions: int = 21, fast_tau: int = 1,
                   sqa_y: int = 512, seed: int = 0, *, beta: float = 20.0,
                   variant: str = "r0", sqa_tau: int = 1,
                   max_keep: int | None = None, nodes: int = 48) -> SampleSet:
    """Filter a pool of instances down to SA-hard / SQA-easy samples.

    Pipeline per the selection protocol: enumerate the solution count,
    keep instances at or above the threshold, anneal each with a fast
    classical schedule (the matched-temperature ladder at tau=fast_tau)
    and with the path-integral sampler (y=sqa_y, tau=sqa_tau), and keep
    the samples where SA ends strictly above zero cost while SQA's best
    replica lands exactly on a solution.  Deterministic in (seed); pass
    max_keep to stop scanning once enough samples survive.
    """
    if n > 24:
        raise ValueError("selection enumerates tables; capped at N = 24")
    alpha = p / n
    quad = theory.QuadratureSpec(nodes=nodes)
    sched = mc.AnnealSchedule.sqa(n, 1, fast_tau, beta)  # gamma ladder only
    sa_betas = theory.beta_equiv_curve(sched.gammas, alpha, beta, variant,
                                       quad)
    counts = {"pool": pool, "passed_threshold": 0, "sa_failed": 0, "kept": 0}
    records = []
    for idx in range(pool):
        inst = _instance_for(seed, n, p, idx)
        table = model.enumerate_table(inst, variant)
        n_sol = int(np.count_nonzero(table == 0.0))
        if n_sol < min_solutions:
            continue
        counts["passed_threshold"] += 1
        sa_trace = mc.run_sa(inst, betas=sa_betas, tau=fast_tau, seed=seed,
                             variant=variant, gammas=sched.gammas,
                             stream_index=idx)
        sa_energy = model.energy(inst.xi, sa_trace.final_sigma[0], variant)
        if sa_energy <= 0.0:
            continue
        counts["sa_failed"] += 1
        sqa_trace = mc.run_sqa(inst, y=sqa_y, beta=beta, tau=sqa_tau,
                               seed=seed, variant=variant, stream_index=idx)
        sqa_config, sqa_energy = _best_replica(sqa_trace.final_sigma,
                                               inst.xi, variant)
        if sqa_energy != 0.0:
            continue
        counts["kept"] += 1
        records.append(SampleRecord(
            index=idx, instance=inst, n_sol=n_sol,
            sa_final_energy=float(sa_energy),
            sqa_final_energy=float(sqa_energy), sqa_config=sqa_config,
            twin_seed_index=idx))
        if max_keep is not None and len(records) >= max_keep:
            break
    if not records:
        raise RuntimeError(
            "selection produced no samples; stage counts: "
            + json.dumps(counts))
    return SampleSet(records=records, counts=counts, base_seed=seed,
                     params={"n": n, "p": p, "pool": pool,
                             "min_solutions": min_solutions,
                             "fast_tau": fast_tau, "sqa_y": sqa_y,
                             "sqa_tau": sqa_tau, "beta": beta,
                             "variant": variant})


def _job_select(out_dir, *, base_seed, n, p, pool, min_solutions, fast_tau,
                sqa_y, sqa_tau, beta, variant, max_keep, nodes):
    sample_set = select_samples(n=n, p=p, pool=pool,
                                min_solutions=min_solutions,
                                fast_tau=fast_tau, sqa_y=sqa_y,
                                seed=base_seed, beta=beta, variant=variant,
                                sqa_tau=sqa_tau, max_keep=max_keep,
                                nodes=nodes)
    files = []
    samples = []
    for rec in sample_set.records:
        fname = f"sample_{rec.index:03d}.txt"
        model.save_instance(os.path.join(out_dir, fname), rec.instance)
        files.append(fname)
        samples.append({
            "index": rec.index,
            "n_sol": rec.n_sol,
            "sa_final_energy": rec.sa_final_energy,
            "sqa_final_energy": rec.sqa_final_energy,
            "sqa_config_index": quantum._config_index(rec.sqa_config, n),
            "twin_seed_index": rec.twin_seed_index,
            "instance_file": fname,
        })
    summary = {"counts": sample_set.counts, "params": sample_set.params,
               "seed": base_seed, "samples": samples}
    _atomic_write(os.path.join(out_dir, "selection.json"),
                  json.dumps(summary, indent=2) + "\n")
    return ["selection.json"] + files


# --- planning ----------------------------------------------------------------

def _as_list(v):
    return v if isinstance(v, list) else [v]


def plan_jobs(cfg: ExperimentConfig) -> list[tuple[str, str, dict]]:
    """Expand a config into (job name, function key, kwargs) triples."""
    prm = dict(cfg.params)
    seed = cfg.base_seed
    kind = cfg.kind
    if kind == "theory":
        return [("theory", "theory", prm)]
    if kind in ("sqa-sweep", "committee-sweep"):
        n, p = prm["n"], _resolve_p(prm)
        k_units = prm.get("k_units")
        if k_units is not None:
            if n % k_units or (n // k_units) % 2 == 0:
                raise ConfigError(
                    "committee-sweep needs n divisible by k_units with an "
                    "odd unit size")
        stem = "committee" if kind == "committee-sweep" else "sqa"
        jobs = []
        for y in _as_list(prm["y"]):
            for s in range(prm["n_seeds"]):
                name = f"{stem}_y{y}_seed{s}"
                jobs.append((name, "mc", dict(
                    base_seed=seed, n=n, p=p, variant=prm["variant"], y=y,
                    beta=prm["beta"], tau=prm["tau"], gamma0=prm["gamma0"],
                    gamma1=prm["gamma1"],
                    flips_per_site=prm["flips_per_site"], seed_index=s,
                    k_units=k_units, name=name)))
        return jobs
    if kind == "sa-sweep":
        n, p = prm["n"], _resolve_p(prm)
        sched = mc.AnnealSchedule.sqa(n, 1, prm["tau"], prm["beta_quantum"],
                                      prm["gamma0"], prm["gamma1"])
        gammas = [float(g) for g in sched.gammas]
        if prm.get("betas") is not None:
            betas = [float(b) for b in prm["betas"]]
            if len(betas) != len(gammas):
                raise ConfigError(
                    f"'betas' must have {len(gammas)} entries (30*tau)")
        else:
            betas = [float(b) for b in theory.beta_equiv_curve(
                gammas, p / n, prm["beta_quantum"], prm["variant"],
                theory.QuadratureSpec(nodes=prm["nodes"]))]
        jobs = []
        for s in range(prm["n_seeds"]):
            name = f"sa_seed{s}"
            jobs.append((name, "sa", dict(
                base_seed=seed, n=n, p=p, variant=prm["variant"],
                tau=prm["tau"], betas=betas, gammas=gammas,
                flips_per_site=prm["flips_per_site"], seed_index=s,
                name=name)))
        return jobs
    if kind == "bp-profile":
        return [("bp_profile", "bp", dict(base_seed=seed, **prm))]
    if kind == "exact-qa":
        return [("exact_qa", "exact_qa", dict(base_seed=seed, **prm))]
    if kind == "gaps":
        return [("gaps", "gaps", dict(base_seed=seed, **prm))]
    if kind == "stats":
        prm.setdefault("state_file", None)
        prm.setdefault("sqa_y", None)
        return [("stats", "stats", dict(base_seed=seed, **prm))]
    if kind == "select-samples":
        prm.setdefault("max_keep", None)
        return [("select_samples", "select", dict(base_seed=seed, **prm))]
    raise ConfigError(f"unknown kind {kind!r}")


_JOB_FUNCS = {
    "theory": _job_theory,
    "mc": _job_mc_trace,
    "sa": _job_sa_trace,
    "bp": _job_bp_profile,
    "exact_qa": _job_exact_qa,
    "gaps": _job_gaps,
    "stats": _job_stats,
    "select": _job_select,
}


def _execute_job(out_dir: str, name: str, key: str, kwargs: dict):
    try:
        files = _JOB_FUNCS[key](out_dir, **kwargs)
        return name, "ok", files, None
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest
        return name, "failed", [], f"{type(exc).__name__}: {exc}"


def run(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Execute all jobs of a config and write the manifest.

    Job failures are recorded, not raised; inspect manifest['n_failed'].
    Config problems raise ConfigError before any file is written.
    """
    jobs = plan_jobs(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    t0 = time.time()
    results = []
    if workers <= 1:
        for name, key, kwargs in jobs:
            results.append(_execute_job(cfg.out_dir, name, key, kwargs))
    else:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            futs = [pool.submit(_execute_job, cfg.out_dir, name, key, kwargs)
                    for name, key, kwargs in jobs]
            results = [f.result() for f in futs]
    cfg_dict = cfg.as_dict()
    digest = hashlib.sha256(
        json.dumps(cfg_dict, sort_keys=True).encode()).hexdigest()
    manifest = {
        "schema": SCHEMA_VERSION,
        "package": "annealab",
        "version": __version__,
        "config": cfg_dict,
        "config_sha256": digest,
        "base_seed": cfg.base_seed,
        "wall_time": time.time() - t0,
        "jobs": [{"name": nm, "status": status, "files": files,
                  **({"error": err} if err else {})}
                 for nm, status, files, err in results],
        "n_failed": sum(1 for _, status, _, _ in results
                        if status != "ok"),
    }
    _atomic_write(os.path.join(cfg.out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2) + "\n")
    return manifest
