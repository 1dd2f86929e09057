"""MCMC samplers and the chain runner.

Five samplers share one interface: unadjusted Euler-Maruyama overdamped
Langevin ("em"), its Metropolis-adjusted version ("mala"), Hamiltonian Monte
Carlo with full momentum refresh ("hmc"), generalized HMC with partial
refresh and a momentum flip ("ghmc", "ghmc-noflip"), and the reversible
five-stage Langevin integrator ("langevin", with "elm" fixing
gamma = 1/(2 dt) so the noise stage discards the momentum entirely).

``run_chain`` advances the chain ``n_steps`` times and retains every
``stride``-th state after ``burn_in``, so N = (n_steps - burn_in) // stride
states come back. Chains are reproducible: the random stream is fixed by
(seed, chain_id) through ``numpy.random.SeedSequence``, and the jitted fast
path draws the identical stream as the pure-python loop used for custom
targets (normals for the proposal or refresh first, then one uniform for the
accept test; momentum samplers draw the initial momentum before the loop).

The ``*_step`` functions are single-step reference implementations of the
same updates for direct use in tests and small scripts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _engine
from ._io import atomic_write_text
from .targets import Target

SAMPLERS = ("em", "mala", "hmc", "ghmc", "ghmc-noflip", "langevin", "elm")


class NonFiniteStateError(RuntimeError):
    """A gradient or energy became non-finite during a chain run."""

    def __init__(self, step: int, state: np.ndarray):
        self.step = step
        self.state = np.asarray(state)
        super().__init__(
            f"non-finite gradient at step {step}, state {self.state!r}"
        )


def elm_gamma(dt: float) -> float:
    """Friction making the Langevin noise stage a full momentum resample."""
    return 1.0 / (2.0 * dt)


@dataclass
class ChainConfig:
    dt: float
    n_steps: int
    stride: int = 1
    burn_in: int = 0
    seed: int = 0
    gamma: float = 1.0
    hmc_leapfrog_steps: int = 10
    ghmc_mix_angle: float = math.pi / 4.0

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.burn_in >= self.n_steps:
            raise ValueError("burn_in must leave at least one step")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.hmc_leapfrog_steps < 1:
            raise ValueError("hmc_leapfrog_steps must be >= 1")
        if not (0.0 < self.ghmc_mix_angle <= math.pi / 2.0):
            raise ValueError("ghmc_mix_angle must be in (0, pi/2]")

    @property
    def n_retained(self) -> int:
        return (self.n_steps - self.burn_in) // self.stride


@dataclass
class Trajectory:
    states: np.ndarray  # (N, d)
    config: ChainConfig
    sampler: str
    target_name: str
    acceptance_rate: float
    chain_id: int | None = None

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dimension(self) -> int:
        return self.states.shape[1]


def _rng_for(seed: int, chain_id: int | None) -> np.random.Generator:
    if chain_id is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(chain_id,))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# single-step reference implementations

def em_step(target: Target, q: np.ndarray, dt: float, rng) -> np.ndarray:
    """q' = q - dt grad U(q) + sqrt(2 dt) xi."""
    g = target.gradient(q)
    if not np.all(np.isfinite(g)):
        raise NonFiniteStateError(0, q)
    xi = rng.standard_normal(q.shape[0])
    return q - dt * g + math.sqrt(2.0 * dt) * xi


def mala_log_ratio(target: Target, q: np.ndarray, q_prop: np.ndarray,
                   dt: float) -> float:
    """log of the Metropolis ratio for the EM proposal from q to q_prop."""
    u0, g0 = target.evaluate(q)
    u1, g1 = target.evaluate(q_prop)
    fwd = float(np.sum((q_prop - q + dt * g0) ** 2))
    bwd = float(np.sum((q - q_prop + dt * g1) ** 2))
    return float(u0 - u1) + (fwd - bwd) / (4.0 * dt)


def mala_step(target: Target, q: np.ndarray, dt: float, rng):
    """One EM proposal plus accept test; returns (q', accepted)."""
    g = target.gradient(q)
    if not np.all(np.isfinite(g)):
        raise NonFiniteStateError(0, q)
    xi = rng.standard_normal(q.shape[0])
    q_prop = q - dt * g + math.sqrt(2.0 * dt) * xi
    u = rng.random()
    log_ratio = mala_log_ratio(target, q, q_prop, dt)
    if np.isfinite(log_ratio) and math.log(u) < log_ratio:
        return q_prop, True
    return q.copy(), False


def leapfrog(target: Target, q: np.ndarray, p: np.ndarray, dt: float,
             n_sub: int):
    """n_sub velocity-Verlet steps; returns (q', p')."""
    q = q.copy()
    p = p - 0.5 * dt * target.gradient(q)
    for sub in range(n_sub):
        q += dt * p
        g = target.gradient(q)
        p -= dt * g if sub < n_sub - 1 else 0.5 * dt * g
    return q, p


def hmc_step(target: Target, q: np.ndarray, dt: float, n_leapfrog: int, rng):
    """Fresh momentum, n_leapfrog leapfrog steps, accept test."""
    d = q.shape[0]
    p = rng.standard_normal(d)
    u = rng.random()
    h0 = target.potential(q) + 0.5 * float(p @ p)
    qn, pn = leapfrog(target, q, p, dt, n_leapfrog)
    h1 = target.potential(qn) + 0.5 * float(pn @ pn)
    if np.isfinite(h1) and math.log(u) < h0 - h1:
        return qn, True
    return q.copy(), False


def ghmc_step(target: Target, q: np.ndarray, p: np.ndarray, dt: float,
              angle: float, rng, flip: bool = True):
    """Partial momentum refresh, one leapfrog step, accept test.

    The accept test is run for the involutive proposal (leapfrog composed
    with a momentum negation); with flip set, one further unconditional
    negation is appended.  Net effect with flip: acceptance keeps the
    integrated momentum and rejection returns (q, -p') where p' is the
    refreshed momentum.  Without flip the signs are reversed: acceptance
    returns (q*, -p*) and rejection keeps (q, p').  Both leave the joint
    density invariant; only the flip variant lets momenta persist across
    accepted steps.

    Returns (q', p', accepted).
    """
    d = q.shape[0]
    xi = rng.standard_normal(d)
    p = math.cos(angle) * p + math.sin(angle) * xi
    u = rng.random()
    h0 = target.potential(q) + 0.5 * float(p @ p)
    qn, pn = leapfrog(target, q, p, dt, 1)
    h1 = target.potential(qn) + 0.5 * float(pn @ pn)
    if np.isfinite(h1) and math.log(u) < h0 - h1:
        accepted = True
        q, p = qn, (pn if flip else -pn)
    else:
        accepted = False
        q, p = q.copy(), (-p if flip else p)
    return q, p, accepted


def langevin_step(target: Target, q: np.ndarray, p: np.ndarray, dt: float,
                  gamma: float, rng):
    """One B-A-O-A-B sweep of the reversible Langevin integrator.

    Stages: half kick, half drift, momentum mix
    p <- sqrt(1 - 2 gamma dt) p + sqrt(2 gamma dt) xi, half drift, half kick.
    Requires 2 gamma dt <= 1; at gamma = 1/(2 dt) the mix discards p.
    """
    c1sq = 1.0 - 2.0 * gamma * dt
    if c1sq < -1e-12:
        raise ValueError("langevin requires 2 * gamma * dt <= 1")
    c1 = math.sqrt(max(c1sq, 0.0))
    c2 = math.sqrt(2.0 * gamma * dt)
    p = p - 0.5 * dt * target.gradient(q)
    q = q + 0.5 * dt * p
    p = c1 * p + c2 * rng.standard_normal(q.shape[0])
    q = q + 0.5 * dt * p
    p = p - 0.5 * dt * target.gradient(q)
    return q, p


# ---------------------------------------------------------------------------
# chain runner

def _python_chain(target: Target, sampler: str, cfg: ChainConfig,
                  q0: np.ndarray, rng, gamma: float):
    """Reference loop for targets without a jitted kernel pack.

    Mirrors the drivers in _engine operation for operation (same scalar
    accumulation order), so it replays their float stream exactly.
    """
    d = q0.shape[0]
    keep = cfg.n_retained
    out = np.empty((keep, d))
    q = q0.astype(float).copy()
    idx = 0
    accepted = 0
    n_acc_base = cfg.n_steps

    def grad(x):
        g = np.asarray(target.gradient(x), dtype=float)
        return g

    def finite(v):
        return bool(np.all(np.isfinite(v)))

    if sampler == "em":
        b = math.sqrt(2.0 * cfg.dt)
        for step in range(1, cfg.n_steps + 1):
            g = grad(q)
            if not finite(g):
                raise NonFiniteStateError(step, q)
            for i in range(d):
                q[i] = q[i] - cfg.dt * g[i] + b * rng.standard_normal()
            if step > cfg.burn_in and (step - cfg.burn_in) % cfg.stride == 0:
                out[idx] = q
                idx += 1
        return out, 1.0

    if sampler == "mala":
        u_cur = float(target.potential(q))
        g = grad(q)
        if not (finite(g) and np.isfinite(u_cur)):
            raise NonFiniteStateError(1, q)
        b = math.sqrt(2.0 * cfg.dt)
        inv4dt = 1.0 / (4.0 * cfg.dt)
        qp = np.empty(d)
        for step in range(1, cfg.n_steps + 1):
            fwd = 0.0
            for i in range(d):
                xi = rng.standard_normal()
                qp[i] = q[i] - cfg.dt * g[i] + b * xi
                fwd += 2.0 * cfg.dt * xi * xi
            u = rng.random()
            u_prop = float(target.potential(qp))
            gp = grad(qp)
            if finite(gp) and np.isfinite(u_prop):
                bwd = 0.0
                for i in range(d):
                    r = q[i] - qp[i] + cfg.dt * gp[i]
                    bwd += r * r
                log_ratio = u_cur - u_prop + (fwd - bwd) * inv4dt
                if math.log(u) < log_ratio:
                    q[:] = qp
                    g = gp
                    u_cur = u_prop
                    accepted += 1
            if step > cfg.burn_in and (step - cfg.burn_in) % cfg.stride == 0:
                out[idx] = q
                idx += 1
        return out, accepted / n_acc_base

    def py_leapfrog(qn, p, g, n_sub):
        for i in range(d):
            p[i] -= 0.5 * cfg.dt * g[i]
        for sub in range(n_sub):
            for i in range(d):
                qn[i] += cfg.dt * p[i]
            g[:] = grad(qn)
            if not finite(g):
                return False
            if sub < n_sub - 1:
                for i in range(d):
                    p[i] -= cfg.dt * g[i]
        for i in range(d):
            p[i] -= 0.5 * cfg.dt * g[i]
        return True

    if sampler == "hmc":
        u_cur = float(target.potential(q))
        g_cur = grad(q)
        if not (finite(g_cur) and np.isfinite(u_cur)):
            raise NonFiniteStateError(1, q)
        qn = np.empty(d)
        p = np.empty(d)
        g = np.empty(d)
        for step in range(1, cfg.n_steps + 1):
            kin = 0.0
            for i in range(d):
                p[i] = rng.standard_normal()
                kin += p[i] * p[i]
                qn[i] = q[i]
                g[i] = g_cur[i]
            u = rng.random()
            h0 = u_cur + 0.5 * kin
            if py_leapfrog(qn, p, g, cfg.hmc_leapfrog_steps):
                u_prop = float(target.potential(qn))
                kin = 0.0
                for i in range(d):
                    kin += p[i] * p[i]
                h1 = u_prop + 0.5 * kin
                if np.isfinite(h1) and math.log(u) < h0 - h1:
                    q[:] = qn
                    g_cur[:] = g
                    u_cur = u_prop
                    accepted += 1
            if step > cfg.burn_in and (step - cfg.burn_in) % cfg.stride == 0:
                out[idx] = q
                idx += 1
        return out, accepted / n_acc_base

    if sampler in ("ghmc", "ghmc-noflip"):
        flip = sampler == "ghmc"
        u_cur = float(target.potential(q))
        g_cur = grad(q)
        if not (finite(g_cur) and np.isfinite(u_cur)):
            raise NonFiniteStateError(1, q)
        p = np.empty(d)
        for i in range(d):
            p[i] = rng.standard_normal()
        ca = np.cos(cfg.ghmc_mix_angle)
        sa = np.sin(cfg.ghmc_mix_angle)
        qn = np.empty(d)
        pn = np.empty(d)
        g = np.empty(d)
        for step in range(1, cfg.n_steps + 1):
            kin = 0.0
            for i in range(d):
                p[i] = ca * p[i] + sa * rng.standard_normal()
                kin += p[i] * p[i]
                qn[i] = q[i]
                pn[i] = p[i]
                g[i] = g_cur[i]
            u = rng.random()
            h0 = u_cur + 0.5 * kin
            acc = False
            if py_leapfrog(qn, pn, g, 1):
                u_prop = float(target.potential(qn))
                kin = 0.0
                for i in range(d):
                    kin += pn[i] * pn[i]
                h1 = u_prop + 0.5 * kin
                if np.isfinite(h1) and math.log(u) < h0 - h1:
                    acc = True
                    q[:] = qn
                    g_cur[:] = g
                    u_cur = u_prop
                    accepted += 1
            if flip:
                if acc:
                    for i in range(d):
                        p[i] = pn[i]
                else:
                    for i in range(d):
                        p[i] = -p[i]
            else:
                if acc:
                    for i in range(d):
                        p[i] = -pn[i]
            if step > cfg.burn_in and (step - cfg.burn_in) % cfg.stride == 0:
                out[idx] = q
                idx += 1
        return out, accepted / n_acc_base

    if sampler == "langevin":
        g = grad(q)
        if not finite(g):
            raise NonFiniteStateError(1, q)
        p = np.empty(d)
        for i in range(d):
            p[i] = rng.standard_normal()
        c1sq = max(1.0 - 2.0 * gamma * cfg.dt, 0.0)
        c1 = math.sqrt(c1sq)
        c2 = math.sqrt(2.0 * gamma * cfg.dt)
        half = 0.5 * cfg.dt
        for step in range(1, cfg.n_steps + 1):
            for i in range(d):
                p[i] -= half * g[i]
                q[i] += half * p[i]
            for i in range(d):
                p[i] = c1 * p[i] + c2 * rng.standard_normal()
            for i in range(d):
                q[i] += half * p[i]
            g = grad(q)
            if not finite(g):
                raise NonFiniteStateError(step, q)
            for i in range(d):
                p[i] -= half * g[i]
            if step > cfg.burn_in and (step - cfg.burn_in) % cfg.stride == 0:
                out[idx] = q
                idx += 1
        return out, 1.0

    raise ValueError(f"unknown sampler {sampler!r}")


def run_chain(target: Target, sampler: str, config: ChainConfig,
              q0=None, chain_id: int | None = None) -> Trajectory:
    """Run one chain; returns the retained states as a Trajectory.

    chain_id selects an independent substream of config.seed, so ensemble
    member c rerun alone reproduces its ensemble trajectory bitwise.
    """
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
    if q0 is None:
        q0 = target.initial_state()
    q0 = np.asarray(q0, dtype=float)
    if q0.shape != (target.dimension,):
        raise ValueError(
            f"initial state shape {q0.shape} does not match dimension {target.dimension}"
        )

    gamma = config.gamma
    if sampler == "elm":
        gamma = elm_gamma(config.dt)
        sampler_impl = "langevin"
    else:
        sampler_impl = sampler
    if sampler_impl == "langevin" and 2.0 * gamma * config.dt > 1.0 + 1e-12:
        raise ValueError("langevin requires 2 * gamma * dt <= 1")

    rng = _rng_for(config.seed, chain_id)
    pack = target.kernel_args()
    if pack is None:
        states, acc = _python_chain(target, sampler_impl, config, q0, rng, gamma)
    else:
        kind, mat, vec, s0, s1 = pack
        args = (kind, np.ascontiguousarray(mat, dtype=float),
                np.ascontiguousarray(vec, dtype=float), float(s0), float(s1),
                q0, config.dt, config.n_steps, config.burn_in, config.stride)
        if sampler_impl == "em":
            states, kept, err, q_last, acc = _engine.run_em(*args, rng)
        elif sampler_impl == "mala":
            states, kept, err, q_last, acc = _engine.run_mala(*args, rng)
        elif sampler_impl == "hmc":
            states, kept, err, q_last, acc = _engine.run_hmc(
                *args, config.hmc_leapfrog_steps, rng)
        elif sampler_impl == "ghmc":
            states, kept, err, q_last, acc = _engine.run_ghmc(
                *args, config.ghmc_mix_angle, sampler == "ghmc", rng)
        elif sampler_impl == "ghmc-noflip":
            states, kept, err, q_last, acc = _engine.run_ghmc(
                *args, config.ghmc_mix_angle, False, rng)
        else:
            states, kept, err, q_last, acc = _engine.run_langevin(*args, gamma, rng)
        if err > 0:
            raise NonFiniteStateError(err, q_last)

    return Trajectory(states=states, config=config, sampler=sampler,
                      target_name=target.name, acceptance_rate=float(acc),
                      chain_id=chain_id)


def run_ensemble(target: Target, sampler: str, config: ChainConfig,
                 n_chains: int, q0=None) -> list[Trajectory]:
    """n_chains independent chains on substreams 0..n_chains-1 of the seed."""
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    return [run_chain(target, sampler, config, q0=q0, chain_id=c)
            for c in range(n_chains)]


# ---------------------------------------------------------------------------
# trajectory serialization: CSV of states plus a key = value sidecar

def save_trajectory(traj: Trajectory, path) -> None:
    path = Path(path)
    d = traj.dimension
    header = "index," + ",".join(f"q_{i + 1}" for i in range(d))
    lines = [header]
    for n, row in enumerate(traj.states):
        lines.append(str(n) + "," + ",".join(f"{v:.17g}" for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")

    cfg = traj.config
    meta = [
        f"target = {traj.target_name}",
        f"sampler = {traj.sampler}",
        f"dt = {cfg.dt:.17g}",
        f"n_steps = {cfg.n_steps}",
        f"stride = {cfg.stride}",
        f"burn_in = {cfg.burn_in}",
        f"seed = {cfg.seed}",
        f"gamma = {cfg.gamma:.17g}",
        f"hmc_leapfrog_steps = {cfg.hmc_leapfrog_steps}",
        f"ghmc_mix_angle = {cfg.ghmc_mix_angle:.17g}",
        f"chain_id = {'' if traj.chain_id is None else traj.chain_id}",
        f"acceptance_rate = {traj.acceptance_rate:.17g}",
    ]
    atomic_write_text(_sidecar_path(path), "\n".join(meta) + "\n")


def _sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".meta.txt")


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "index" or any(
                h != f"q_{i + 1}" for i, h in enumerate(header[1:])):
            raise ValueError(f"unexpected trajectory header {header!r} in {path}")
        rows = [line.strip().split(",")[1:] for line in fh if line.strip()]
    states = np.array([[float(v) for v in row] for row in rows])

    meta = {}
    with open(_sidecar_path(path)) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    cfg = ChainConfig(
        dt=float(meta["dt"]),
        n_steps=int(meta["n_steps"]),
        stride=int(meta["stride"]),
        burn_in=int(meta["burn_in"]),
        seed=int(meta["seed"]),
        gamma=float(meta["gamma"]),
        hmc_leapfrog_steps=int(meta["hmc_leapfrog_steps"]),
        ghmc_mix_angle=float(meta["ghmc_mix_angle"]),
    )
    chain_id = int(meta["chain_id"]) if meta.get("chain_id") else None
    return Trajectory(states=states, config=cfg, sampler=meta["sampler"],
                      target_name=meta["target"],
                      acceptance_rate=float(meta["acceptance_rate"]),
                      chain_id=chain_id)
