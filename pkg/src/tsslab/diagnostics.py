"""Energy-type functionals, dissipation terms and trajectory bookkeeping."""

import logging
import math
from pathlib import Path

import numpy as np

from .exceptions import UsageError

logger = logging.getLogger(__name__)

__all__ = [
    "COLUMNS",
    "CROSS_TERM_COLUMNS",
    "C_FLOOR",
    "Trajectory",
    "TrajectoryRecorder",
    "compute_functionals",
    "ls_norm",
    "energy_residual",
    "energy_balance",
    "fit_quasi_energy_constant",
    "quasi_energy_fraction",
]

C_FLOOR = 1e-10

# Fixed column set of a recorded trajectory, in file order.
#   y1 = int n^3 + int |grad c|^6,  y2 = int |grad u|^2,  y = y1^mu + y2 + 1
#   diss_n = int |grad n^{3/2}|^2,  diss_c = int |grad |grad c|^3|^2,  diss_u = int |Lap u|^2
#   quasi_energy = int n ln n + 1/2 int |grad c|^2/c + kappa int |u|^2  (nan when c < C_FLOOR)
#   fisher_n = int |grad n|^2/n,  fisher_c = int |grad c|^4/c^3
#   grad_sqrt_n = int |grad n^{1/2}|^2,  hess_c = int |D^2 c|^2/c
#   cum_* = time integrals from 0 (trapezoid over samples)
#   n3_gc2, n2_gc4, gc6_gu, adv_stretch, buoy_forcing: cross terms of the y' estimate
COLUMNS = (
    "t", "y1", "y2", "y",
    "diss_n", "diss_c", "diss_u",
    "mass", "cmax", "cmin", "nmin",
    "kinetic", "buoyancy_work",
    "n_log_n", "grad_c_sq_over_c", "quasi_energy",
    "fisher_n", "fisher_c", "grad_sqrt_n", "hess_c",
    "cum_grad_sqrt_n", "cum_hess_c", "cum_grad_u",
    "n3_gc2", "n2_gc4", "gc6_gu", "adv_stretch", "buoy_forcing",
    "n_clipped", "c_floor_hit",
)
CROSS_TERM_COLUMNS = ("n3_gc2", "n2_gc4", "gc6_gu", "adv_stretch", "buoy_forcing")


def compute_functionals(state, mu=1.0 / 3.0, kappa=1.0, n=None, c=None, cross_terms=True,
                        positivity_tol=1e-6, c_floor=C_FLOOR):
    """Evaluate every functional of one state; returns a dict keyed by :data:`COLUMNS`.

    Powers of ``n`` use ``max(n, 0)``; ``n_clipped`` flags undershoot beyond
    ``positivity_tol``.  Quotients by ``c`` (and ``n``) are reported as
    ``nan`` when the divisor drops below ``c_floor`` anywhere.  The cumulative
    columns are left at zero; :class:`TrajectoryRecorder` fills them.
    """
    g = state.grid
    integ = g.integrate
    n = g.to_physical(state.n_hat) if n is None else n
    c = g.to_physical(state.c_hat) if c is None else c
    n_hat, c_hat, u_hat = state.n_hat, state.c_hat, state.u_hat
    u = g.to_physical(u_hat)
    n_pos = np.maximum(n, 0.0)
    nmin, cmin = float(np.min(n)), float(np.min(c))

    grad_c = g.to_physical(g.grad_hat(c_hat))
    gc2 = np.sum(grad_c**2, axis=0)
    gc = np.sqrt(gc2)
    kd = np.stack(np.broadcast_arrays(*g.derivative_wavenumbers))
    grad_u = g.to_physical(1j * kd[None, :] * u_hat[:, None])
    gu2 = np.sum(grad_u**2, axis=(0, 1))

    y1 = float(integ(n_pos**3) + integ(gc2**3))
    y2 = float(integ(gu2))
    y = (y1**mu if y1 > 0 else 0.0) + y2 + 1.0

    def grad_sq(f):
        return float(integ(np.sum(g.to_physical(g.grad_hat(g.dealias(g.to_spectral(f)))) ** 2, axis=0)))

    lap_u = g.to_physical(g.laplacian_hat(u_hat))
    out = dict.fromkeys(COLUMNS, 0.0)
    out.update(
        t=float(state.t), y1=y1, y2=y2, y=y,
        diss_n=grad_sq(n_pos**1.5),
        diss_c=grad_sq(gc**3),
        diss_u=float(integ(np.sum(lap_u**2, axis=0))),
        mass=float(integ(n)), cmax=float(np.max(c)), cmin=cmin, nmin=nmin,
        kinetic=0.5 * float(integ(np.sum(u**2, axis=0))),
        n_clipped=float(nmin < -positivity_tol),
        c_floor_hit=float(cmin < c_floor),
    )
    out["buoyancy_work"] = (
        0.0 if state.grad_phi is None else float(integ(n * np.sum(u * state.grad_phi, axis=0)))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        out["n_log_n"] = float(integ(np.where(n_pos > 0, n_pos * np.log(n_pos), 0.0)))
        if cmin >= c_floor:
            hess = -kd[:, None] * kd[None, :] * c_hat
            hess_sq = np.sum(g.to_physical(hess) ** 2, axis=(0, 1))
            out["grad_c_sq_over_c"] = float(integ(gc2 / c))
            out["fisher_c"] = float(integ(gc2**2 / c**3))
            out["hess_c"] = float(integ(hess_sq / c))
            out["quasi_energy"] = out["n_log_n"] + 0.5 * out["grad_c_sq_over_c"] + 2 * kappa * out["kinetic"]
        else:
            for key in ("grad_c_sq_over_c", "fisher_c", "hess_c", "quasi_energy"):
                out[key] = math.nan
        if nmin >= c_floor:
            grad_n2 = np.sum(g.to_physical(g.grad_hat(n_hat)) ** 2, axis=0)
            out["fisher_n"] = float(integ(grad_n2 / n))
            out["grad_sqrt_n"] = 0.25 * out["fisher_n"]
        else:
            out["fisher_n"] = out["grad_sqrt_n"] = math.nan

    if cross_terms:
        out["n3_gc2"] = float(integ(n_pos**3 * gc2))
        out["n2_gc4"] = float(integ(n_pos**2 * gc2**2))
        out["gc6_gu"] = float(integ(gc2**3 * np.sqrt(gu2)))
        adv = np.einsum(
            "j...,ij...->i...", g.to_physical(u_hat / (1.0 + state.eps * g.k2)), grad_u
        )
        adv_p = g.to_physical(g.leray_hat(g.dealias(g.to_spectral(adv))))
        out["adv_stretch"] = g.inner(lap_u, adv_p)
        if state.grad_phi is not None:
            buoy_p = g.to_physical(g.leray_hat(g.dealias(g.to_spectral(n * state.grad_phi))))
            out["buoy_forcing"] = g.inner(lap_u, buoy_p)
    else:
        for key in CROSS_TERM_COLUMNS:
            out[key] = math.nan
    return out


class Trajectory:
    """Uniformly sampled time series of functional values.

    Columns are numpy arrays addressed by name; ``metadata`` holds run
    provenance (config hash, eps, mu, grid) as plain strings or numbers.
    """

    def __init__(self, columns=None, metadata=None):
        self._data = {k: list(v) for k, v in (columns or {}).items()}
        self.metadata = dict(metadata or {})

    @classmethod
    def from_arrays(cls, t, metadata=None, **columns):
        cols = {"t": np.asarray(t, dtype=float)}
        for k, v in columns.items():
            cols[k] = np.broadcast_to(np.asarray(v, dtype=float), cols["t"].shape)
        return cls(cols, metadata)

    def append(self, sample):
        if not self._data:
            self._data = {k: [] for k in sample}
        for k in self._data:
            self._data[k].append(float(sample[k]))

    @property
    def columns(self):
        return list(self._data)

    def __contains__(self, name):
        return name in self._data

    def __getitem__(self, name):
        if name not in self._data:
            raise UsageError(f"trajectory has no column {name!r}; available: {self.columns}")
        return np.asarray(self._data[name], dtype=float)

    def __len__(self):
        return len(self._data.get("t", ()))

    @property
    def t(self):
        return self["t"]

    @property
    def h(self):
        t = self.t
        if t.size < 2:
            raise UsageError("trajectory needs at least two samples to define a step")
        return float(t[1] - t[0])

    def last_sample(self):
        if not len(self):
            return None
        return {k: v[-1] for k, v in self._data.items()}

    def validate(self, rtol=1e-12):
        """Check strictly increasing, uniformly spaced times."""
        t = self.t
        if t.size < 2:
            return self
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise UsageError("trajectory times must be strictly increasing")
        scale = max(abs(t[-1]), abs(t[0]), 1.0)
        if np.max(np.abs(dt - dt[0])) > rtol * scale:
            raise UsageError("trajectory times must be uniformly spaced")
        return self

    def require(self, *names):
        missing = [n for n in names if n not in self._data]
        if missing:
            raise UsageError(f"trajectory is missing required column(s): {', '.join(missing)}")

    # -- persistence ------------------------------------------------------

    def to_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"# {k}={_meta_str(v)}" for k, v in self.metadata.items()]
        lines.append(",".join(self.columns))
        arrays = [self[k] for k in self.columns]
        for row in zip(*arrays):
            lines.append(",".join(_fmt(x) for x in row))
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def from_csv(cls, path):
        metadata, header, rows = {}, None, []
        with open(path) as fh:
            for raw in fh:
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, sep, value = line[1:].strip().partition("=")
                    if sep:
                        metadata[key.strip()] = value.strip()
                    continue
                if header is None:
                    header = line.split(",")
                    continue
                rows.append([float(x) for x in line.split(",")])
        if header is None:
            raise UsageError(f"{path}: no header row")
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        return cls({k: data[:, i] for i, k in enumerate(header)}, metadata)


def _fmt(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _meta_str(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class TrajectoryRecorder:
    """Append-only writer that also accumulates the space-time integrals."""

    def __init__(self, config, grid):
        self.config = config
        self.trajectory = Trajectory(
            metadata={
                "config_hash": config.config_hash(),
                "eps": config.eps,
                "mu": config.mu,
                "kappa": config.kappa,
                "dims": grid.dims,
                "grid": grid.points_per_axis,
                "box_length": grid.box_length,
                "dt": config.dt,
                "sample_stride": config.sample_stride,
            }
        )
        self._prev = None

    def record(self, state, n=None, c=None, t=None):
        cfg = self.config
        sample = compute_functionals(
            state, cfg.mu, cfg.kappa, n=n, c=c, cross_terms=cfg.cross_terms,
            positivity_tol=cfg.positivity_tol,
        )
        if t is not None:
            sample["t"] = float(t)
        prev = self._prev
        pairs = (("cum_grad_sqrt_n", "grad_sqrt_n"), ("cum_hess_c", "hess_c"), ("cum_grad_u", "y2"))
        for cum, rate in pairs:
            if prev is None:
                sample[cum] = 0.0
            else:
                dt = sample["t"] - prev["t"]
                sample[cum] = prev[cum] + 0.5 * dt * (prev[rate] + sample[rate])
        self.trajectory.append(sample)
        self._prev = sample
        return sample


# -- trajectory functionals ------------------------------------------------


def ls_norm(traj, name, s):
    """``(int |v|^s dt)^{1/s}`` by the composite trapezoid rule."""
    if not s > 0:
        raise UsageError(f"exponent s must be positive, got {s}")
    if len(traj) == 0:
        raise UsageError("empty trajectory")
    v = np.abs(traj[name])
    if v.size == 1:
        return 0.0
    integral = float(np.trapezoid(v**s, traj.t))
    return integral ** (1.0 / s)


def energy_balance(traj, t0_index, t_index):
    """Both sides of the kinetic energy inequality between two samples.

    Returns ``(lhs, rhs)`` with ``lhs = kinetic(t) + int y2`` and
    ``rhs = kinetic(t0) + int buoyancy_work``.
    """
    traj.require("kinetic", "y2", "buoyancy_work")
    if t0_index > t_index:
        raise UsageError("t0_index must not exceed t_index")
    sl = slice(t0_index, t_index + 1)
    t = traj.t[sl]
    lhs = traj["kinetic"][t_index] + float(np.trapezoid(traj["y2"][sl], t))
    rhs = traj["kinetic"][t0_index] + float(np.trapezoid(traj["buoyancy_work"][sl], t))
    return lhs, rhs


def energy_residual(traj, t0_index, t_index, relative=False):
    """``lhs - rhs`` of the energy inequality; optionally over ``max(|lhs|, |rhs|)``."""
    lhs, rhs = energy_balance(traj, t0_index, t_index)
    res = lhs - rhs
    if relative:
        scale = max(abs(lhs), abs(rhs))
        return res / scale if scale > 0 else 0.0
    return res


def _quasi_energy_parts(traj):
    traj.require("quasi_energy", "fisher_n", "fisher_c", "y2")
    q = traj["quasi_energy"]
    if np.any(~np.isfinite(q)):
        raise UsageError("quasi-energy is absent at some samples (c below floor)")
    dq = np.gradient(q, traj.t, edge_order=2)
    diss = traj["fisher_n"] + traj["fisher_c"] + traj["y2"]
    return dq, diss


def fit_quasi_energy_constant(traj, quantile=1.0):
    """Smallest ``K`` with ``Q' + D / K <= K`` at the requested fraction of samples.

    ``Q`` is the quasi-energy and ``D = int |grad n|^2/n + int |grad c|^4/c^3
    + int |grad u|^2``.  At each sample the admissible ``K`` solve
    ``K^2 - Q' K - D >= 0``.
    """
    dq, diss = _quasi_energy_parts(traj)
    k_min = 0.5 * (dq + np.sqrt(dq**2 + 4 * np.maximum(diss, 0.0)))
    return float(np.quantile(k_min, quantile, method="higher"))


def quasi_energy_fraction(traj, K):
    """Fraction of samples satisfying ``Q' + D / K <= K``."""
    dq, diss = _quasi_energy_parts(traj)
    ok = dq + diss / K <= K * (1 + 1e-12)
    return float(np.mean(ok))
