"""Regularized chemotaxis-Navier-Stokes model on the periodic box.

The state ``(n, c, u)`` evolves under

    n_t = Laplacian n - div(n F'_eps(n) grad c) - div(n u)
    c_t = Laplacian c - F_eps(n) c - u . grad c
    u_t = P[Laplacian u - (Y_eps u . grad) u + n grad Phi]

with ``F_eps(s) = log(1 + eps s) / eps`` and ``Y_eps = (1 + eps A)^{-1}``.
Diffusion is integrated exactly through a spectral integrating factor; the
remaining terms use the explicit midpoint rule.  State is held in spectral
space so the zero mode of ``n`` (the mass) is never touched by round-off.
"""

import hashlib
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .exceptions import BlowUpError, ConfigurationError, DomainError, InvariantViolation
from .spectral import Grid

logger = logging.getLogger(__name__)

__all__ = [
    "f_eps",
    "f_eps_prime",
    "SimulationState",
    "RunConfig",
    "SimulationRun",
    "rhs_n",
    "rhs_c",
    "rhs_u",
    "imex_step",
    "simulate",
    "make_initial_data",
    "make_potential",
    "parse_preset",
    "cfl_number",
    "MIN_SIM_POINTS",
]

MIN_SIM_POINTS = 16


def f_eps(s, eps):
    """``F_eps(s) = log(1 + eps s) / eps`` for ``s >= 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("F_eps is defined for s >= 0 only")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    out = np.log1p(eps * s) / eps
    return out if out.ndim else float(out)


def f_eps_prime(s, eps):
    """``F'_eps(s) = 1 / (1 + eps s)``, which lies in ``(0, 1]``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("F'_eps is defined for s >= 0 only")
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    out = 1.0 / (1.0 + eps * s)
    return out if out.ndim else float(out)


# -- state -------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationState:
    """Full PDE state at one instant, stored as Fourier coefficients.

    ``grad_phi`` is the (physical) gradient of the potential; ``None`` means
    no buoyancy.
    """

    grid: Grid
    n_hat: np.ndarray
    c_hat: np.ndarray
    u_hat: np.ndarray
    t: float = 0.0
    eps: float = 0.1
    grad_phi: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_fields(cls, grid, n, c, u, t=0.0, eps=0.1, grad_phi=None):
        n = np.broadcast_to(np.asarray(n, dtype=float), grid.shape)
        c = np.broadcast_to(np.asarray(c, dtype=float), grid.shape)
        u = np.broadcast_to(np.asarray(u, dtype=float), (grid.dims, *grid.shape))
        if grad_phi is not None:
            grad_phi = np.broadcast_to(np.asarray(grad_phi, dtype=float), u.shape).copy()
        return cls(
            grid,
            grid.to_spectral(n),
            grid.to_spectral(c),
            grid.to_spectral(u),
            float(t),
            float(eps),
            grad_phi,
        )

    @property
    def n(self):
        return self.grid.to_physical(self.n_hat)

    @property
    def c(self):
        return self.grid.to_physical(self.c_hat)

    @property
    def u(self):
        return self.grid.to_physical(self.u_hat)

    @property
    def mass(self):
        g = self.grid
        return float(self.n_hat.flat[0].real) * g.volume / g.npoints

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.n_hat))
            and np.all(np.isfinite(self.c_hat))
            and np.all(np.isfinite(self.u_hat))
        )


def _nonlinear_terms(state):
    """Explicit (non-diffusive) tendencies in spectral space.

    Returns ``(Nn, Nc, Nu, n, c)`` where ``n``, ``c`` are the physical fields
    already computed along the way (reused by the monitors).
    """
    g = state.grid
    eps = state.eps
    n = g.to_physical(state.n_hat)
    c = g.to_physical(state.c_hat)
    u = g.to_physical(state.u_hat)
    grad_c = g.to_physical(g.grad_hat(state.c_hat))
    # F_eps and F'_eps are evaluated at n_+ so round-off undershoot stays in their domain
    n_pos = np.maximum(n, 0.0)

    flux = n * (1.0 / (1.0 + eps * n_pos)) * grad_c + n * u
    Nn = -g.div_hat(g.dealias(g.to_spectral(flux)))

    react = (np.log1p(eps * n_pos) / eps) * c + np.sum(u * grad_c, axis=0)
    Nc = -g.dealias(g.to_spectral(react))

    force = -_advection(g, state.u_hat, eps)
    if state.grad_phi is not None:
        force = force + n * state.grad_phi
    Nu = g.leray_hat(g.dealias(g.to_spectral(force)))
    return Nn, Nc, Nu, n, c


def _advection(g, u_hat, eps):
    """Physical ``(Y_eps u . grad) u``."""
    yu = g.to_physical(u_hat / (1.0 + eps * g.k2))
    kd = np.stack(np.broadcast_arrays(*g.derivative_wavenumbers))
    grad_u = g.to_physical(1j * kd[None, :] * u_hat[:, None])  # [i, j] = d_j u_i
    return np.einsum("j...,ij...->i...", yu, grad_u)


def rhs_n(state):
    """Full right-hand side of the density equation (physical field)."""
    Nn = _nonlinear_terms(state)[0]
    g = state.grid
    return g.to_physical(g.laplacian_hat(state.n_hat) + Nn)


def rhs_c(state):
    Nc = _nonlinear_terms(state)[1]
    g = state.grid
    return g.to_physical(g.laplacian_hat(state.c_hat) + Nc)


def rhs_u(state):
    Nu = _nonlinear_terms(state)[2]
    g = state.grid
    return g.to_physical(g.leray_hat(g.laplacian_hat(state.u_hat)) + Nu)


@lru_cache(maxsize=32)
def _heat_factors(grid, dt):
    return np.exp(-grid.k2 * dt), np.exp(-grid.k2 * dt / 2)


def imex_step(state, dt, _terms=None):
    """Advance one step of integrating-factor explicit midpoint.

    ``_terms`` lets :func:`simulate` pass the tendencies it already computed
    for the monitors at the current state.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    g = state.grid
    E, Eh = _heat_factors(g, float(dt))
    Nn, Nc, Nu = (_terms or _nonlinear_terms(state))[:3]

    mid = replace(
        state,
        n_hat=Eh * (state.n_hat + 0.5 * dt * Nn),
        c_hat=Eh * (state.c_hat + 0.5 * dt * Nc),
        u_hat=g.leray_hat(Eh * (state.u_hat + 0.5 * dt * Nu)),
        t=state.t + 0.5 * dt,
    )
    Nn, Nc, Nu = _nonlinear_terms(mid)[:3]
    return replace(
        state,
        n_hat=E * state.n_hat + dt * Eh * Nn,
        c_hat=E * state.c_hat + dt * Eh * Nc,
        u_hat=g.leray_hat(E * state.u_hat + dt * Eh * Nu),
        t=state.t + dt,
    )


def cfl_number(state, dt, n=None, c=None):
    """Advective CFL number ``dt * k_max * max|u + F'(n) grad c|`` on the dealiased band."""
    g = state.grid
    n = g.to_physical(state.n_hat) if n is None else n
    vel = g.to_physical(state.u_hat)
    chemo = g.to_physical(g.grad_hat(state.c_hat)) / (1.0 + state.eps * np.maximum(n, 0))
    speed = np.sqrt(np.sum(vel**2, axis=0)) + np.sqrt(np.sum(chemo**2, axis=0))
    kmax = (2 * np.pi / g.box_length) * (g.points_per_axis // 3)
    return float(dt * kmax * np.max(speed))


# -- presets -----------------------------------------------------------------

_PRESET_RE = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_preset(spec):
    """Split ``"name(a, b, key=value)"`` into ``(name, args, kwargs)``."""
    m = _PRESET_RE.match(spec)
    if not m:
        raise ConfigurationError(f"malformed preset {spec!r}")
    name, body = m.group(1).lower(), m.group(2)
    args, kwargs = [], {}
    if body and body.strip():
        for item in body.split(","):
            item = item.strip()
            key, sep, value = item.partition("=")
            try:
                if sep:
                    kwargs[key.strip()] = float(value)
                else:
                    args.append(float(item))
            except ValueError:
                raise ConfigurationError(f"non-numeric preset argument {item!r} in {spec!r}") from None
    return name, args, kwargs


def _bind(name, args, kwargs, defaults):
    keys = list(defaults)
    if len(args) > len(keys):
        raise ConfigurationError(f"preset {name!r} takes at most {len(keys)} arguments")
    params = dict(defaults)
    params.update(zip(keys, args))
    unknown = set(kwargs) - set(keys)
    if unknown:
        raise ConfigurationError(f"preset {name!r} has no parameter(s) {sorted(unknown)}")
    params.update(kwargs)
    return params


def _periodic_gaussian(grid, center, width):
    r2 = 0.0
    L = grid.box_length
    for x, x0 in zip(grid.coords, center):
        d = (x - x0 + L / 2) % L - L / 2
        r2 = r2 + d**2
    return np.exp(-r2 / (2 * width**2))


def _taylor_green(grid, amplitude):
    x = grid.coords
    s = 2 * np.pi / grid.box_length
    if grid.dims == 2:
        ux = np.sin(s * x[0]) * np.cos(s * x[1])
        uy = -np.cos(s * x[0]) * np.sin(s * x[1])
        return amplitude * np.stack([ux, uy])
    ux = np.sin(s * x[0]) * np.cos(s * x[1]) * np.cos(s * x[2])
    uy = -np.cos(s * x[0]) * np.sin(s * x[1]) * np.cos(s * x[2])
    return amplitude * np.stack([ux, uy, np.zeros_like(ux)])


def _smooth_random(grid, rng, modes, components=None):
    """Random trigonometric polynomial with ``|m| <= modes``, max modulus 1."""
    shape = grid.shape if components is None else (components, *grid.shape)
    f_hat = grid.to_spectral(rng.standard_normal(shape))
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for m in grid.mode_indices:
        keep &= np.abs(m) <= modes
    f_hat = f_hat * keep
    f_hat[(Ellipsis,) + (0,) * grid.dims] = 0.0
    f = grid.to_physical(f_hat)
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def make_initial_data(grid, spec, seed=0, allow_empty=False):
    """Build ``(n0, c0, u0)`` from a named preset string.

    Presets
    -------
    ``uniform(n=1, c=1, u=0)``
        Constant fields; ``u`` is a constant velocity along the first axis.
    ``gaussian-bump(mass, width=0.6, background=0.25, c=1, c_peak=0.5, c_width=1.0, u=0)``
        Periodic Gaussian cell cluster on a background (fraction of the mean
        density) with total mass ``mass`` (default: box volume), oxygen
        ``c * (1 - c_peak + c_peak * G)`` peaked a quarter box away, and an
        optional Taylor-Green velocity of amplitude ``u``.
    ``random-smooth(amplitude=0.3, modes=3, n=1, c=1, u=0.1)``
        Seeded trigonometric perturbations of the given means.
    ``taylor-green(amplitude=1, n=1, c=1)``
        Taylor-Green vortex velocity over uniform ``n`` and ``c``.

    All fields are truncated to the dealiased band; ``u0`` is Leray-projected.
    """
    name, args, kwargs = parse_preset(spec)
    shape = grid.shape
    vshape = (grid.dims, *shape)
    L = grid.box_length
    if name == "uniform":
        p = _bind(name, args, kwargs, {"n": 1.0, "c": 1.0, "u": 0.0})
        n0 = np.full(shape, p["n"])
        c0 = np.full(shape, p["c"])
        u0 = np.zeros(vshape)
        u0[0] = p["u"]
    elif name == "gaussian-bump":
        p = _bind(
            name,
            args,
            kwargs,
            {"mass": grid.volume, "width": 0.6, "background": 0.25, "c": 1.0,
             "c_peak": 0.5, "c_width": 1.0, "u": 0.0},
        )
        if p["width"] <= 0 or p["c_width"] <= 0:
            raise ConfigurationError("gaussian-bump widths must be positive")
        if not 0 <= p["background"] <= 1:
            raise ConfigurationError("gaussian-bump background must lie in [0, 1]")
        center = [L / 2] * grid.dims
        bump = _dealiased(grid, _periodic_gaussian(grid, center, p["width"]))
        bg = p["background"] * p["mass"] / grid.volume
        n0 = bg + (p["mass"] - bg * grid.volume) * bump / grid.integrate(bump)
        c_center = [L / 2 + L / 4] + [L / 2] * (grid.dims - 1)
        c_bump = _periodic_gaussian(grid, c_center, p["c_width"])
        c0 = p["c"] * (1 - p["c_peak"] + p["c_peak"] * c_bump)
        u0 = _taylor_green(grid, p["u"])
    elif name == "random-smooth":
        p = _bind(name, args, kwargs, {"amplitude": 0.3, "modes": 3, "n": 1.0, "c": 1.0, "u": 0.1})
        if not 0 <= p["amplitude"] < 1:
            raise ConfigurationError("random-smooth amplitude must lie in [0, 1)")
        rng = np.random.default_rng(int(seed))
        modes = int(p["modes"])
        n0 = p["n"] * (1 + p["amplitude"] * _smooth_random(grid, rng, modes))
        c0 = p["c"] * (1 + p["amplitude"] * _smooth_random(grid, rng, modes))
        u0 = p["u"] * _smooth_random(grid, rng, modes, components=grid.dims)
    elif name == "taylor-green":
        p = _bind(name, args, kwargs, {"amplitude": 1.0, "n": 1.0, "c": 1.0})
        n0 = np.full(shape, p["n"])
        c0 = np.full(shape, p["c"])
        u0 = _taylor_green(grid, p["amplitude"])
    else:
        raise ConfigurationError(f"unknown initial-data preset {name!r}")

    n0 = _dealiased(grid, n0)
    c0 = _dealiased(grid, c0)
    u0 = grid.to_physical(grid.leray_hat(grid.dealias(grid.to_spectral(u0))))
    if not allow_empty and not grid.integrate(n0) > 0:
        raise ConfigurationError(f"preset {spec!r} yields n0 == 0; a nontrivial cell density is required")
    if np.min(n0) < -1e-12 or np.min(c0) < -1e-12:
        raise ConfigurationError(f"preset {spec!r} yields negative initial data")
    return n0, c0, u0


def _dealiased(grid, f):
    return grid.to_physical(grid.dealias(grid.to_spectral(f)))


def make_potential(grid, spec):
    """Gradient of the potential for ``zero`` or ``sine(amplitude=1, axis=-1)``.

    ``sine`` is ``amplitude * sin(2 pi x_axis / L)``, a periodic stand-in for
    a linear gravitational potential.  Returns ``None`` for ``zero``.
    """
    name, args, kwargs = parse_preset(spec)
    if name == "zero":
        _bind(name, args, kwargs, {})
        return None
    if name == "sine":
        p = _bind(name, args, kwargs, {"amplitude": 1.0, "axis": -1})
        axis = int(p["axis"]) % grid.dims
        s = 2 * np.pi / grid.box_length
        gp = np.zeros((grid.dims, *grid.shape))
        gp[axis] = p["amplitude"] * s * np.cos(s * grid.coords[axis])
        return gp
    raise ConfigurationError(f"unknown potential preset {name!r}")


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    File keys match the field names; ``grid`` and ``epsilon`` are accepted
    as aliases of ``points_per_axis`` and ``eps``.
    """

    dims: int = 2
    points_per_axis: int = 32
    box_length: float = 2 * math.pi
    eps: float = 0.1
    mu: float = 1.0 / 3.0
    kappa: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    initial: str = "gaussian-bump"
    potential: str = "zero"
    sample_stride: int = 10
    snapshot_stride: int = 0
    seed: int = 0
    positivity_tol: float = 1e-6
    maxprinciple_tol: float = 1e-6
    mass_tol: float = 1e-10
    cross_terms: bool = True
    allow_empty: bool = False
    strict: bool = False
    output_dir: str = ""

    _ALIASES = {"grid": "points_per_axis", "epsilon": "eps", "horizon": "T"}

    def __post_init__(self):
        if self.points_per_axis < MIN_SIM_POINTS:
            raise _invalid(
                "points_per_axis",
                f"grid must be at least {MIN_SIM_POINTS} points per axis, got {self.points_per_axis}",
            )
        try:
            Grid(self.dims, self.points_per_axis, self.box_length)
        except ConfigurationError as exc:
            raise _invalid("points_per_axis", str(exc)) from None
        if not 0 < self.eps < 1:
            raise _invalid("eps", f"eps must lie in (0, 1), got {self.eps}")
        for key in ("dt", "T", "mu", "kappa"):
            if not getattr(self, key) > 0:
                raise _invalid(key, f"{key} must be positive, got {getattr(self, key)}")
        if self.sample_stride < 1:
            raise _invalid("sample_stride", "sample_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise _invalid("snapshot_stride", "snapshot_stride must be >= 0")
        for key in ("initial", "potential"):
            try:
                parse_preset(getattr(self, key))
            except ConfigurationError as exc:
                raise _invalid(key, str(exc)) from None

    @property
    def grid(self):
        return Grid(self.dims, self.points_per_axis, self.box_length)

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    @classmethod
    def from_mapping(cls, mapping, line_numbers=None):
        """Build from string values, converting to field types."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for raw_key, value in mapping.items():
            key = cls._ALIASES.get(raw_key, raw_key)
            line = (line_numbers or {}).get(raw_key)
            if key not in types or key.startswith("_"):
                raise ConfigurationError(f"unknown config key {raw_key!r}", line)
            kwargs[key] = _convert(key, types[key], value, line)
        try:
            return cls(**kwargs)
        except ConfigurationError as exc:
            lines = {cls._ALIASES.get(k, k): v for k, v in (line_numbers or {}).items()}
            key = getattr(exc, "key", None)
            if exc.line is None and key in lines:
                raise ConfigurationError(str(exc), lines[key]) from None
            raise

    @classmethod
    def from_file(cls, path, overrides=None):
        """Read a ``key = value`` file (``#`` comments); ``overrides`` win."""
        mapping, lines = {}, {}
        text = Path(path).read_text()
        for i, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", i)
            mapping[key.strip()] = value.strip()
            lines[key.strip()] = i
        for key, value in (overrides or {}).items():
            mapping[key] = value
            lines.pop(key, None)
        return cls.from_mapping(mapping, lines)

    def to_text(self):
        """Canonical ``key = value`` rendering (used for hashing and provenance)."""
        out = []
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            out.append(f"{f.name} = {_render(getattr(self, f.name))}")
        return "\n".join(out) + "\n"

    def config_hash(self):
        lines = [ln for ln in self.to_text().splitlines() if not ln.startswith("output_dir")]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def _invalid(key, message):
    exc = ConfigurationError(message)
    exc.key = key
    return exc


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key, typ, value, line):
    if not isinstance(value, str):
        return value
    name = typ if isinstance(typ, str) else typ.__name__
    try:
        if name == "bool":
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if name == "int":
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError(value)
            return int(as_float)
        if name == "float":
            if "/" in value:
                num, den = value.split("/", 1)
                return float(num) / float(den)
            return float(value)
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"cannot parse {key} = {value!r} as {name}", line) from None
    return value


def initial_state(config):
    grid = config.grid
    n0, c0, u0 = make_initial_data(grid, config.initial, seed=config.seed, allow_empty=config.allow_empty)
    return SimulationState.from_fields(
        grid, n0, c0, u0, t=0.0, eps=config.eps, grad_phi=make_potential(grid, config.potential)
    )


# -- driver ------------------------------------------------------------------


@dataclass
class SimulationRun:
    """Outcome of :func:`simulate`."""

    config: RunConfig
    trajectory: object
    state: SimulationState
    blew_up: bool = False
    violations: list = field(default_factory=list)
    steps: int = 0
    snapshots: list = field(default_factory=list)
    error: Exception = None


def simulate(config, state=None, output_dir=None, snapshot_writer=None):
    """Advance from ``t = 0`` to ``T`` and record a diagnostic trajectory.

    Monitors (mass, positivity, maximum principle) are evaluated every step;
    violations are collected, or raised when ``config.strict`` is set.  A
    loss of finiteness stops the run with ``blew_up = True``; the partial
    trajectory is kept (and written when ``output_dir`` is given).
    """
    from .diagnostics import TrajectoryRecorder

    if state is None:
        state = initial_state(config)
    grid = state.grid
    recorder = TrajectoryRecorder(config, grid)
    mass0 = state.mass
    n_init = state.n
    c0max = float(np.max(state.c))
    dt = config.dt
    n_steps = config.n_steps
    run = SimulationRun(config, recorder.trajectory, state)

    cfl = cfl_number(state, dt, n=n_init)
    if cfl > 1.0:
        logger.warning("initial CFL number %.3g exceeds 1; reduce dt", cfl)

    step = 0
    try:
        while True:
            terms = _nonlinear_terms(state)
            n, c = terms[3], terms[4]
            _monitor(run, config, state, n, c, mass0, c0max)
            if step % config.sample_stride == 0:
                recorder.record(state, n=n, c=c, t=step * dt)
            if snapshot_writer is not None and config.snapshot_stride and step % config.snapshot_stride == 0:
                run.snapshots.append(snapshot_writer(state, step))
            if step == n_steps:
                break
            # overflow is expected on the way to blow-up; finiteness is checked below
            with np.errstate(over="ignore", invalid="ignore"):
                new = imex_step(state, dt, _terms=terms)
            new = replace(new, t=(step + 1) * dt)
            if not new.is_finite():
                run.blew_up = True
                last = recorder.trajectory.last_sample()
                logger.error("blow-up at step %d (t=%.6g); last sample %s", step + 1, new.t, last)
                run.error = BlowUpError(step + 1, new.t, last)
                break
            state = new
            step += 1
    finally:
        run.state = state
        run.steps = step
        recorder.trajectory.metadata["blew_up"] = run.blew_up
        recorder.trajectory.metadata["violations"] = len(run.violations)
        if output_dir is not None:
            recorder.trajectory.to_csv(Path(output_dir) / "trajectory.csv")
    return run


def _monitor(run, config, state, n, c, mass0, c0max):
    checks = []
    mass = state.grid.integrate(n)
    drift = abs(mass - mass0) / abs(mass0) if mass0 else abs(mass)
    checks.append(("mass drift", drift, config.mass_tol))
    checks.append(("-min n", -float(np.min(n)), config.positivity_tol))
    checks.append(("-min c", -float(np.min(c)), config.positivity_tol))
    checks.append(("max c - max c0", float(np.max(c)) - c0max, config.maxprinciple_tol))
    for quantity, value, bound in checks:
        if value > bound:
            err = InvariantViolation(quantity, value, bound, state.t)
            if config.strict:
                raise err
            if not run.violations:
                logger.warning("%s", err)
            run.violations.append(err)
