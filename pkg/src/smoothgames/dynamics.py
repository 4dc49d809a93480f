"""Averaging dynamics driven by the smoothed response map.

One step moves x to (1 - eta) x + eta Phi(x).  The module records
trajectories and contraction ratios against a reference equilibrium,
classifies fixed points by the linearized map (1 - eta) I + eta dPhi, and
sweeps (beta, eta) grids the way the stability phase diagrams are produced.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, GameError
from .games import JointStrategy, NormalFormGame, uniform_strategy
from .response import (SmoothedEquilibrium, SmoothedResponseConfig,
                       find_smoothed_equilibrium, response_jacobian,
                       smoothed_best_response)
from .stability import perturb_strategy

SAMPLE_BALL_RADIUS = 0.05  # inf-norm radius for Lipschitz sampling
CLASSIFICATION_TOL = 1e-9


@dataclass(frozen=True)
class DynamicsConfig:
    """Learning rate, response map, horizon, and recording cadence."""

    eta: float
    response: SmoothedResponseConfig
    horizon: int
    record_every: int = 1

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ArgumentError(f"eta must lie in (0, 1), got {self.eta}")
        if self.horizon < 1:
            raise ArgumentError("horizon must be at least 1")
        if self.record_every < 1:
            raise ArgumentError("record_every must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded orbit of the averaging dynamics.

    ``points`` holds x(t) for t = 0, record_every, 2*record_every, ...;
    ``final_point`` is x(horizon) regardless of cadence.  ``distances``
    holds ``|x(t) - ref|`` for every step when a reference was supplied.
    """

    config: DynamicsConfig
    points: tuple
    final_point: JointStrategy
    distances: tuple = None

    def ratios(self) -> np.ndarray:
        """Per-step contraction factors; nan where the orbit has arrived."""
        if self.distances is None:
            raise ArgumentError("trajectory was run without a reference")
        d = np.asarray(self.distances)
        out = np.full(len(d) - 1, np.nan)
        nonzero = d[:-1] > 0
        out[nonzero] = d[1:][nonzero] / d[:-1][nonzero]
        return out


def step(game: NormalFormGame, cfg: DynamicsConfig,
         x: JointStrategy) -> JointStrategy:
    """One averaging update, renormalized defensively against drift."""
    y = smoothed_best_response(game, cfg.response, x)
    blocks = []
    for bx, by in zip(x.blocks, y.blocks):
        mixed = (1.0 - cfg.eta) * bx + cfg.eta * by
        blocks.append(mixed / mixed.sum())
    return JointStrategy(tuple(blocks))


def run(game: NormalFormGame, cfg: DynamicsConfig, x0: JointStrategy,
        reference: SmoothedEquilibrium = None) -> Trajectory:
    """Iterate the dynamics for the configured horizon."""
    if x0.shape != game.shape:
        raise DimensionError(
            f"x0 shape {x0.shape} does not match game shape {game.shape}")
    ref_vec = (reference.point.concatenated()
               if reference is not None else None)
    x = x0
    points = [x]
    distances = None
    if ref_vec is not None:
        distances = [float(np.linalg.norm(x.concatenated() - ref_vec))]
    for t in range(1, cfg.horizon + 1):
        x = step(game, cfg, x)
        if t % cfg.record_every == 0:
            points.append(x)
        if ref_vec is not None:
            distances.append(float(np.linalg.norm(x.concatenated() - ref_vec)))
    return Trajectory(config=cfg, points=tuple(points), final_point=x,
                      distances=tuple(distances) if distances else None)


# ---------------------------------------------------------------------------
# linearized classification

@dataclass(frozen=True)
class StabilityVerdict:
    equilibrium: SmoothedEquilibrium
    jacobian_spectral_radius: float
    jacobian_operator_norm: float
    classification: str  # asymptotically_stable | unstable | marginal


def stability_verdict(game: NormalFormGame, cfg: DynamicsConfig,
                      eq: SmoothedEquilibrium) -> StabilityVerdict:
    """Classify a smoothed equilibrium by the linearized update map.

    The Jacobian (1 - eta) I + eta dPhi is reduced to tangent coordinates
    first; the ambient matrix carries spurious (1 - eta) directions along
    the simplex normals that would pollute both the radius and the norm.
    """
    grad_phi = response_jacobian(game, cfg.response, eq.point, as_tangent=True)
    m = (1.0 - cfg.eta) * np.eye(grad_phi.shape[0]) + cfg.eta * grad_phi
    radius = float(np.abs(np.linalg.eigvals(m)).max(initial=0.0))
    op_norm = float(np.linalg.norm(m, 2)) if m.size else 0.0
    if radius < 1.0 - CLASSIFICATION_TOL:
        label = "asymptotically_stable"
    elif radius > 1.0 + CLASSIFICATION_TOL:
        label = "unstable"
    else:
        label = "marginal"
    return StabilityVerdict(equilibrium=eq, jacobian_spectral_radius=radius,
                            jacobian_operator_norm=op_norm,
                            classification=label)


def measure_response_lipschitz(game: NormalFormGame,
                               cfg: SmoothedResponseConfig,
                               x: JointStrategy) -> float:
    """Operator norm of H^+ J at one point (beta times the response slope)."""
    grad_phi = response_jacobian(game, cfg, x, as_tangent=True)
    if grad_phi.size == 0:
        return 0.0
    return float(cfg.beta * np.linalg.norm(grad_phi, 2))


def eta_threshold(game: NormalFormGame, cfg: SmoothedResponseConfig,
                  eq: SmoothedEquilibrium, num_samples=8, rng_seed=0,
                  radius=SAMPLE_BALL_RADIUS) -> float:
    """Learning-rate threshold beta^2 / (1 + L^2).

    L is the largest measured norm of H^+ J over the equilibrium and
    ``num_samples`` random points from the inf-norm ball of the given
    radius (clipped to the simplex).  The radius is an artifact of the
    measurement, not of the theory, so callers reporting the threshold
    should report the radius with it.
    """
    rng = np.random.default_rng(rng_seed)
    lipschitz = measure_response_lipschitz(game, cfg, eq.point)
    for _ in range(num_samples):
        point = perturb_strategy(eq.point, radius, rng)
        lipschitz = max(lipschitz, measure_response_lipschitz(game, cfg, point))
    return float(cfg.beta ** 2 / (1.0 + lipschitz ** 2))


# ---------------------------------------------------------------------------
# parameter sweeps

@dataclass(frozen=True)
class SweepCell:
    beta: float
    eta: float
    equilibrium: SmoothedEquilibrium = None
    verdict: StabilityVerdict = None
    final_distance: float = None
    error: str = None


def _sweep_cell(args):
    game, beta, eta, regularizers, x0, horizon, eq = args
    try:
        response_cfg = SmoothedResponseConfig(beta=beta,
                                              regularizers=regularizers)
        cfg = DynamicsConfig(eta=eta, response=response_cfg, horizon=horizon,
                             record_every=max(1, horizon))
        verdict = stability_verdict(game, cfg, eq)
        trajectory = run(game, cfg, x0, reference=eq)
        return SweepCell(beta=beta, eta=eta, equilibrium=eq, verdict=verdict,
                         final_distance=trajectory.distances[-1])
    except GameError as err:
        return SweepCell(beta=beta, eta=eta, equilibrium=eq,
                         error=f"{type(err).__name__}: {err}")


def sweep(game: NormalFormGame, betas, etas, regularizers, x0=None,
          horizon=2000, jobs=1, outer_tol=1e-10):
    """Equilibrium, verdict, and a finite run for every (beta, eta) cell.

    Equilibria are located once per beta by warm-started continuation from
    the largest beta downward; cells then run independently (in parallel
    when ``jobs`` > 1).  Cell errors are recorded in the cell, and the
    sweep continues.  The returned grid is row-major in (betas, etas) as
    given, independent of scheduling.
    """
    betas = [float(b) for b in betas]
    etas = [float(e) for e in etas]
    if not betas or not etas:
        raise ArgumentError("betas and etas must be non-empty")
    if x0 is None:
        x0 = uniform_strategy(game.shape)

    equilibria = {}
    errors = {}
    warm = x0
    for beta in sorted(set(betas), reverse=True):
        try:
            cfg = SmoothedResponseConfig(beta=beta, regularizers=regularizers)
            eq = find_smoothed_equilibrium(game, cfg, warm,
                                           outer_tol=outer_tol)
            equilibria[beta] = eq
            warm = eq.point
        except GameError as err:
            errors[beta] = f"{type(err).__name__}: {err}"

    tasks = []
    layout = []
    for beta in betas:
        for eta in etas:
            if beta in errors:
                layout.append(SweepCell(beta=beta, eta=eta,
                                        error=errors[beta]))
            else:
                layout.append(None)
                tasks.append((game, beta, eta, tuple(regularizers), x0,
                              horizon, equilibria[beta]))

    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            computed = list(pool.map(_sweep_cell, tasks))
    else:
        computed = [_sweep_cell(t) for t in tasks]

    cells = []
    cursor = 0
    for cell in layout:
        if cell is None:
            cells.append(computed[cursor])
            cursor += 1
        else:
            cells.append(cell)
    return tuple(cells)


# ---------------------------------------------------------------------------
# CSV export

def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


def _block_headers(shape) -> list:
    return [f"p{n}_{i}" for n, k in enumerate(shape) for i in range(k)]


def trajectory_to_csv(trajectory: Trajectory, path,
                      verdict: StabilityVerdict = None):
    """Write recorded points with distances and the verdict, if available."""
    shape = trajectory.points[0].shape
    rec = trajectory.config.record_every
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + _block_headers(shape)
                        + ["distance", "spectral_radius", "classification"])
        for idx, point in enumerate(trajectory.points):
            t = idx * rec
            dist = (trajectory.distances[t]
                    if trajectory.distances is not None else None)
            writer.writerow(
                [str(t)] + [_fmt(p) for p in point.concatenated()]
                + [_fmt(dist),
                   _fmt(verdict.jacobian_spectral_radius) if verdict else "",
                   verdict.classification if verdict else ""])


def sweep_to_csv(cells, path):
    """Write one row per sweep cell; failed cells carry their error text."""
    shape = None
    for cell in cells:
        if cell.equilibrium is not None:
            shape = cell.equilibrium.point.shape
            break
    headers = _block_headers(shape) if shape is not None else []
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["beta", "eta"] + headers
                        + ["distance", "spectral_radius", "classification",
                           "error"])
        for cell in cells:
            probs = ([_fmt(p) for p in cell.equilibrium.point.concatenated()]
                     if cell.equilibrium is not None else [""] * len(headers))
            writer.writerow(
                [_fmt(cell.beta), _fmt(cell.eta)] + probs
                + [_fmt(cell.final_distance),
                   _fmt(cell.verdict.jacobian_spectral_radius)
                   if cell.verdict else "",
                   cell.verdict.classification if cell.verdict else "",
                   cell.error or ""])
