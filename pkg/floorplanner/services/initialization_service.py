"""
Initialization service.
Places modules by minimizing quadratic wirelength (hybrid clique/star net
model, Jacobi-preconditioned conjugate gradients), then pushes small key
modules to the die boundary.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from floorplanner.config import Config
from floorplanner.models import IO_BOUNDARY, OWNER_MODULE, Instance

logger = logging.getLogger(__name__)

# Nets with at most this many pins are decomposed as cliques.
CLIQUE_MAX_PINS = 3

# Edge endpoint: ("pin", pin index) or ("star", star index).
Endpoint = Tuple[str, int]


@dataclass(frozen=True)
class Edge:
    a: Endpoint
    b: Endpoint
    weight: float


@dataclass(frozen=True)
class NetDecomposition:
    edges: Tuple[Edge, ...]
    n_stars: int


@dataclass
class QpSystem:
    """
    Quadratic wirelength system for one axis: matrix @ u = rhs.

    Unknowns are the modules (0..N_m-1) followed by the star nodes.
    """

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    n_modules: int
    anchored_components: int = 0


@dataclass
class PcgResult:
    solution: np.ndarray
    iterations: int
    residual: float
    converged: bool


def hybrid_net_decompose(instance: Instance) -> NetDecomposition:
    """
    Decompose nets into weighted two-point edges.

    Nets with k <= 3 pins become cliques with weight 1/(k-1) per edge; larger
    nets get one star node joined to every pin with weight k/(k-1).
    """
    edges: List[Edge] = []
    n_stars = 0
    for net in instance.nets:
        k = len(net.pins)
        if k <= CLIQUE_MAX_PINS:
            weight = net.weight / (k - 1)
            for a in range(k):
                for b in range(a + 1, k):
                    edges.append(Edge(("pin", net.pins[a]), ("pin", net.pins[b]), weight))
        else:
            weight = net.weight * k / (k - 1)
            star = ("star", n_stars)
            n_stars += 1
            for pin in net.pins:
                edges.append(Edge(("pin", pin), star, weight))
    return NetDecomposition(tuple(edges), n_stars)


def terminal_positions(instance: Instance) -> np.ndarray:
    """
    Starting (x, y) of every I/O pin: fixed pins at their coordinates,
    boundary pins at their given start or the midpoint of their side.
    """
    die = instance.die
    positions = np.zeros((instance.n_io, 2))
    midpoints = {"L": (0.0, die.height / 2), "R": (die.width, die.height / 2),
                 "B": (die.width / 2, 0.0), "T": (die.width / 2, die.height)}
    for io in instance.io_pins:
        if io.x is not None and io.y is not None:
            positions[io.index] = (io.x, io.y)
        elif io.mode == IO_BOUNDARY:
            positions[io.index] = midpoints[io.side]
    return positions


def _resolve(instance: Instance, endpoint: Endpoint, axis: int,
             terminals: np.ndarray) -> Tuple[Optional[int], float]:
    """(unknown index or None when fixed, constant offset or fixed coordinate)."""
    kind, index = endpoint
    if kind == "star":
        return instance.n_modules + index, 0.0
    pin = instance.pins[index]
    if pin.owner_kind == OWNER_MODULE:
        return pin.owner, pin.x_offset if axis == 0 else pin.y_offset
    return None, float(terminals[pin.owner, axis])


def build_quadratic_system(instance: Instance, decomposition: NetDecomposition,
                           axis: int, terminals: Optional[np.ndarray] = None) -> QpSystem:
    """
    Assemble sum_e w_e (u_a + o_a - u_b - o_b)^2 for one axis (0 = x, 1 = y).

    Every connected component of unknowns without a fixed terminal receives one
    unit-weight anchor pulling its first unknown to the die center.
    """
    if terminals is None:
        terminals = terminal_positions(instance)
    size = instance.n_modules + decomposition.n_stars
    rows, cols, vals = [], [], []
    rhs = np.zeros(size)
    anchored = np.zeros(size, dtype=bool)

    for edge in decomposition.edges:
        ua, oa = _resolve(instance, edge.a, axis, terminals)
        ub, ob = _resolve(instance, edge.b, axis, terminals)
        w = edge.weight
        if ua is not None and ub is not None:
            if ua == ub:
                continue
            c = oa - ob
            rows += [ua, ub, ua, ub]
            cols += [ua, ub, ub, ua]
            vals += [w, w, -w, -w]
            rhs[ua] -= w * c
            rhs[ub] += w * c
        elif ua is not None or ub is not None:
            u, own, target = (ua, oa, ob) if ua is not None else (ub, ob, oa)
            rows.append(u)
            cols.append(u)
            vals.append(w)
            rhs[u] += w * (target - own)
            anchored[u] = True

    matrix = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    if size == 0:
        return QpSystem(matrix=matrix, rhs=rhs, n_modules=instance.n_modules)
    n_components, labels = connected_components(matrix, directed=False)
    center = (instance.die.width, instance.die.height)[axis] / 2
    extra = 0
    for component in range(n_components):
        members = np.flatnonzero(labels == component)
        if anchored[members].any():
            continue
        first = int(members[0])
        if first < instance.n_modules:
            size_along = (instance.modules[first].width, instance.modules[first].height)[axis]
            target = center - size_along / 2
        else:
            target = center
        rows.append(first)
        cols.append(first)
        vals.append(1.0)
        rhs[first] += target
        extra += 1

    if extra:
        matrix = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    return QpSystem(matrix=matrix, rhs=rhs, n_modules=instance.n_modules,
                    anchored_components=extra)


def pcg_solve(matrix, rhs: np.ndarray, tol: float = Config.PCG_TOL,
              max_iter: int = Config.PCG_MAX_ITER) -> PcgResult:
    """
    Conjugate gradients with a Jacobi (diagonal) preconditioner.

    Returns:
        PcgResult; on non-convergence the last iterate is returned with
        converged=False.
    """
    matrix = sparse.csr_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    diagonal = matrix.diagonal()
    inverse = np.divide(1.0, diagonal, out=np.ones_like(diagonal), where=diagonal != 0)
    preconditioner = sparse.diags(inverse)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    solution, info = cg(matrix, rhs, rtol=tol, atol=0.0, maxiter=max_iter,
                        M=preconditioner, callback=count)
    norm_b = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(rhs - matrix @ solution))
    relative = residual / norm_b if norm_b > 0 else residual
    converged = info == 0
    if not converged:
        logger.warning("PCG stopped after %d iterations, relative residual %.3g",
                       iterations, relative)
    return PcgResult(solution=solution, iterations=iterations, residual=relative,
                     converged=converged)


def shift_key_modules(instance: Instance, placement: np.ndarray,
                      area_quantile: float = Config.KEY_MODULE_QUANTILE,
                      key_modules: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Translate key modules onto the nearest die boundary.

    Key modules are those whose area lies strictly below the area_quantile of
    the module areas, or the named key_modules when given. Ties between
    boundaries resolve in the order left, right, bottom, top.
    """
    z = placement.astype(float, copy=True)
    if instance.n_modules == 0:
        return z
    n = instance.n
    die = instance.die
    areas = instance.widths * instance.heights
    if key_modules is not None:
        wanted = set(key_modules)
        keys = [m.index for m in instance.modules if m.name in wanted or str(m.index) in wanted]
    else:
        cut = np.quantile(areas, area_quantile)
        keys = [int(i) for i in np.flatnonzero(areas < cut)]

    for i in keys:
        w, h = instance.widths[i], instance.heights[i]
        x, y = z[i], z[n + i]
        gaps = [x, die.width - w - x, y, die.height - h - y]
        side = int(np.argmin(gaps))
        if side == 0:
            z[i] = 0.0
        elif side == 1:
            z[i] = die.width - w
        elif side == 2:
            z[n + i] = 0.0
        else:
            z[n + i] = die.height - h
    if keys:
        logger.info("shifted %d key modules to the boundary", len(keys))
    return z


class InitializationService:
    """Two-step initial placement."""

    def __init__(self, instance: Instance, area_quantile: float = Config.KEY_MODULE_QUANTILE,
                 key_modules: Optional[Sequence[str]] = None,
                 pcg_tol: float = Config.PCG_TOL, pcg_max_iter: int = Config.PCG_MAX_ITER):
        self.instance = instance
        self.area_quantile = area_quantile
        self.key_modules = key_modules
        self.pcg_tol = pcg_tol
        self.pcg_max_iter = pcg_max_iter
        self.anchored_components = 0
        self.pcg_converged = True

    def initialize(self) -> np.ndarray:
        """
        Quadratic placement, clamp into the die, shift key modules.

        Returns:
            Placement of length 2N with I/O pins at their starting positions.
        """
        instance = self.instance
        n, n_m = instance.n, instance.n_modules
        die = instance.die
        terminals = terminal_positions(instance)
        decomposition = hybrid_net_decompose(instance)
        z = np.zeros(2 * n)

        self.anchored_components = 0
        self.pcg_converged = True
        for axis in (0, 1):
            system = build_quadratic_system(instance, decomposition, axis, terminals)
            self.anchored_components = max(self.anchored_components, system.anchored_components)
            if system.rhs.size == 0:
                continue
            result = pcg_solve(system.matrix, system.rhs, self.pcg_tol, self.pcg_max_iter)
            self.pcg_converged = self.pcg_converged and result.converged
            z[axis * n:axis * n + n_m] = result.solution[:n_m]

        if self.anchored_components:
            logger.warning("%d net components without fixed terminals anchored at the die center",
                           self.anchored_components)

        z[:n_m] = np.clip(z[:n_m], 0.0, die.width - instance.widths)
        z[n:n + n_m] = np.clip(z[n:n + n_m], 0.0, die.height - instance.heights)
        z[n_m:n] = terminals[:, 0]
        z[n + n_m:] = terminals[:, 1]
        return shift_key_modules(instance, z, self.area_quantile, self.key_modules)


def initialization_service(instance: Instance, config=None) -> InitializationService:
    """Service configured from a SolverConfig (or the environment defaults when None)."""
    if config is None:
        return InitializationService(instance)
    return InitializationService(instance, config.key_module_quantile, config.key_modules,
                                 config.pcg_tol, config.pcg_max_iter)


def initialize(instance: Instance, config=None) -> np.ndarray:
    """Initial placement for a solve configuration (SolverConfig or None)."""
    return initialization_service(instance, config).initialize()
