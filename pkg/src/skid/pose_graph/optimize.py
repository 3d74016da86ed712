"""Levenberg-Marquardt over pose graphs.

Perturbations are right-multiplied twists, so a global rigid motion of all
estimates leaves every residual, Jacobian, and step unchanged: the solution
is gauge-equivariant and the anchor pins the free gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from skid.errors import DisconnectedGraph, NotAnchored
from skid.geometry.se3 import se3_exp
from skid.place_recognition import KeyframeId
from skid.pose_graph.factors import (
    BetweenFactor,
    PoseNode,
    PriorFactor,
    linearize_between,
    linearize_prior,
)

DENSE_NODE_LIMIT = 50


@dataclass(frozen=True)
class OptimizeConfig:
    max_iter: int = 50
    lambda_init: float = 1e-4
    huber_delta: float = 1.0
    tol_cost: float = 1e-8
    tol_update: float = 1e-8


@dataclass
class OptimizationReport:
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool
    chi2_per_factor: list[float] = field(default_factory=list)


def _robust_weight(chi2: float, delta: float) -> tuple[float, float]:
    """(cost contribution, IRLS weight) for the clamped-influence kernel."""
    e = math.sqrt(chi2)
    if e <= delta:
        return chi2, 1.0
    return 2.0 * delta * e - delta * delta, delta / e


def _check_structure(nodes: list[PoseNode], factors: list) -> dict[KeyframeId, int]:
    index = {n.id: i for i, n in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ValueError("duplicate node ids")
    if not any(n.fixed for n in nodes):
        raise NotAnchored("optimization needs at least one fixed node")
    # flood from fixed nodes across factor links
    adj: dict[int, list[int]] = {i: [] for i in range(len(nodes))}
    for f in factors:
        if isinstance(f, BetweenFactor):
            a, b = index[f.from_id], index[f.to_id]
            adj[a].append(b)
            adj[b].append(a)
    seen = {i for i, n in enumerate(nodes) if n.fixed}
    # priors also tie their node to the graph's fixed structure
    for f in factors:
        if isinstance(f, PriorFactor):
            seen.add(index[f.node_id])
    stack = list(seen)
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if len(seen) != len(nodes):
        missing = [nodes[i].id for i in range(len(nodes)) if i not in seen]
        raise DisconnectedGraph(f"nodes unreachable from the anchor: {missing[:5]}")
    return index


def _factor_terms(f, nodes, index):
    """Yield (residual, [(node_idx, jacobian), ...], information, robust)."""
    if isinstance(f, BetweenFactor):
        xi = nodes[index[f.from_id]].estimate
        xj = nodes[index[f.to_id]].estimate
        ji, jj, r = linearize_between(f, xi, xj)
        blocks = [(index[f.from_id], ji), (index[f.to_id], jj)]
        return r, blocks, f.information, f.robust
    if isinstance(f, PriorFactor):
        j, r = linearize_prior(f, nodes[index[f.node_id]].estimate)
        return r, [(index[f.node_id], j)], f.information, False
    raise TypeError(f"unsupported factor type {type(f).__name__}")


def _total_cost(nodes, factors, index, delta) -> tuple[float, list[float]]:
    total = 0.0
    chi2s = []
    for f in factors:
        r, _, info, robust = _factor_terms(f, nodes, index)
        chi2 = float(r @ info @ r)
        chi2s.append(chi2)
        total += _robust_weight(chi2, delta)[0] if robust else chi2
    return total, chi2s


def optimize(
    nodes: list[PoseNode],
    factors: list,
    cfg: OptimizeConfig | None = None,
) -> OptimizationReport:
    """Minimize the robustified graph cost; estimates update in place."""
    cfg = cfg or OptimizeConfig()
    index = _check_structure(nodes, factors)
    free = [i for i, n in enumerate(nodes) if not n.fixed]
    var_of_node = {i: v for v, i in enumerate(free)}
    n_var = len(free)

    cost, chi2s = _total_cost(nodes, factors, index, cfg.huber_delta)
    initial_cost = cost
    if n_var == 0:
        return OptimizationReport(initial_cost, cost, 0, True, chi2s)

    lam = cfg.lambda_init
    iterations = 0
    converged = False
    use_dense = len(nodes) < DENSE_NODE_LIMIT

    for _ in range(cfg.max_iter):
        iterations += 1
        dim = 6 * n_var
        g = np.zeros(dim)
        if use_dense:
            h = np.zeros((dim, dim))
        else:
            h_blocks: dict[tuple[int, int], np.ndarray] = {}

        for f in factors:
            r, blocks, info, robust = _factor_terms(f, nodes, index)
            chi2 = float(r @ info @ r)
            w = _robust_weight(chi2, cfg.huber_delta)[1] if robust else 1.0
            info_w = info * w
            active = [(var_of_node[ni], jac) for ni, jac in blocks if ni in var_of_node]
            for va, ja in active:
                g[6 * va : 6 * va + 6] += ja.T @ info_w @ r
                for vb, jb in active:
                    block = ja.T @ info_w @ jb
                    if use_dense:
                        h[6 * va : 6 * va + 6, 6 * vb : 6 * vb + 6] += block
                    else:
                        key = (va, vb)
                        if key in h_blocks:
                            h_blocks[key] += block
                        else:
                            h_blocks[key] = block.copy()

        # damped solve; retry with larger damping until the step helps
        step_accepted = False
        for _ in range(16):
            try:
                if use_dense:
                    delta = np.linalg.solve(h + lam * np.eye(dim), -g)
                else:
                    rows, cols, vals = [], [], []
                    for (va, vb), block in h_blocks.items():
                        base_r, base_c = 6 * va, 6 * vb
                        for p in range(6):
                            for q in range(6):
                                rows.append(base_r + p)
                                cols.append(base_c + q)
                                vals.append(block[p, q])
                    rows.extend(range(dim))
                    cols.extend(range(dim))
                    vals.extend([lam] * dim)
                    h_sp = scipy.sparse.csr_matrix(
                        (vals, (rows, cols)), shape=(dim, dim)
                    )
                    delta = scipy.sparse.linalg.spsolve(h_sp, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.isfinite(delta).all():
                lam *= 10.0
                continue
            saved = [nodes[i].estimate for i in free]
            for v, i in enumerate(free):
                nodes[i].estimate = nodes[i].estimate.compose(
                    se3_exp(delta[6 * v : 6 * v + 6])
                )
            new_cost, chi2s = _total_cost(nodes, factors, index, cfg.huber_delta)
            if new_cost <= cost:
                step_accepted = True
                lam = max(lam * 0.5, 1e-12)
                break
            for i, est in zip(free, saved):
                nodes[i].estimate = est
            lam *= 10.0
        if not step_accepted:
            break

        rel_drop = (cost - new_cost) / max(cost, 1e-300)
        step_norm = float(np.linalg.norm(delta))
        cost = new_cost
        if rel_drop < cfg.tol_cost or step_norm < cfg.tol_update:
            converged = True
            break

    final_cost, chi2s = _total_cost(nodes, factors, index, cfg.huber_delta)
    if not converged and final_cost <= 1e-12:
        converged = True
    return OptimizationReport(initial_cost, final_cost, iterations, converged, chi2s)
