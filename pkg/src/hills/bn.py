"""Bayesian networks over threat/cause/mitigation variables: exact
inference by variable elimination, d-separation, and skeleton
construction from confirmed links.

Variables default to the binary state space ``("present", "absent")``;
any finite state space works.  A CPT stores one distribution per full
parent-state combination, row-major over the declared parent order (the
first parent varies slowest).  Root variables hold a single prior row.

A built :class:`BayesNet` is immutable and safe to share across threads;
``marginal`` and ``d_separated`` are pure.  ``enumerate_joint`` builds
the full joint table and is the test oracle for the factor-based path,
so it deliberately shares no code with ``marginal``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linker import LinkDirection, LinkSet, StaleLinkSet, study_fingerprint
from .model import ElementKind, HillsError, Study

STATE_SPACE_LIMIT = 2**20
_ROW_SUM_TOL = 1e-9

DEFAULT_STATES = ("present", "absent")


class BnError(HillsError):
    pass


class CycleDetected(BnError):
    pass


class CptShapeMismatch(BnError):
    pass


class RowNotNormalized(BnError):
    pass


class IncompleteCpt(BnError):
    pass


class StateSpaceTooLarge(BnError):
    pass


class ZeroProbabilityEvidence(BnError):
    pass


class UnknownVariable(BnError):
    pass


class UndirectedLink(BnError):
    pass


class NonBnElement(BnError):
    pass


@dataclass(frozen=True)
class Cpt:
    """Rows map parent-state combinations (row-major over ``parent_ids``)
    to distributions over the variable's states; roots hold one row."""

    parent_ids: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]


@dataclass
class BnVariable:
    id: str
    states: tuple[str, ...] = DEFAULT_STATES
    cpt: Cpt | None = None
    title: str | None = None


@dataclass
class BnSkeleton:
    """A network whose CPTs may still be unfilled.  ``build`` turns a
    complete skeleton into a validated, queryable net."""

    variables: dict[str, BnVariable] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)

    @property
    def is_complete(self) -> bool:
        return all(v.cpt is not None for v in self.variables.values())

    def missing_cpts(self) -> list[str]:
        return [v.id for v in self.variables.values() if v.cpt is None]

    def build(self) -> "BayesNet":
        return build_bn(list(self.variables.values()), self.edges)


class BayesNet:
    """Validated network.  Construct through :func:`build_bn`."""

    def __init__(self, variables: dict[str, BnVariable], edges: frozenset[tuple[str, str]],
                 topo_order: tuple[str, ...]):
        self.variables = variables
        self.edges = edges
        self.topo_order = topo_order
        self._parents = {v: tuple(self.variables[v].cpt.parent_ids) for v in variables}
        self._children: dict[str, tuple[str, ...]] = {v: () for v in variables}
        for parent, child in sorted(edges):
            self._children[parent] = self._children[parent] + (child,)

    def parents(self, var_id: str) -> tuple[str, ...]:
        self._require(var_id)
        return self._parents[var_id]

    def children(self, var_id: str) -> tuple[str, ...]:
        self._require(var_id)
        return self._children[var_id]

    def states(self, var_id: str) -> tuple[str, ...]:
        self._require(var_id)
        return self.variables[var_id].states

    def _require(self, var_id: str) -> None:
        if var_id not in self.variables:
            raise UnknownVariable(f"no variable with id {var_id!r}")


def build_bn(variables: Sequence[BnVariable], edges: Iterable[tuple[str, str]]) -> BayesNet:
    """Validate a net: unique ids, sane state spaces, acyclic edges, and a
    CPT per variable whose shape and normalization are exact."""
    by_id: dict[str, BnVariable] = {}
    for var in variables:
        if var.id in by_id:
            raise ValueError(f"duplicate variable id {var.id!r}")
        if len(var.states) < 2:
            raise ValueError(f"variable {var.id!r} needs at least two states")
        if len(set(var.states)) != len(var.states):
            raise ValueError(f"variable {var.id!r} has duplicate state names")
        by_id[var.id] = var

    edge_set = set()
    for parent, child in edges:
        if parent not in by_id or child not in by_id:
            raise UnknownVariable(f"edge ({parent!r}, {child!r}) names an unknown variable")
        edge_set.add((parent, child))

    in_edges: dict[str, set[str]] = {v: set() for v in by_id}
    out_edges: dict[str, set[str]] = {v: set() for v in by_id}
    for parent, child in edge_set:
        in_edges[child].add(parent)
        out_edges[parent].add(child)

    # Kahn's algorithm; leftover nodes mean a cycle.
    pending = {v: len(ps) for v, ps in in_edges.items()}
    ready = [v for v in by_id if pending[v] == 0]
    topo: list[str] = []
    while ready:
        var = ready.pop()
        topo.append(var)
        for child in out_edges[var]:
            pending[child] -= 1
            if pending[child] == 0:
                ready.append(child)
    if len(topo) != len(by_id):
        cyclic = sorted(v for v in by_id if pending[v] > 0)
        raise CycleDetected(f"edges form a cycle through {cyclic}")

    for var in by_id.values():
        cpt = var.cpt
        if cpt is None:
            raise IncompleteCpt(f"variable {var.id!r} has no CPT")
        if set(cpt.parent_ids) != in_edges[var.id]:
            raise CptShapeMismatch(
                f"variable {var.id!r}: CPT parents {list(cpt.parent_ids)} do not match "
                f"in-edges {sorted(in_edges[var.id])}"
            )
        if len(set(cpt.parent_ids)) != len(cpt.parent_ids):
            raise CptShapeMismatch(f"variable {var.id!r}: repeated parent in CPT")
        expected_rows = 1
        for parent in cpt.parent_ids:
            expected_rows *= len(by_id[parent].states)
        if len(cpt.rows) != expected_rows:
            raise CptShapeMismatch(
                f"variable {var.id!r}: expected {expected_rows} CPT rows, got {len(cpt.rows)}"
            )
        for row_index, row in enumerate(cpt.rows):
            if len(row) != len(var.states):
                raise CptShapeMismatch(
                    f"variable {var.id!r}: row {row_index} has {len(row)} entries, "
                    f"expected {len(var.states)}"
                )
            if any(p < 0.0 or p > 1.0 for p in row):
                raise RowNotNormalized(
                    f"variable {var.id!r}: row {row_index} {list(row)} leaves [0, 1]"
                )
            if abs(sum(row) - 1.0) > _ROW_SUM_TOL:
                raise RowNotNormalized(
                    f"variable {var.id!r}: row {row_index} {list(row)} sums to {sum(row)!r}"
                )

    ordered = {v.id: v for v in by_id.values()}
    return BayesNet(ordered, frozenset(edge_set), tuple(topo))


# -- factors ---------------------------------------------------------------


@dataclass(frozen=True)
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray  # one axis per var, in vars order


def _cpt_factor(bn: BayesNet, var_id: str) -> _Factor:
    var = bn.variables[var_id]
    cpt = var.cpt
    assert cpt is not None
    shape = [len(bn.variables[p].states) for p in cpt.parent_ids] + [len(var.states)]
    table = np.asarray(cpt.rows, dtype=float).reshape(shape)
    return _Factor(tuple(cpt.parent_ids) + (var_id,), table)


def _reduce(factor: _Factor, var_id: str, state_index: int) -> _Factor:
    axis = factor.vars.index(var_id)
    table = np.take(factor.table, state_index, axis=axis)
    remaining = factor.vars[:axis] + factor.vars[axis + 1 :]
    return _Factor(remaining, table)


def _multiply(a: _Factor, b: _Factor) -> _Factor:
    out_vars = a.vars + tuple(v for v in b.vars if v not in a.vars)

    def aligned(f: _Factor) -> np.ndarray:
        present = [v for v in out_vars if v in f.vars]
        perm = [f.vars.index(v) for v in present]
        table = np.transpose(f.table, perm)
        sizes = dict(zip(present, table.shape))
        shape = [sizes.get(v, 1) for v in out_vars]
        return table.reshape(shape)

    return _Factor(out_vars, aligned(a) * aligned(b))


def _sum_out(factor: _Factor, var_id: str) -> _Factor:
    axis = factor.vars.index(var_id)
    remaining = factor.vars[:axis] + factor.vars[axis + 1 :]
    return _Factor(remaining, factor.table.sum(axis=axis))


def _min_degree_order(factors: list[_Factor], hidden: list[str]) -> list[str]:
    """Greedy min-degree ordering over the interaction graph; ties break on
    the variable id, so the ordering is deterministic."""
    scopes = [set(f.vars) for f in factors]
    order: list[str] = []
    remaining = set(hidden)
    while remaining:
        degree = {}
        for v in remaining:
            linked: set[str] = set()
            for scope in scopes:
                if v in scope:
                    linked |= scope
            linked.discard(v)
            degree[v] = len(linked)
        var = min(sorted(remaining), key=lambda v: degree[v])
        order.append(var)
        remaining.discard(var)
        merged: set[str] = set()
        kept = []
        for scope in scopes:
            if var in scope:
                merged |= scope
            else:
                kept.append(scope)
        merged.discard(var)
        if merged:
            kept.append(merged)
        scopes = kept
    return order


def _validate_evidence(bn: BayesNet, evidence: Mapping[str, str]) -> dict[str, int]:
    indices: dict[str, int] = {}
    for var_id, state in evidence.items():
        if var_id not in bn.variables:
            raise UnknownVariable(f"evidence names unknown variable {var_id!r}")
        states = bn.variables[var_id].states
        if state not in states:
            raise ValueError(
                f"variable {var_id!r} has no state {state!r}; choose from {list(states)}"
            )
        indices[var_id] = states.index(state)
    return indices


def marginal(
    bn: BayesNet,
    target: str,
    evidence: Mapping[str, str] | None = None,
    elimination_order: Sequence[str] | None = None,
) -> dict[str, float]:
    """Exact posterior P(target | evidence) by variable elimination.

    The default elimination ordering is greedy min-degree; any ordering of
    the hidden variables gives the same answer, so the parameter only
    matters for performance (and for order-independence tests)."""
    if target not in bn.variables:
        raise UnknownVariable(f"no variable with id {target!r}")
    evidence = dict(evidence or {})
    if target in evidence:
        raise ValueError(f"target {target!r} must not be observed")
    observed = _validate_evidence(bn, evidence)

    factors = []
    for var_id in bn.variables:
        factor = _cpt_factor(bn, var_id)
        for obs_var, state_index in observed.items():
            if obs_var in factor.vars:
                factor = _reduce(factor, obs_var, state_index)
        factors.append(factor)

    hidden = [v for v in bn.variables if v != target and v not in observed]
    if elimination_order is None:
        order = _min_degree_order(factors, hidden)
    else:
        order = list(elimination_order)
        if sorted(order) != sorted(hidden):
            raise ValueError(
                f"elimination order must cover exactly the hidden variables {sorted(hidden)}"
            )

    for var_id in order:
        related = [f for f in factors if var_id in f.vars]
        if not related:
            continue
        product = related[0]
        for factor in related[1:]:
            product = _multiply(product, factor)
        factors = [f for f in factors if var_id not in f.vars]
        factors.append(_sum_out(product, var_id))

    result = _Factor((), np.array(1.0))
    for factor in factors:
        result = _multiply(result, factor)
    assert set(result.vars) <= {target}

    states = bn.variables[target].states
    if result.vars == ():
        raise AssertionError("target variable vanished during elimination")
    values = np.asarray(result.table, dtype=float).reshape(len(states))
    z = float(values.sum())
    if z <= 0.0:
        raise ZeroProbabilityEvidence(f"evidence {evidence!r} has probability zero")
    return {state: float(p / z) for state, p in zip(states, values)}


# -- joint-table oracle ------------------------------------------------------


@dataclass
class JointTable:
    """Explicit joint distribution: one axis per variable, in declared
    order.  Exists as an independent cross-check for ``marginal``."""

    var_ids: tuple[str, ...]
    states: dict[str, tuple[str, ...]]
    array: np.ndarray

    def probability(self, assignment: Mapping[str, str]) -> float:
        if set(assignment) != set(self.var_ids):
            raise ValueError("assignment must cover every variable exactly once")
        index = tuple(self.states[v].index(assignment[v]) for v in self.var_ids)
        return float(self.array[index])

    def posterior(self, target: str, evidence: Mapping[str, str] | None = None) -> dict[str, float]:
        evidence = dict(evidence or {})
        if target not in self.var_ids:
            raise UnknownVariable(f"no variable with id {target!r}")
        if target in evidence:
            raise ValueError(f"target {target!r} must not be observed")
        # Slice the observed axes, sum out everything but the target.
        index: list[object] = []
        for var in self.var_ids:
            if var in evidence:
                state = evidence[var]
                if state not in self.states[var]:
                    raise ValueError(f"variable {var!r} has no state {state!r}")
                index.append(self.states[var].index(state))
            else:
                index.append(slice(None))
        view = self.array[tuple(index)]
        remaining = [v for v in self.var_ids if v not in evidence]
        target_axis = remaining.index(target)
        other_axes = tuple(i for i in range(len(remaining)) if i != target_axis)
        dist = view.sum(axis=other_axes) if other_axes else view
        z = float(dist.sum())
        if z <= 0.0:
            raise ZeroProbabilityEvidence(f"evidence {evidence!r} has probability zero")
        return {state: float(p / z) for state, p in zip(self.states[target], dist)}


def enumerate_joint(bn: BayesNet) -> JointTable:
    """Full joint table: the product of CPT entries over every state
    combination.  Guarded by ``STATE_SPACE_LIMIT`` total cells."""
    size = 1
    for var in bn.variables.values():
        size *= len(var.states)
        if size > STATE_SPACE_LIMIT:
            raise StateSpaceTooLarge(
                f"joint state space exceeds {STATE_SPACE_LIMIT} cells"
            )
    var_ids = tuple(bn.variables)
    shape = tuple(len(bn.variables[v].states) for v in var_ids)
    joint = np.ones(shape, dtype=float)
    for var_id in var_ids:
        factor = _cpt_factor(bn, var_id)
        perm_vars = [v for v in var_ids if v in factor.vars]
        perm = [factor.vars.index(v) for v in perm_vars]
        table = np.transpose(factor.table, perm)
        expand = [len(bn.variables[v].states) if v in factor.vars else 1 for v in var_ids]
        joint = joint * table.reshape(expand)
    return JointTable(var_ids, {v: bn.variables[v].states for v in var_ids}, joint)


# -- d-separation ------------------------------------------------------------


def d_separated(
    bn: BayesNet,
    xs: Iterable[str],
    ys: Iterable[str],
    zs: Iterable[str] = (),
) -> bool:
    """True iff every undirected path between ``xs`` and ``ys`` is blocked
    given ``zs``, decided by the active-trail reachability scan."""
    x_set, y_set, z_set = set(xs), set(ys), set(zs)
    for var in x_set | y_set | z_set:
        if var not in bn.variables:
            raise UnknownVariable(f"no variable with id {var!r}")
    if x_set & y_set or x_set & z_set or y_set & z_set:
        raise ValueError("the three variable sets must be disjoint")

    # Ancestors of the conditioning set (including itself): a collider on a
    # trail is active only when it or one of its descendants is observed.
    ancestors = set(z_set)
    frontier = list(z_set)
    while frontier:
        var = frontier.pop()
        for parent in bn.parents(var):
            if parent not in ancestors:
                ancestors.add(parent)
                frontier.append(parent)

    # (variable, arrived-from-child?) states; start as if leaving each x
    # upward through its parents.
    visited: set[tuple[str, bool]] = set()
    frontier2: list[tuple[str, bool]] = [(x, True) for x in x_set]
    reached: set[str] = set()
    while frontier2:
        var, from_child = frontier2.pop()
        if (var, from_child) in visited:
            continue
        visited.add((var, from_child))
        if var not in z_set:
            reached.add(var)
            if reached & y_set:
                return False
        if from_child and var not in z_set:
            for parent in bn.parents(var):
                frontier2.append((parent, True))
            for child in bn.children(var):
                frontier2.append((child, False))
        elif not from_child:
            if var not in z_set:
                for child in bn.children(var):
                    frontier2.append((child, False))
            if var in ancestors:
                for parent in bn.parents(var):
                    frontier2.append((parent, True))
    return not (reached & y_set)


# -- skeletons from confirmed links -------------------------------------------


def bn_from_links(
    study: Study,
    linkset: LinkSet,
    root_threat_prior: float = 1.0,
) -> BnSkeleton:
    """Skeleton net from the confirmed links of a study.

    Each confirmed, directed link contributes one edge between elements of
    its two worksheet rows: a threat row explains the downstream row's
    cause (threat -> cause); a non-threat row may, within one level, feed
    the downstream row's mitigation (cause -> mitigation).  Hazard and
    latent-hazard elements never become variables, and a hazard or
    latent-hazard row cannot drive a cross-level edge.  Parentless threat
    variables receive the prior ``[root_threat_prior, 1 - …]``.
    """
    if linkset.study_fingerprint != study_fingerprint(study):
        raise StaleLinkSet("link set was derived from a different study")
    if not 0.0 <= root_threat_prior <= 1.0:
        raise ValueError("root threat prior must be a probability")

    skeleton = BnSkeleton()
    edge_seen: set[tuple[str, str]] = set()
    kinds: dict[str, ElementKind] = {}

    def ensure_variable(element_id) -> str:
        element = study.element(element_id)
        key = element.id.render()
        if key not in skeleton.variables:
            skeleton.variables[key] = BnVariable(key, DEFAULT_STATES, None, element.text)
            kinds[key] = element.kind
        return key

    for link in linkset.confirmed():
        direction = link.effective_direction
        if direction is LinkDirection.NONE:
            raise UndirectedLink(
                f"link {link.id} is confirmed but has no direction; set one before building a net"
            )
        first, second = link.endpoints
        if direction is LinkDirection.HIGHER_EXPLAINS_LOWER:
            upstream, downstream = first, second
        else:
            upstream, downstream = second, first
        up_entry = study.entries[upstream.entry - 1]
        down_entry = study.entries[downstream.entry - 1]
        up_element = study.element(up_entry.element_id)
        if up_element.kind is ElementKind.THREAT:
            parent = ensure_variable(up_entry.element_id)
            child = ensure_variable(down_entry.cause_id)
        elif upstream.level_rank == downstream.level_rank:
            parent = ensure_variable(up_entry.cause_id)
            child = ensure_variable(down_entry.mitigation_id)
        else:
            raise NonBnElement(
                f"link {link.id}: {up_element.kind.value} {up_element.id} cannot drive a "
                "cross-level edge; only threat rows explain other levels"
            )
        if (parent, child) not in edge_seen and parent != child:
            edge_seen.add((parent, child))
            skeleton.edges.append((parent, child))

    with_parents = {child for _, child in skeleton.edges}
    prior_row = (root_threat_prior, 1.0 - root_threat_prior)
    for var in skeleton.variables.values():
        if var.id not in with_parents and kinds[var.id] is ElementKind.THREAT:
            var.cpt = Cpt((), (prior_row,))
    return skeleton


# -- JSON form ---------------------------------------------------------------


def bn_to_json(net: BayesNet | BnSkeleton) -> dict:
    variables = net.variables
    edges = sorted(net.edges) if isinstance(net, BayesNet) else list(net.edges)
    return {
        "variables": [
            {
                "id": var.id,
                "title": var.title,
                "states": list(var.states),
                "parents": list(var.cpt.parent_ids) if var.cpt is not None else _parents_of(net, var.id),
                "cpt": [list(row) for row in var.cpt.rows] if var.cpt is not None else None,
            }
            for var in variables.values()
        ],
        "edges": [list(edge) for edge in edges],
    }


def _parents_of(net: BayesNet | BnSkeleton, var_id: str) -> list[str]:
    return [parent for parent, child in net.edges if child == var_id]


def bn_from_json(doc: dict) -> BnSkeleton:
    """Rebuild a (possibly incomplete) net from its JSON document.  The
    ``edges`` list must agree with the per-variable ``parents`` lists."""
    skeleton = BnSkeleton()
    declared_edges = {tuple(edge) for edge in doc.get("edges", [])}
    parent_edges: set[tuple[str, str]] = set()
    for raw in doc.get("variables", []):
        states = tuple(raw.get("states", DEFAULT_STATES))
        parents = tuple(raw.get("parents", ()))
        cpt_rows = raw.get("cpt")
        cpt = None
        if cpt_rows is not None:
            cpt = Cpt(parents, tuple(tuple(float(p) for p in row) for row in cpt_rows))
        var = BnVariable(raw["id"], states, cpt, raw.get("title"))
        if var.id in skeleton.variables:
            raise ValueError(f"duplicate variable id {var.id!r}")
        skeleton.variables[var.id] = var
        for parent in parents:
            parent_edges.add((parent, var.id))
    for parent, child in declared_edges | parent_edges:
        if parent not in skeleton.variables or child not in skeleton.variables:
            raise UnknownVariable(f"edge ({parent!r}, {child!r}) names an unknown variable")
    if declared_edges != parent_edges:
        raise CptShapeMismatch(
            "the edges list and the per-variable parents lists disagree"
        )
    skeleton.edges = sorted(declared_edges)
    return skeleton
