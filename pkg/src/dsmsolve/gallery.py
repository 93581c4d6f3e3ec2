"""Operator gallery and hypothesis validators.

Operators are maps F: R^n -> R^n with optional analytic Jacobians.  The
validators test monotonicity ((F(u)-F(v), u-v) >= 0) and coercivity
((u, F(u))/||u|| growing without bound) empirically on seeded samples,
returning witnesses on failure.  The gallery ships both positive cases
and deliberate negative controls.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .validation import ValidatorReport, unit_directions

Array = np.ndarray


class DimensionMismatchError(ValueError):
    """Input vector dimension does not match the operator's."""


class NumericalEvaluationError(ArithmeticError):
    """Operator evaluation produced non-finite values."""


@dataclass(frozen=True)
class Operator:
    """A nonlinear map together with advisory metadata.

    The declared_* flags state what the constructor believes; validators
    test those claims empirically and may falsify them.
    """

    name: str
    dim: int
    fn: Callable[[Array], Array]
    jac: Optional[Callable[[Array], Array]] = None
    declared_monotone: bool = False
    declared_strictly_monotone: bool = False
    declared_coercive: bool = False


def _as_vector(u, dim: int) -> Array:
    v = np.asarray(u, dtype=float)
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionMismatchError(
            f"expected vector of dim {dim}, got shape {v.shape}"
        )
    return v


def evaluate(op: Operator, u) -> Array:
    """Apply F to u (dimension-checked)."""
    v = _as_vector(u, op.dim)
    out = np.asarray(op.fn(v), dtype=float)
    if out.shape != (op.dim,):
        raise DimensionMismatchError(
            f"{op.name} returned shape {out.shape}, expected ({op.dim},)"
        )
    return out


def jacobian(op: Operator, u, fd_step: float = 1e-6) -> Array:
    """F'(u): analytic if available, else central finite differences.

    The finite-difference step per coordinate is fd_step*(1+|u_j|).
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    v = _as_vector(u, op.dim)
    if op.jac is not None:
        J = np.asarray(op.jac(v), dtype=float)
        if J.shape != (op.dim, op.dim):
            raise DimensionMismatchError(
                f"{op.name} Jacobian has shape {J.shape}, expected square dim {op.dim}"
            )
        return J
    J = np.empty((op.dim, op.dim))
    for j in range(op.dim):
        h = fd_step * (1.0 + abs(v[j]))
        e = np.zeros(op.dim)
        e[j] = h
        J[:, j] = (evaluate(op, v + e) - evaluate(op, v - e)) / (2.0 * h)
    if not np.all(np.isfinite(J)):
        raise NumericalEvaluationError(f"non-finite Jacobian entries for {op.name} at {v}")
    return J


def _ball_sample(rng: np.random.Generator, dim: int, radius: float) -> Array:
    # uniform in the ball: direction * R * U^(1/dim)
    d = rng.standard_normal(dim)
    n = np.linalg.norm(d)
    if n == 0.0:
        return np.zeros(dim)
    return d / n * radius * rng.uniform() ** (1.0 / dim)


def check_monotone(
    op: Operator,
    sampler_seed: int,
    n_pairs: int,
    radius: float,
    tol: float = 1e-10,
) -> ValidatorReport:
    """Sampled test of (F(u)-F(v), u-v) >= -tol on pairs in a ball."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(sampler_seed)
    worst = np.inf
    witness = None
    for _ in range(n_pairs):
        u = _ball_sample(rng, op.dim, radius)
        v = _ball_sample(rng, op.dim, radius)
        pairing = float(np.dot(evaluate(op, u) - evaluate(op, v), u - v))
        if pairing < worst:
            worst = pairing
            witness = (u, v)
    passed = worst >= -tol
    return ValidatorReport(
        passed=passed,
        samples_checked=n_pairs,
        worst_value=worst,
        witness=None if passed else witness,
    )


def check_coercive(
    op: Operator,
    radii,
    directions_seed: int,
    n_dirs: int,
) -> ValidatorReport:
    """Growth test of q(r,d) = (u, F(u))/||u|| along rays u = r*d.

    Probes the +-coordinate axes plus n_dirs seeded random unit
    directions; passes iff min_d q(r,d) is strictly increasing in r and
    grows by at least a factor 2 from the smallest to the largest
    radius.  A finite-radius proxy for the true limit condition.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(r <= 0 for r in radii) or sorted(radii) != radii:
        raise ValueError("radii must be >= 2 ascending positive reals")
    rng = np.random.default_rng(directions_seed)
    axes = np.vstack([np.eye(op.dim), -np.eye(op.dim)])
    dirs = np.vstack([axes, unit_directions(rng, n_dirs, op.dim)])
    q_min = []
    argmin_dir = []
    for r in radii:
        qs = np.array([float(np.dot(r * d, evaluate(op, r * d))) / r for d in dirs])
        k = int(np.argmin(qs))
        q_min.append(float(qs[k]))
        argmin_dir.append(dirs[k])
    increasing = all(b > a for a, b in zip(q_min, q_min[1:]))
    doubled = q_min[-1] >= 2.0 * q_min[0]
    passed = increasing and doubled
    u_worst = radii[-1] * argmin_dir[-1]
    return ValidatorReport(
        passed=passed,
        samples_checked=len(radii) * len(dirs),
        worst_value=q_min[-1],
        witness=None if passed else (u_worst, evaluate(op, u_worst)),
        evidence={f"q_min_r{r:g}": q for r, q in zip(radii, q_min)},
    )


def shift_target(op: Operator, y) -> Operator:
    """Operator u -> F(u) - y.  Monotonicity and coercivity survive the shift."""
    yv = _as_vector(y, op.dim)
    base_fn = op.fn
    return replace(
        op,
        name=f"{op.name}_shifted",
        fn=lambda u, _f=base_fn, _y=yv: np.asarray(_f(u), dtype=float) - _y,
    )


# ---------------------------------------------------------------------------
# Gallery members


def _tridiag_matrix(n: int) -> Array:
    M = 2.0 * np.eye(n)
    idx = np.arange(n - 1)
    M[idx, idx + 1] = -1.0
    M[idx + 1, idx] = -1.0
    return M


def _skew_matrix(n: int) -> Array:
    S = np.zeros((n, n))
    idx = np.arange(n - 1)
    S[idx, idx + 1] = 1.0
    S[idx + 1, idx] = -1.0
    return S


def _scalar_cubic() -> Operator:
    return Operator(
        name="scalar_cubic",
        dim=1,
        fn=lambda u: u**3,
        jac=lambda u: np.array([[3.0 * u[0] ** 2]]),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _scalar_affine_sin() -> Operator:
    return Operator(
        name="scalar_affine_sin",
        dim=1,
        fn=lambda u: 2.0 * u + np.sin(u),
        jac=lambda u: np.array([[2.0 + np.cos(u[0])]]),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _identity(n: int) -> Operator:
    return Operator(
        name="identity",
        dim=n,
        fn=lambda u: u.copy(),
        jac=lambda u: np.eye(len(u)),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _spd_tridiag(n: int) -> Operator:
    M = _tridiag_matrix(n)
    return Operator(
        name="spd_tridiag",
        dim=n,
        fn=lambda u: M @ u,
        jac=lambda u: M.copy(),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _convex_gradient(n: int) -> Operator:
    return Operator(
        name="convex_gradient",
        dim=n,
        fn=lambda u: u**3 + u,
        jac=lambda u: np.diag(3.0 * u**2 + 1.0),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _skew_plus_cubic(n: int) -> Operator:
    M = _tridiag_matrix(n)
    S = _skew_matrix(n)
    A = M + S
    return Operator(
        name="skew_plus_cubic",
        dim=n,
        fn=lambda u: A @ u + u**3,
        jac=lambda u: A + np.diag(3.0 * u**2),
        declared_monotone=True,
        declared_strictly_monotone=True,
        declared_coercive=True,
    )


def _rank_one_projector(n: int) -> Operator:
    # e = first basis vector: monotone but flat on e-perp, so non-coercive
    e = np.zeros(n)
    e[0] = 1.0
    P = np.outer(e, e)
    return Operator(
        name="rank_one_projector",
        dim=n,
        fn=lambda u: P @ u,
        jac=lambda u: P.copy(),
        declared_monotone=True,
        declared_strictly_monotone=False,
        declared_coercive=False,
    )


def _scalar_negation() -> Operator:
    return Operator(
        name="scalar_negation",
        dim=1,
        fn=lambda u: -u,
        jac=lambda u: np.array([[-1.0]]),
        declared_monotone=False,
        declared_strictly_monotone=False,
        declared_coercive=False,
    )


_SCALAR_FACTORIES = {
    "scalar_cubic": _scalar_cubic,
    "scalar_affine_sin": _scalar_affine_sin,
    "scalar_negation": _scalar_negation,
}

_VECTOR_FACTORIES = {
    "identity": _identity,
    "spd_tridiag": _spd_tridiag,
    "convex_gradient": _convex_gradient,
    "skew_plus_cubic": _skew_plus_cubic,
    "rank_one_projector": _rank_one_projector,
}

GALLERY_NAMES = tuple(_SCALAR_FACTORIES) + tuple(_VECTOR_FACTORIES)


def make_operator(name: str, dim: int = 5) -> Operator:
    """Gallery member by name; scalar members ignore dim (forced to 1)."""
    if name in _SCALAR_FACTORIES:
        return _SCALAR_FACTORIES[name]()
    if name in _VECTOR_FACTORIES:
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if name == "skew_plus_cubic" and dim < 2:
            # the skew part needs at least one off-diagonal pair
            return _VECTOR_FACTORIES[name](2)
        return _VECTOR_FACTORIES[name](dim)
    raise KeyError(f"unknown operator {name!r}; known: {', '.join(GALLERY_NAMES)}")


def make_gallery(dim: int = 5) -> list[Operator]:
    """All gallery members, vector-valued ones instantiated at dim."""
    return [make_operator(name, dim) for name in GALLERY_NAMES]
