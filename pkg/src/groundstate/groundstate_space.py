"""The groundstate-weighted space X and its resolvent constants.

X is the space of grid functions h with |h|/phi bounded; its norm is the
sup of that ratio over the nodes.  Every function splits as
u = u1*phi + uperp with u1 the quadrature projection onto phi and uperp
quadrature-orthogonal to phi.  For parameters mu near Lambda the solvers
need two constants: the half-width delta0 of the admissible window below
lambda2, and a bound c0 on the X-operator norm of the resolvent restricted
to the phi-orthogonal complement.  c0 is estimated, not derived: the
weighted matrix norm || D_phi^-1 Pi (L-mu)^-1 Pi D_phi ||_inf is evaluated
at sampled mu across the window and the max is reported together with the
samples used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import solve_banded

from .errors import MalformedInput, SingularResolvent

if TYPE_CHECKING:  # pragma: no cover - type-only imports
    from .spectral import DiscreteOperator, SpectrumSummary

#: rows where phi is below this fraction of its max are dropped from the
#: weighted-norm row sums; solves there are rounding-dominated, the same
#: reason the artificial boundary is excluded from the sup
ROW_FLOOR = 1e-12

#: outermost fraction of nodes considered boundary-adjacent for flagging
TAIL_FRACTION = 0.05


@dataclass(frozen=True)
class GroundstateVector:
    """A grid function with its groundstate decomposition attached.

    values = c1*phi + perp exactly, with quadrature(perp * phi) = 0 and
    x_norm = sup |values|/phi over the nodes.
    """

    values: np.ndarray
    c1: float
    perp: np.ndarray
    x_norm: float


def x_norm(v: np.ndarray, phi: np.ndarray) -> float:
    """sup over nodes of |v|/phi (the groundstate-weighted sup norm)."""
    return float(np.max(np.abs(v) / phi))


def x_norm_location(v: np.ndarray, phi: np.ndarray) -> tuple[float, int, bool]:
    """X-norm plus where it is attained and a truncation flag.

    The flag is set when the max sits in the outermost few percent of
    nodes, where phi is smallest and the ratio is dominated by the
    Dirichlet truncation rather than by the bulk behavior of v.
    """
    ratio = np.abs(v) / phi
    idx = int(np.argmax(ratio))
    flagged = idx >= int((1.0 - TAIL_FRACTION) * len(ratio))
    return float(ratio[idx]), idx, flagged


def decompose(v: np.ndarray, phi: np.ndarray, quad_weights: np.ndarray) -> GroundstateVector:
    """Split v into its phi component and the quadrature-orthogonal rest."""
    v = np.asarray(v, dtype=float)
    c1 = float(np.dot(quad_weights, v * phi))
    perp = v - c1 * phi
    return GroundstateVector(values=v, c1=c1, perp=perp, x_norm=x_norm(v, phi))


@dataclass(frozen=True)
class WindowEstimate:
    """delta0 and the sampled resolvent constant c0.

    mu_samples are the shifts where the weighted norm was evaluated; c0 is
    the max over them.  Certificates that use c0 are re-verified pointwise
    downstream, so c0 being an estimate degrades windows, never soundness.
    """

    delta0: float
    c0: float
    mu_samples: np.ndarray


def projected_resolvent_norm(
    op: "DiscreteOperator", phi: np.ndarray, quad_weights: np.ndarray, mu: float
) -> float:
    """Weighted inf-norm of D_phi^-1 Pi (L-mu)^-1 Pi D_phi.

    Pi is the quadrature projection onto the phi-orthogonal complement.
    Dense evaluation: one banded solve per grid node (columns of the
    projected diagonal matrix), then max row sum of the similarity
    transform.  Rows where phi has decayed to the rounding floor are
    excluded from the max.
    """
    n = len(phi)
    wphi = quad_weights * phi
    # columns of Pi D_phi
    cols = np.diag(phi) - np.outer(phi, wphi * phi)
    rhs = op.scale[:, None] * cols[op.start :, :]
    nloc = op.dim
    ab = np.zeros((3, nloc))
    ab[0, 1:] = op.offdiag
    ab[1, :] = op.diag - mu
    ab[2, :-1] = op.offdiag
    z = solve_banded((1, 1), ab, rhs)
    y = np.zeros((n, n))
    y[op.start :, :] = z / op.scale[:, None]
    py = y - np.outer(phi, wphi @ y)
    m = py / phi[:, None]
    keep = phi >= ROW_FLOOR * phi.max()
    return float(np.abs(m[keep]).sum(axis=1).max())


def estimate_c0_delta0(
    summary: "SpectrumSummary",
    op: "DiscreteOperator",
    margin: float = 0.5,
) -> WindowEstimate:
    """Sample the weighted resolvent norm across the window around Lambda.

    delta0 = margin * (lambda2 - Lambda); the norm is evaluated at
    mu = Lambda +/- delta0*k/4 for k = 1..4 and c0 is the max.  Raises
    SingularResolvent if a sample lands within 1e-8 of a computed
    eigenvalue.
    """
    if not 0.0 < margin < 1.0:
        raise MalformedInput("margin must sit strictly inside (0, 1)")
    delta0 = margin * (summary.lambda2 - summary.Lambda)
    samples = np.array(
        [summary.Lambda + s * delta0 * k / 4.0 for s in (-1.0, 1.0) for k in (1, 2, 3, 4)]
    )
    known = np.append(np.asarray(summary.radial_eigs, dtype=float), summary.lambda2)
    for mu in samples:
        if np.min(np.abs(known - mu)) < 1e-8:
            raise SingularResolvent(f"sample mu = {mu:.12g} collides with an eigenvalue")
    phi = summary.phi.values
    w = op.grid.quad_weights
    c0 = max(projected_resolvent_norm(op, phi, w, float(mu)) for mu in samples)
    return WindowEstimate(delta0=float(delta0), c0=float(c0), mu_samples=np.sort(samples))
