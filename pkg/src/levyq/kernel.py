"""Transition matrices of the discretized queues.

Both process classes lead to a matrix P = Pcheck + D where Pcheck captures
"no jump" (a deterministic shift by one state) plus "exactly one jump"
(window integrals of the job-size CDF), and the diagonal D restores row
stochasticity by keeping the ignored mass (two or more jumps, jumps cut off
by the truncation) in place.

The one-jump window integrals depend only on the index difference for
generic rows (M/G/1 rows i >= 2) respectively generic columns (spectrally
negative columns j >= 2).  Kernels are therefore stored as a Toeplitz band
plus explicit special rows/columns, never densely: the finest configuration
this package targets has tens of thousands of states, where a dense matrix
would be both too large and too slow.  A dense reconstruction exists for
small grids, used by tests and the `matrix` CLI subcommand.

Window integrals are second differences of the CDF prefix integral
J(x) = int_0^x F_B: int_{k d}^{(k+1) d} (F_B(s + d) - F_B(s)) ds
= J((k+2)d) - 2 J((k+1)d) + J(k d), with J clamped to 0 on the negative
axis.  J is convex, so these are nonnegative up to rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import CertificationError, GridError
from .jobsize import JobSize
from .measure import DiscreteDist, Grid

__all__ = [
    "ModelKind",
    "ModelSpec",
    "TransitionKernel",
    "build_kernel",
    "build_mg1",
    "build_specneg",
    "rescale_for_speed",
]


class ModelKind(str, enum.Enum):
    MG1 = "mg1"
    SPECTRALLY_NEGATIVE = "spectrally_negative"


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Process parameters: arrival rate, job-size law, and the process class.

    The deterministic service/drift speed is fixed at 1 (see
    :func:`rescale_for_speed` for other speeds).  ``absorbing_zero`` only
    applies to the spectrally negative class and turns state 0 into a sink.
    """

    kind: ModelKind
    lam: float
    job: JobSize
    absorbing_zero: bool = False

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("arrival rate must be positive")
        if self.absorbing_zero and self.kind is not ModelKind.SPECTRALLY_NEGATIVE:
            raise ValueError("absorbing_zero is only defined for spectrally negative input")

    def grid_for(self, delta: float, m_delta: int) -> Grid:
        """Grid with the zero-state convention matching this model."""
        zero = self.kind is ModelKind.MG1 or self.absorbing_zero
        return Grid(delta, m_delta, zero_state=zero)


def rescale_for_speed(spec: ModelSpec, r: float) -> tuple[ModelSpec, float]:
    """Normalize a model with service/drift speed r != 1 to unit speed.

    Returns (unit-speed spec, scale): job sizes are divided by r and the
    state space shrinks by the same factor, so solve the returned spec on a
    grid with delta/r and multiply reported workloads (densities' support,
    Wasserstein bounds) by ``scale`` to map back.
    """
    if r <= 0:
        raise ValueError("speed must be positive")
    return (
        ModelSpec(spec.kind, spec.lam, spec.job.scaled(1.0 / r), spec.absorbing_zero),
        r,
    )


@dataclass(eq=False)
class TransitionKernel:
    """Structured storage of P = Pcheck + D.

    ``toeplitz[k - k_lo]`` holds the generic-row entry at offset k = j - i
    (M/G/1, rows i >= 2) or k = i - j (spectrally negative, columns j >= 2);
    offset -1 carries the no-jump shift, so ``k_lo = -1``.  Special rows
    (M/G/1 i = 0, 1) and the spectrally negative column j = 1 (plus the sink
    column j = 0 in the absorbing variant) are stored densely.  ``diag``
    holds D(i, i) >= 0 per state.  ``row_quadrature_error`` bounds the total
    absolute error of any single row's entries (nonzero only for job-size
    families without closed-form integrals).
    """

    grid: Grid
    kind: ModelKind
    absorbing_zero: bool
    exp_no_jump: float
    toeplitz: np.ndarray
    k_lo: int
    diag: np.ndarray
    row0: np.ndarray | None = None
    row1: np.ndarray | None = None
    col1: np.ndarray | None = None
    col0: np.ndarray | None = None
    row_quadrature_error: float = 0.0

    # -- application ---------------------------------------------------------

    def apply(self, dist: DiscreteDist) -> DiscreteDist:
        """One chain step: p -> p P, exploiting the Toeplitz band."""
        if dist.grid != self.grid:
            raise GridError("distribution lives on a different grid")
        p = dist.p
        if self.kind is ModelKind.MG1:
            out = self._apply_mg1(p)
        else:
            out = self._apply_specneg(p)
        out[out < 0.0] = 0.0  # convolution rounding noise
        return DiscreteDist(self.grid, out)

    def _apply_mg1(self, p: np.ndarray) -> np.ndarray:
        n = self.grid.m_delta
        out = p[0] * self.row0 + p[1] * self.row1
        q = p[2:]
        if len(q):
            c = signal.convolve(q, self.toeplitz, method="auto")
            # c[j - 1] = sum_i p[i] t[j - i] for the rows i >= 2
            take = min(n, len(c))
            out[1 : 1 + take] += c[:take]
        out += p * self.diag
        return out

    def _apply_specneg(self, p: np.ndarray) -> np.ndarray:
        n = self.grid.m_delta
        if self.absorbing_zero:
            body = p[1:]
        else:
            body = p
        out_body = np.zeros(n)
        out_body[0] = float(np.dot(body, self.col1))
        rev = self.toeplitz[::-1]
        c = signal.convolve(body, rev, method="auto")
        # states j >= 2 sit at c[L - 1 + (j - 2)], L = len(toeplitz)
        L = len(self.toeplitz)
        seg = c[L - 1 : L - 1 + (n - 1)]
        out_body[1 : 1 + len(seg)] += seg
        if self.absorbing_zero:
            out = np.empty(n + 1)
            out[0] = p[0] + float(np.dot(body, self.col0))
            out[1:] = out_body + body * self.diag[1:]
            return out
        return out_body + body * self.diag

    # -- dense reconstruction --------------------------------------------------

    def row(self, i: int) -> np.ndarray:
        """Reconstruct row i of P (state index, not array index)."""
        n = self.grid.m_delta
        if self.kind is ModelKind.MG1:
            if i == 0:
                r = self.row0.copy()
            elif i == 1:
                r = self.row1.copy()
            else:
                r = np.zeros(n + 1)
                for j in range(n + 1):
                    k = j - i
                    if self.k_lo <= k < self.k_lo + len(self.toeplitz):
                        r[j] = self.toeplitz[k - self.k_lo]
            r[i] += self.diag[i]
            return r
        # spectrally negative
        offset = 1 if self.absorbing_zero else 0
        size = n + 1 if self.absorbing_zero else n
        r = np.zeros(size)
        if self.absorbing_zero and i == 0:
            r[0] = 1.0
            return r
        a = i - 1  # array index into col1/col0
        if self.absorbing_zero:
            r[0] = self.col0[a]
        r[offset + 0] = self.col1[a]
        for j in range(2, n + 1):
            k = i - j
            if self.k_lo <= k < self.k_lo + len(self.toeplitz):
                r[offset + j - 1] = self.toeplitz[k - self.k_lo]
        r[offset + a] += self.diag[offset + a] if self.absorbing_zero else self.diag[a]
        return r

    def dense(self) -> np.ndarray:
        states = self.grid.states()
        return np.stack([self.row(int(i)) for i in states])


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _window_integrals(job: JobSize, delta: float, k_min: int, k_max: int):
    """t_int[k] = int_{k d}^{(k+1) d} (F_B(s + d) - F_B(s)) ds for k_min..k_max.

    Returns (values, per_window_error).  For exact families this is a second
    difference of the prefix integral; tiny negative rounding is clipped
    (J is convex, so the true values are nonnegative).
    """
    ks = np.arange(k_min, k_max + 3)
    if job.exact:
        j_vals = job.prefix_cdf(ks * delta)
        t_int = np.diff(j_vals, 2)
        np.maximum(t_int, 0.0, out=t_int)
        # F flat across the whole window means the integrand is identically
        # zero there; zero those entries to kill cancellation dust in the
        # second differences (keeps the band genuinely banded)
        f_edges = job.cdf(ks * delta)
        t_int[f_edges[2:] == f_edges[:-2]] = 0.0
        return t_int, np.zeros_like(t_int)
    vals = np.empty(k_max - k_min + 1)
    errs = np.empty_like(vals)
    for idx, k in enumerate(range(k_min, k_max + 1)):
        hi, e1 = job.cdf_integral_with_error((k + 1) * delta, (k + 2) * delta)
        lo, e2 = job.cdf_integral_with_error(k * delta, (k + 1) * delta)
        vals[idx] = max(hi - lo, 0.0)
        errs[idx] = e1 + e2
    return vals, errs


def build_mg1(spec: ModelSpec, grid: Grid) -> TransitionKernel:
    """Kernel of the discretized M/G/1 workload process.

    Generic rows (i >= 2): Pcheck(i, j) = e^{-lam d} (1{j = i-1}
    + lam * t_int[j - i]).  Row 0 uses windows shifted one interval up
    (the state represents workload exactly 0) and row 1 averages over the
    uniformly distributed idle time, which turns the window integral into a
    convolution with a triangle weight.
    """
    if spec.kind is not ModelKind.MG1:
        raise ValueError("spec is not an M/G/1 model")
    if not grid.zero_state:
        raise GridError("the M/G/1 chain needs the zero state")
    lam, d, n = spec.lam, grid.delta, grid.m_delta
    enl = float(np.exp(-lam * d))

    t_int, t_err = _window_integrals(spec.job, d, -1, n)
    toeplitz = enl * lam * t_int[: n + 1]  # k = -1 .. n - 1
    toeplitz[0] += enl  # no-jump shift at k = -1
    row_err = enl * lam * float(t_err.sum())

    row0 = enl * lam * t_int[: n + 1]  # window ((j-1)d, j d) = t_int[j - 1]
    row0[0] += enl

    # row 1: triangle-weighted windows
    w = np.empty(n + 1)
    w_err = 0.0
    if spec.job.exact:
        edges = np.arange(-1, n + 2) * d
        J = spec.job.prefix_cdf(edges)
        K = spec.job.prefix_x_cdf(edges)
        jj = np.arange(n + 1)
        c = jj * d
        # int_{(j-1)d}^{jd} (jd - s)(F(s+d) - F(s)) ds via prefix integrals
        upper = (c + d) * (J[jj + 2] - J[jj + 1]) - (K[jj + 2] - K[jj + 1])
        lower = c * (J[jj + 1] - J[jj]) - (K[jj + 1] - K[jj])
        w = upper - lower
        f_edges = spec.job.cdf(edges)
        w[f_edges[jj + 2] == f_edges[jj]] = 0.0
    else:
        for j in range(n + 1):
            w[j], e = spec.job.weighted_cdf_diff_integral(d, (j - 1) * d, j * d, j * d)
            w_err += e
    np.maximum(w, 0.0, out=w)
    row1 = enl * (2.0 * lam / d) * w
    row1[0] += enl
    row_err = max(row_err, enl * 2.0 * lam / d * w_err)

    toeplitz = _trim_band(toeplitz)
    diag = np.empty(n + 1)
    diag[0] = 1.0 - row0.sum()
    diag[1] = 1.0 - row1.sum()
    csum = np.cumsum(toeplitz)
    last = len(csum) - 1
    for i in range(2, n + 1):
        # row i covers offsets k = -1 .. n - i; entries past the band are 0
        diag[i] = 1.0 - csum[min(n - i + 1, last)]
    _check_diag(diag, row_err)
    return TransitionKernel(
        grid=grid,
        kind=ModelKind.MG1,
        absorbing_zero=False,
        exp_no_jump=enl,
        toeplitz=toeplitz,
        k_lo=-1,
        diag=diag,
        row0=row0,
        row1=row1,
        row_quadrature_error=row_err,
    )


def build_specneg(spec: ModelSpec, grid: Grid) -> TransitionKernel:
    """Kernel of the discretized spectrally negative queue.

    Columns j >= 2 are Toeplitz in k = i - j; column j = 1 collects all
    one-jump paths ending in [0, d], including those stopped at 0:
    Pcheck(i, 1) = e^{-lam d} lam (d - int_{(i-1)d}^{id} F_B).  Dropping
    state 0 is exact because positive drift leaves 0 immediately; with
    ``absorbing_zero`` state 0 is kept as a sink and the one-jump mass that
    would touch 0 within the step is routed into it (an extension beyond the
    non-absorbing construction; entries derive from the probability that the
    jump size exceeds the workload at the jump time).
    """
    if spec.kind is not ModelKind.SPECTRALLY_NEGATIVE:
        raise ValueError("spec is not a spectrally negative model")
    if grid.zero_state != spec.absorbing_zero:
        raise GridError("grid zero-state flag must match the absorbing variant")
    lam, d, n = spec.lam, grid.delta, grid.m_delta
    enl = float(np.exp(-lam * d))

    t_int, t_err = _window_integrals(spec.job, d, -1, max(n - 2, -1))
    toeplitz = enl * lam * t_int  # k = -1 .. n - 2
    toeplitz[0] += enl  # upward shift j = i + 1
    toeplitz = _trim_band(toeplitz)
    row_err = enl * lam * float(t_err.sum())

    ii = np.arange(1, n + 1)
    if spec.job.exact:
        J = spec.job.prefix_cdf(np.arange(n + 1) * d)
        col1 = enl * lam * (d - (J[ii] - J[ii - 1]))
    else:
        col1 = np.empty(n)
        for a, i in enumerate(ii):
            v, e = spec.job.cdf_integral_with_error((i - 1) * d, i * d)
            col1[a] = enl * lam * (d - v)
            row_err += e * enl * lam
    np.maximum(col1, 0.0, out=col1)

    csum = np.cumsum(toeplitz)
    last = len(csum) - 1
    diag_body = np.empty(n)
    for a, i in enumerate(ii):
        # offsets k = max(-1, i - n) .. i - 2 exist for columns j in [2, n];
        # the topmost row has no j = i + 1, its k = -1 mass stays in place
        if n >= 2:
            s = csum[min(i - 1, last)]
            if i == n:
                s -= toeplitz[0]
        else:
            s = 0.0
        diag_body[a] = 1.0 - col1[a] - s

    col0 = None
    if spec.absorbing_zero:
        if spec.job.exact:
            J2 = spec.job.prefix_prefix_cdf(np.arange(n + 2) * d)
            hit = (J2[ii + 1] - 2.0 * J2[ii] + J2[ii - 1]) / d**2
        else:
            hit = np.empty(n)
            for a, i in enumerate(ii):
                v, e = _prefix_window_numeric(spec.job, d, i)
                hit[a] = v
                row_err += e * enl * lam
        q = np.clip(1.0 - hit, 0.0, None)  # P(jump reaches 0 | one jump, start in i)
        # mathematically col0 <= col1 (reaching 0 implies ending below delta);
        # cap before splitting so col0 + col1_abs == col1 holds exactly
        col0 = np.minimum(enl * lam * d * q, col1)
        col1 = col1 - col0
        diag = np.concatenate([[0.0], diag_body])
    else:
        diag = diag_body
    _check_diag(diag, row_err)
    return TransitionKernel(
        grid=grid,
        kind=ModelKind.SPECTRALLY_NEGATIVE,
        absorbing_zero=spec.absorbing_zero,
        exp_no_jump=enl,
        toeplitz=toeplitz,
        k_lo=-1,
        diag=diag,
        col1=col1,
        col0=col0,
        row_quadrature_error=row_err,
    )


def _prefix_window_numeric(job: JobSize, d: float, i: int) -> tuple[float, float]:
    """(1/d^2) int_{(i-1)d}^{id} (J(s+d) - J(s)) ds by bracketing (J convex)."""
    from .jobsize import _bracket_monotone

    def g(s):
        return (job.cdf_integral(s, s + d)) / d

    # g is non-decreasing (window of a non-decreasing F)
    val, err = _bracket_monotone(g, (i - 1) * d, i * d, tol=1e-12)
    return val / d, err / d


def _trim_band(t: np.ndarray) -> np.ndarray:
    """Drop the exactly-zero tail (support exhausted); never thresholds."""
    nz = np.nonzero(t)[0]
    if len(nz) == 0:
        return t[:1].copy()
    return t[: nz[-1] + 1].copy()


def _check_diag(diag: np.ndarray, row_err: float) -> None:
    floor = -(1e-12 + 10.0 * row_err)
    if np.any(diag < floor):
        raise CertificationError(
            f"row sums exceed 1 by more than rounding allows (min diag {diag.min()!r})"
        )
    np.maximum(diag, 0.0, out=diag)


def build_kernel(spec: ModelSpec, grid: Grid) -> TransitionKernel:
    if spec.kind is ModelKind.MG1:
        return build_mg1(spec, grid)
    return build_specneg(spec, grid)
