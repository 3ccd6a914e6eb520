"""
Exact truncated-Fock backend.

Builds the three-site Hamiltonian and Lindblad superoperator in a Fock basis
truncated at `cutoff` excitations per site, solves for the steady state,
propagates density matrices and evaluates g2(tau) through the quantum
regression theorem.

Vectorization is column stacking: vec(A X B) = (B^T kron A) vec(X).
"""

import time
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import LinearOperator, lgmres, spilu, splu

from shared.config import SolverSettings
from shared.errors import (
    CutoffTooSmallError,
    DegenerateNullSpaceError,
    EmptyCavityError,
    FeasibilityError,
    ParameterError,
    SolverDidNotConvergeError,
    StepSizeUnderflowError,
)
from shared.logging_config import get_logger, log_solver_run
from shared.models import Method, ObservableRecord, SystemParams

N_SITES = 3
CENTRAL_SITE = 2

logger = get_logger("exact_fock")


class FockSpace(BaseModel):
    """Product space of three modes, each truncated at `cutoff` excitations."""

    model_config = ConfigDict(frozen=True)

    cutoff: int
    n_sites: int = N_SITES

    @model_validator(mode="after")
    def _check_cutoff(self) -> "FockSpace":
        if self.cutoff < 1:
            raise CutoffTooSmallError("cutoff must be at least 1", cutoff=self.cutoff)
        return self

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.levels ** self.n_sites


class DensityMatrix(BaseModel):
    """Dense density matrix; `residual` is set for solved steady states."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: Any
    residual: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])

    def expect(self, op: Any) -> complex:
        return complex(np.trace(op @ self.rho))


class Liouvillian(BaseModel):
    """Sparse Lindblad superoperator acting on column-stacked density matrices."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    superop: Any
    space: FockSpace
    params: SystemParams

    @property
    def dim(self) -> int:
        return self.space.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.superop @ vec(rho), self.dim)

    def norm_max(self) -> float:
        return float(abs(self.superop).max())


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def single_mode_annihilation(cutoff: int) -> sp.csr_matrix:
    """a with entries a[n-1, n] = sqrt(n)."""
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), offsets=1,
                    shape=(cutoff + 1, cutoff + 1), format="csr", dtype=complex)


@lru_cache(maxsize=32)
def _annihilation(cutoff: int, n_sites: int, site: int) -> sp.csr_matrix:
    ident = sp.identity(cutoff + 1, format="csr", dtype=complex)
    op = None
    for k in range(1, n_sites + 1):
        factor = single_mode_annihilation(cutoff) if k == site else ident
        op = factor if op is None else sp.kron(op, factor, format="csr")
    return op


def annihilation(space: FockSpace, site: int) -> sp.csr_matrix:
    """a_k on the full space (sites numbered 1..3, site 1 most significant)."""
    if not 1 <= site <= space.n_sites:
        raise ParameterError("site index out of range", site=site)
    return _annihilation(space.cutoff, space.n_sites, site)


def number_operator(space: FockSpace, site: int) -> sp.csr_matrix:
    a = annihilation(space, site)
    return (a.conj().T @ a).tocsr()


def hermiticity_error(op: sp.spmatrix) -> float:
    diff = op - op.conj().T
    return float(abs(diff).max()) if diff.nnz else 0.0


def build_hamiltonian(params: SystemParams, space: FockSpace) -> sp.csr_matrix:
    """H = sum Delta n_k - (U/2) a2+a2+a2a2 - J (hopping + h.c.) + (Omega/2)(drives)."""
    a1, a2, a3 = (annihilation(space, k) for k in (1, 2, 3))
    a1d, a2d, a3d = (op.conj().T for op in (a1, a2, a3))
    phase = np.exp(1j * params.phi)

    h = params.delta * (a1d @ a1 + a2d @ a2 + a3d @ a3)
    h = h - 0.5 * params.u * (a2d @ a2d @ a2 @ a2)
    h = h - params.j * (a1d @ a2 + a2d @ a1 + a2d @ a3 + a3d @ a2)
    h = h + 0.5 * params.omega * (a1d + a1 + phase * a3d + np.conj(phase) * a3)
    return sp.csr_matrix(h, dtype=complex)


def lindblad_superoperator(hamiltonian: sp.spmatrix, collapse_ops: Sequence[sp.spmatrix],
                           rate: float) -> sp.csr_matrix:
    """L rho = -i[H, rho] + (rate/2) sum (2 c rho c+ - c+c rho - rho c+c)."""
    dim = hamiltonian.shape[0]
    ident = sp.identity(dim, format="csr", dtype=complex)
    superop = -1j * (sp.kron(ident, hamiltonian) - sp.kron(hamiltonian.T, ident))
    for c in collapse_ops:
        cdc = (c.conj().T @ c).tocsr()
        superop = superop + 0.5 * rate * (
            2.0 * sp.kron(c.conj(), c) - sp.kron(ident, cdc) - sp.kron(cdc.T, ident)
        )
    return sp.csr_matrix(superop, dtype=complex)


def build_liouvillian(params: SystemParams, space: FockSpace) -> Liouvillian:
    hamiltonian = build_hamiltonian(params, space)
    collapse = [annihilation(space, k) for k in range(1, space.n_sites + 1)]
    superop = lindblad_superoperator(hamiltonian, collapse, params.gamma)
    return Liouvillian(superop=superop, space=space, params=params)


def liouvillian_spectrum(liouvillian: Liouvillian, max_dim: int = 4096) -> np.ndarray:
    """Full eigenvalue spectrum; only for small (dense) spaces."""
    n = liouvillian.superop.shape[0]
    if n > max_dim:
        raise FeasibilityError("spectrum requested for a large Liouvillian", size=n)
    return np.linalg.eigvals(liouvillian.superop.toarray())


def _trace_indices(dim: int) -> np.ndarray:
    return np.arange(dim) * (dim + 1)


def _steady_vector_dense(superop: sp.spmatrix, dim: int, tol: float) -> np.ndarray:
    dense = superop.toarray()
    singular = np.linalg.svd(dense, compute_uv=False)
    near_zero = int(np.sum(singular <= tol * singular[0]))
    if near_zero > 1:
        raise DegenerateNullSpaceError("steady state is not unique",
                                       near_zero_singular_values=near_zero)
    weight = float(np.mean(np.abs(dense[dense != 0])))
    dense[0, _trace_indices(dim)] += weight
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = weight
    return np.linalg.solve(dense, rhs)


def _bordered_system(superop: sp.spmatrix, dim: int) -> Tuple[sp.csc_matrix, np.ndarray]:
    """L with a weighted trace row added to its first row, and the matching right-hand side."""
    weight = float(np.mean(np.abs(superop.data)))
    n = dim * dim
    border = sp.csc_matrix((weight * np.ones(dim), (np.zeros(dim, dtype=int), _trace_indices(dim))),
                           shape=(n, n))
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = weight
    return (superop.tocsc() + border).tocsc(), rhs


def _steady_vector_sparse(superop: sp.spmatrix, dim: int) -> Optional[np.ndarray]:
    matrix, rhs = _bordered_system(superop, dim)
    try:
        lu = splu(matrix, permc_spec="COLAMD")
    except RuntimeError as e:
        logger.warning("Bordered factorization failed", error=str(e), dim=dim)
        return None
    return lu.solve(rhs)


def _steady_vector_iterative(superop: sp.spmatrix, dim: int, settings: SolverSettings,
                             x0: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    """Bordered system solved by LGMRES with an incomplete-LU preconditioner.

    The matrix is reordered with reverse Cuthill-McKee before the ILU. A failed
    attempt is retried with a ten times smaller drop tolerance, warm-started
    from the previous iterate.
    """
    matrix, rhs = _bordered_system(superop, dim)
    perm = reverse_cuthill_mckee(matrix.tocsr(), symmetric_mode=False)
    permuted = matrix.tocsr()[perm][:, perm].tocsc()
    b = rhs[perm]
    guess = None if x0 is None else np.asarray(x0, dtype=complex)[perm]
    drop_tol = settings.ilu_drop_tol
    fill_factor = min(settings.ilu_fill_factor, settings.factor_budget / max(permuted.nnz, 1))

    x: Optional[np.ndarray] = None
    for attempt in range(settings.ilu_attempts):
        try:
            ilu = spilu(permuted, drop_tol=drop_tol, fill_factor=fill_factor, permc_spec="COLAMD")
        except RuntimeError as e:
            logger.warning("Incomplete factorization failed", error=str(e), attempt=attempt,
                           drop_tol=drop_tol)
            drop_tol /= 10.0
            continue
        preconditioner = LinearOperator(permuted.shape, matvec=ilu.solve, dtype=complex)
        x, info = lgmres(permuted, b, x0=guess, rtol=settings.iterative_rtol, atol=0.0,
                         maxiter=settings.iterative_maxiter, M=preconditioner)
        relative = float(np.linalg.norm(permuted @ x - b) / np.linalg.norm(b))
        logger.debug("Iterative steady-state attempt", attempt=attempt, info=info,
                     relative_residual=relative, drop_tol=drop_tol, factor_nnz=ilu.nnz)
        if info == 0:
            break
        guess = x
        drop_tol /= 10.0

    if x is None:
        return None
    v = np.empty_like(x)
    v[perm] = x
    return v


def embed_state(state: DensityMatrix, space: FockSpace) -> DensityMatrix:
    """Pad a state from a smaller cutoff with zeros so it lives in `space`."""
    lower = round(state.dim ** (1.0 / space.n_sites))
    if lower ** space.n_sites != state.dim or lower > space.levels:
        raise ParameterError("state does not fit the target Fock space",
                             dim=state.dim, levels=space.levels)
    grid = np.arange(lower)
    n1, n2, n3 = np.meshgrid(grid, grid, grid, indexing="ij")
    index = ((n1 * space.levels + n2) * space.levels + n3).ravel()
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[np.ix_(index, index)] = state.rho
    return DensityMatrix(rho=rho)


def _inverse_iteration(superop: sp.spmatrix, dim: int, steps: int,
                       start: Optional[np.ndarray]) -> np.ndarray:
    """Shifted inverse iteration for the eigenvector closest to zero."""
    n = dim * dim
    shift = 1e-9 * float(abs(superop).max())
    try:
        lu = splu((superop - shift * sp.identity(n, format="csc", dtype=complex)).tocsc())
    except RuntimeError as e:
        raise SolverDidNotConvergeError("inverse iteration factorization failed", reason=str(e))
    v = start if start is not None else vec(np.eye(dim) / dim)
    idx = _trace_indices(dim)
    for _ in range(steps):
        v = lu.solve(v)
        v = v / v[idx].sum()
    return v


def _normalize_state(v: np.ndarray, dim: int) -> np.ndarray:
    rho = unvec(v, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def steady_state(liouvillian: Liouvillian, settings: Optional[SolverSettings] = None,
                 guess: Optional[DensityMatrix] = None) -> DensityMatrix:
    """Null vector of L, trace-normalized and residual-checked.

    Cutoffs up to `dense_cutoff` use a dense solve, up to `direct_max_cutoff`
    a sparse LU of the bordered system, and larger ones a preconditioned
    iterative solve (optionally started from `guess`).
    """
    settings = settings or SolverSettings()
    superop = liouvillian.superop
    dim = liouvillian.dim
    cutoff = liouvillian.space.cutoff
    scale = liouvillian.norm_max()
    tol = settings.steady_residual_tol

    if cutoff <= settings.dense_cutoff:
        v = _steady_vector_dense(superop, dim, tol)
    elif cutoff <= settings.direct_max_cutoff:
        v = _steady_vector_sparse(superop, dim)
    else:
        x0 = None if guess is None else vec(guess.rho)
        v = _steady_vector_iterative(superop, dim, settings, x0)

    residual = np.inf
    if v is not None and np.all(np.isfinite(v)):
        rho = _normalize_state(v, dim)
        residual = float(np.max(np.abs(superop @ vec(rho))))

    if residual > tol * scale and cutoff > settings.direct_max_cutoff:
        logger.error("Iterative steady-state solve did not converge", residual=residual,
                     cutoff=cutoff, scale=scale)
        raise SolverDidNotConvergeError("steady state residual above tolerance",
                                        residual=residual, scale=scale, cutoff=cutoff)

    if residual > tol * scale:
        logger.warning("Direct steady-state solve inaccurate, using inverse iteration",
                       residual=residual, cutoff=liouvillian.space.cutoff)
        v = _inverse_iteration(superop, dim, settings.inverse_iteration_steps,
                               v if v is not None and np.all(np.isfinite(v)) else None)
        rho = _normalize_state(v, dim)
        residual = float(np.max(np.abs(superop @ vec(rho))))
        if residual > tol * scale:
            raise SolverDidNotConvergeError("steady state residual above tolerance",
                                            residual=residual, scale=scale)

    state = DensityMatrix(rho=rho, residual=residual)
    min_eig = state.min_eigenvalue()
    if min_eig < -1e-8:
        raise SolverDidNotConvergeError("steady state is not positive",
                                        min_eigenvalue=min_eig, residual=residual)
    return state


def _evolve(superop: sp.spmatrix, v0: np.ndarray, taus: Sequence[float],
            settings: SolverSettings) -> Dict[float, np.ndarray]:
    """Integrate dv/dt = L v and return the state at each requested delay."""
    for tau in taus:
        if tau < 0.0:
            raise ParameterError("delays must be nonnegative", tau=tau)
    unique = sorted(set(float(t) for t in taus))
    states: Dict[float, np.ndarray] = {}
    if not unique:
        return states
    if unique[-1] == 0.0:
        return {0.0: v0.copy()}

    solution = solve_ivp(
        lambda t, y: superop @ y,
        (0.0, unique[-1]),
        v0.astype(complex),
        method="DOP853",
        t_eval=unique,
        rtol=settings.ode_rtol,
        atol=settings.ode_atol,
    )
    if not solution.success:
        raise StepSizeUnderflowError("time integration failed", reason=solution.message)
    for index, tau in enumerate(unique):
        states[tau] = v0.copy() if tau == 0.0 else solution.y[:, index]
    return states


def propagate(liouvillian: Liouvillian, rho0: DensityMatrix, tau: float,
              settings: Optional[SolverSettings] = None) -> DensityMatrix:
    """exp(L tau) rho0; the input need not be a physical state."""
    settings = settings or SolverSettings()
    if tau < 0.0:
        raise ParameterError("tau must be nonnegative", tau=tau)
    if tau == 0.0:
        return DensityMatrix(rho=np.array(rho0.rho, dtype=complex, copy=True))
    states = _evolve(liouvillian.superop, vec(rho0.rho), [tau], settings)
    return DensityMatrix(rho=unvec(states[float(tau)], liouvillian.dim))


def occupation(state: DensityMatrix, space: FockSpace, site: int = CENTRAL_SITE) -> float:
    return state.expect(number_operator(space, site)).real


def g2_from_state(state: DensityMatrix, space: FockSpace, floor: float = 1e-12) -> float:
    """<a2+ a2+ a2 a2> / n2^2 for a given state."""
    a = annihilation(space, CENTRAL_SITE)
    ad = a.conj().T
    n2 = state.expect(ad @ a).real
    if n2 < floor:
        raise EmptyCavityError("central cavity is empty, g2 undefined", n2=n2)
    return state.expect(ad @ ad @ a @ a).real / (n2 * n2)


def g2_tau(params: SystemParams, space: FockSpace, taus: Sequence[float],
           settings: Optional[SolverSettings] = None) -> List[Tuple[float, float]]:
    """g2(tau) = Tr[n2 exp(L tau)(a2 rho_ss a2+)] / n2^2, in the order of `taus`."""
    settings = settings or SolverSettings()
    liouvillian = build_liouvillian(params, space)
    state = steady_state(liouvillian, settings)
    a = annihilation(space, CENTRAL_SITE)
    ad = a.conj().T
    n_op = (ad @ a).tocsr()
    n2 = state.expect(n_op).real
    if n2 < settings.n2_floor:
        raise EmptyCavityError("central cavity is empty, g2 undefined", n2=n2)

    sigma = a @ state.rho @ ad
    states = _evolve(liouvillian.superop, vec(sigma), taus, settings)
    curve = []
    for tau in taus:
        evolved = unvec(states[float(tau)], space.dim)
        curve.append((float(tau), float(np.trace(n_op @ evolved).real / (n2 * n2))))
    return curve


def correlation_amplitude(curve: Sequence[Tuple[float, float]], tau_min: float = 0.0) -> float:
    """Largest |g2(tau) - 1| over delays tau >= tau_min."""
    values = [abs(g2 - 1.0) for tau, g2 in curve if tau >= tau_min]
    return max(values) if values else 0.0


def liouvillian_entries(cutoff: int) -> int:
    return (cutoff + 1) ** (2 * N_SITES)


def estimate_nonzeros(cutoff: int) -> int:
    """Rough nonzero count of the three-site Liouvillian."""
    return 21 * liouvillian_entries(cutoff)


def check_feasibility(cutoff: int, settings: SolverSettings, force: bool = False) -> None:
    """Refuse dense-entry counts beyond the hard guard; the nonzero and factor budgets can be forced."""
    if cutoff < 1:
        raise CutoffTooSmallError("cutoff must be at least 1", cutoff=cutoff)
    entries = liouvillian_entries(cutoff)
    if entries > settings.max_liouvillian_entries:
        raise FeasibilityError("Liouvillian too large for the exact backend; use an analytic backend",
                               cutoff=cutoff, entries=entries)
    if force:
        return
    nonzeros = estimate_nonzeros(cutoff)
    if nonzeros > settings.nonzero_budget:
        raise FeasibilityError("estimated Liouvillian nonzeros exceed the budget (use --force)",
                               cutoff=cutoff, nonzeros=nonzeros, budget=settings.nonzero_budget)
    if cutoff > settings.direct_max_cutoff:
        factor = int(nonzeros * settings.ilu_fill_factor)
        if factor > settings.factor_budget:
            raise FeasibilityError("estimated preconditioner fill exceeds the budget (use --force)",
                                   cutoff=cutoff, factor_nonzeros=factor,
                                   budget=settings.factor_budget)


def solve_scan(params: SystemParams, cutoffs: Sequence[int],
               settings: Optional[SolverSettings] = None) -> List[Tuple[DensityMatrix, FockSpace]]:
    """Steady states for ascending cutoffs, each started from the previous one."""
    settings = settings or SolverSettings()
    results: List[Tuple[DensityMatrix, FockSpace]] = []
    guess: Optional[DensityMatrix] = None
    for cutoff in sorted(cutoffs):
        space = FockSpace(cutoff=cutoff)
        if guess is not None:
            guess = embed_state(guess, space)
        state = steady_state(build_liouvillian(params, space), settings, guess)
        results.append((state, space))
        guess = state
    return results


def _relative_change(value: float, previous: float, floor: float) -> float:
    return abs(value - previous) / max(value, floor)


def cutoff_scan(params: SystemParams, cutoffs: Sequence[int],
                settings: Optional[SolverSettings] = None) -> List[Dict[str, float]]:
    """n2 per cutoff with the relative change from the previous cutoff."""
    settings = settings or SolverSettings()
    rows: List[Dict[str, float]] = []
    previous: Optional[float] = None
    for state, space in solve_scan(params, cutoffs, settings):
        n2 = occupation(state, space)
        delta = float("nan") if previous is None else _relative_change(n2, previous, settings.n2_floor)
        rows.append({"cutoff": space.cutoff, "n2": n2, "delta": delta})
        previous = n2
    return rows


def single_site_moments(drive: complex, u: float, gamma: float, cutoff: int,
                        max_order: int = 2) -> np.ndarray:
    """Normal-ordered moments <(a+)^k a^l> of one driven Kerr cavity.

    H = -(U/2) a+a+aa + (drive/2) a+ + (drive*/2) a, decay rate gamma.
    """
    a = single_mode_annihilation(cutoff)
    ad = a.conj().T.tocsr()
    hamiltonian = -0.5 * u * (ad @ ad @ a @ a) + 0.5 * drive * ad + 0.5 * np.conj(drive) * a
    superop = lindblad_superoperator(sp.csr_matrix(hamiltonian), [a], gamma)
    dim = cutoff + 1
    v = _steady_vector_sparse(superop, dim)
    if v is None:
        raise SolverDidNotConvergeError("single-site steady state failed", cutoff=cutoff)
    rho = _normalize_state(v, dim)

    ad_dense, a_dense = ad.toarray(), a.toarray()
    table = np.zeros((max_order + 1, max_order + 1), dtype=complex)
    for k in range(max_order + 1):
        left = np.linalg.matrix_power(ad_dense, k)
        for l in range(max_order + 1):
            table[k, l] = np.trace(left @ np.linalg.matrix_power(a_dense, l) @ rho)
    return table


def converged_single_site_moments(drive: complex, u: float, gamma: float, max_order: int = 2,
                                  tol: float = 1e-11, max_cutoff: int = 160) -> Tuple[np.ndarray, int]:
    """Raise the cutoff until every moment changes by less than `tol` (relative)."""
    n_est = abs(drive) ** 2 / gamma ** 2
    cutoff = int(np.ceil(n_est + 6.0 * np.sqrt(n_est) + 10 + 2 * max_order))
    table = single_site_moments(drive, u, gamma, cutoff, max_order)
    while cutoff < max_cutoff:
        cutoff += 6
        refined = single_site_moments(drive, u, gamma, cutoff, max_order)
        change = np.max(np.abs(refined - table) / np.maximum(np.abs(refined), 1e-300))
        table = refined
        if change < tol:
            return table, cutoff
    raise SolverDidNotConvergeError("single-site moments did not converge in cutoff",
                                    cutoff=cutoff)


class ExactFockBackend:
    """Steady-state observables from the truncated-Fock master equation."""

    method = Method.EXACT_FOCK

    def __init__(self, settings: Optional[SolverSettings] = None, cutoff: Optional[int] = None,
                 force: bool = False):
        self.settings = settings or SolverSettings()
        self.cutoff = self.settings.default_cutoff if cutoff is None else cutoff
        self.force = force
        self.logger = get_logger("exact_fock")

    def observables(self, params: SystemParams) -> ObservableRecord:
        check_feasibility(self.cutoff, self.settings, self.force)
        start = time.perf_counter()
        check = self.settings.convergence_check and self.cutoff > 1
        cutoffs = [self.cutoff - 1, self.cutoff] if check else [self.cutoff]
        solved = solve_scan(params, cutoffs, self.settings)
        state, space = solved[-1]
        n2 = occupation(state, space)

        diagnostics: Dict[str, Any] = {"cutoff": self.cutoff, "residual": state.residual}
        g2 = None
        if n2 >= self.settings.n2_floor:
            g2 = g2_from_state(state, space, self.settings.n2_floor)
        else:
            diagnostics["g2_undefined"] = "EmptyCavityError"

        if check:
            lower = occupation(*solved[0])
            delta = _relative_change(n2, lower, self.settings.n2_floor)
            diagnostics["convergence_delta"] = delta
            diagnostics["converged"] = delta < self.settings.convergence_tol

        log_solver_run(self.logger, self.method.value, params.model_dump(), True,
                       (time.perf_counter() - start) * 1e3, cutoff=self.cutoff, n2=n2)
        return ObservableRecord.build(params, self.method, n2, g2, diagnostics)

    def g2_curve(self, params: SystemParams, taus: Sequence[float]) -> List[Tuple[float, float]]:
        check_feasibility(self.cutoff, self.settings, self.force)
        return g2_tau(params, FockSpace(cutoff=self.cutoff), taus, self.settings)
