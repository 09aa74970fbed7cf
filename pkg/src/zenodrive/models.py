"""Parameter-dependent Hamiltonian families.

Two concrete families are provided: the fully connected multiqubit (Lipkin-type)
model reduced to its symmetric collective-spin subspace, and a single-qubit
rotation model that serves as an analytic oracle in tests.  A separate
tensor-product construction of the multiqubit Hamiltonian acts as the
independent correctness oracle for the collective reduction.

Conventions: hbar = 1, energies and times dimensionless.  Single-qubit basis
order is (|0>, |1>) with sigma_z |1> = +|1>, sigma_z |0> = -|0>, so the matrix
of sigma_z in this ordering is diag(-1, +1); kappa = (sigma_z + 1)/2 projects
onto |1>.
"""
from __future__ import annotations

import numpy as np

# Pauli matrices in the (|0>, |1>) ordering described in the module docstring.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])
KAPPA = 0.5 * (SIGMA_Z + np.eye(2))

BRUTE_FORCE_MAX_QUBITS = 8


class HamiltonianFamily:
    """A smooth map from a D-dimensional parameter point to a Hermitian matrix.

    Subclasses set ``dim`` and ``nparams`` and implement ``hamiltonian`` and
    ``derivative``.  ``lower_bounds`` (length D, ``-inf`` where unconstrained)
    declares the admissible parameter domain for path solvers.

    The default batch and second-derivative implementations are generic loops
    and central differences; concrete models override them with closed forms.
    """

    dim: int
    nparams: int
    lower_bounds: np.ndarray | None = None

    def hamiltonian(self, point: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, point: np.ndarray, axis: int) -> np.ndarray:
        raise NotImplementedError

    def second_derivative(self, point: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        h = 1e-4
        point = np.asarray(point, dtype=float)
        step = np.zeros(self.nparams)
        step[axis1] = h
        return (self.derivative(point + step, axis2) - self.derivative(point - step, axis2)) / (2 * h)

    def hamiltonian_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.nparams)
        out = np.stack([self.hamiltonian(p) for p in flat])
        return out.reshape(points.shape[:-1] + (self.dim, self.dim))

    def derivative_many(self, points: np.ndarray, axis: int) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.nparams)
        out = np.stack([self.derivative(p, axis) for p in flat])
        return out.reshape(points.shape[:-1] + (self.dim, self.dim))

    def second_derivative_many(self, points: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.nparams)
        out = np.stack([self.second_derivative(p, axis1, axis2) for p in flat])
        return out.reshape(points.shape[:-1] + (self.dim, self.dim))

    def project_point(self, point: np.ndarray) -> np.ndarray:
        """Clip a parameter point onto the admissible domain."""
        point = np.asarray(point, dtype=float)
        if self.lower_bounds is None:
            return point
        return np.maximum(point, self.lower_bounds)


def collective_spin_ops(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Collective J_x and J_z in the symmetric |j, m> basis, j = N/2.

    Basis states are ordered by m = -j .. +j, so J_z = diag(m).  J_x follows
    from the standard ladder formula J+- |j,m> = sqrt(j(j+1) - m(m+-1)) |j,m+-1>.
    """
    j = n_qubits / 2.0
    m = np.arange(-j, j + 1)
    jz = np.diag(m)
    jplus = np.zeros((n_qubits + 1, n_qubits + 1))
    for k in range(n_qubits):
        jplus[k + 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = 0.5 * (jplus + jplus.T)
    return jx, jz


def _lipkin_monomials(n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Matrices (A_const, A_lam, A_chi, A_chi2) with H = A_const + lam*A_lam + chi*A_chi + chi^2*A_chi2.

    Assembled from the collective-operator identities for sums over qubit pairs:

        sum_{i != j} sx_i sx_j              = 4 Jx^2 - N
        sum_i kappa_i                       = Jz + N/2              (=: Q)
        sum_{i != j} kappa_i kappa_j        = Q^2 - Q
        sum_{i != j} (sx_i kappa_j + h.c.)  = 2 {Jx, Q} - 2 Jx

    which follow from kappa^2 = kappa, sx^2 = 1 and {sx, sz} = 0 on a site.
    Each identity is checked against the tensor-product construction in the
    test suite before the reduced form is trusted.
    """
    n = n_qubits
    jx, jz = collective_spin_ops(n)
    eye = np.eye(n + 1)
    q = jz + (n / 2.0) * eye

    a_const = jz.copy()                      # one-body (1/2) sum sz = Jz
    a_lam = -0.25 * eye - (1.0 / (4 * n)) * (4 * jx @ jx - n * eye)
    a_chi = (
        -(1.0 / n) * jx                       # one-body -(chi/2N) sum sx
        - (1.0 / (4 * n)) * (2 * (jx @ q + q @ jx) - 2 * jx)
    )
    a_chi2 = (
        -0.5 * eye                            # from -(lam + 2 chi^2)/4
        - (1.0 / n) * jz                      # from (1/2 - chi^2/2N) sum sz
        - (1.0 / (4 * n)) * (q @ q - q)
    )
    return a_const, a_lam, a_chi, a_chi2


class LipkinModel(HamiltonianFamily):
    """Fully connected N-qubit model in the (N+1)-dimensional symmetric subspace.

    Control parameters are (lam, chi) with lam unrestricted and chi >= 0; the
    two form a halfplane.  The matrix is real symmetric.  At (0, 0) it reduces
    to J_z with unit level spacing and ground state |j, -j> (all qubits in |0>).
    """

    nparams = 2

    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        self.n_qubits = n_qubits
        self.dim = n_qubits + 1
        self.lower_bounds = np.array([-np.inf, 0.0])
        self._a0, self._alam, self._achi, self._achi2 = _lipkin_monomials(n_qubits)
        self._zero = np.zeros((self.dim, self.dim))

    @property
    def total_spin(self) -> float:
        return self.n_qubits / 2.0

    @property
    def m_values(self) -> np.ndarray:
        """Collective magnetic quantum numbers labelling the basis."""
        j = self.total_spin
        return np.arange(-j, j + 1)

    def _check_domain(self, point: np.ndarray) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if point.shape[-1] != 2:
            raise ValueError("expected a (lam, chi) pair")
        if np.any(point[..., 1] < 0):
            raise ValueError("chi must be >= 0 (model is defined on the halfplane)")
        return point

    def hamiltonian(self, point: np.ndarray) -> np.ndarray:
        lam, chi = self._check_domain(point)
        return self._a0 + lam * self._alam + chi * self._achi + chi**2 * self._achi2

    def derivative(self, point: np.ndarray, axis: int) -> np.ndarray:
        self._check_domain(point)
        if axis == 0:
            return self._alam.copy()
        if axis == 1:
            chi = float(point[1])
            return self._achi + 2 * chi * self._achi2
        raise ValueError(f"invalid parameter axis {axis}")

    def second_derivative(self, point: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        if {axis1, axis2} - {0, 1}:
            raise ValueError(f"invalid parameter axes ({axis1}, {axis2})")
        if axis1 == 1 and axis2 == 1:
            return 2 * self._achi2
        return self._zero.copy()

    def hamiltonian_many(self, points: np.ndarray) -> np.ndarray:
        points = self._check_domain(np.asarray(points, dtype=float))
        lam = points[..., 0, None, None]
        chi = points[..., 1, None, None]
        return self._a0 + lam * self._alam + chi * self._achi + chi**2 * self._achi2

    def derivative_many(self, points: np.ndarray, axis: int) -> np.ndarray:
        points = self._check_domain(np.asarray(points, dtype=float))
        shape = points.shape[:-1] + (self.dim, self.dim)
        if axis == 0:
            return np.broadcast_to(self._alam, shape).copy()
        if axis == 1:
            chi = points[..., 1, None, None]
            return self._achi + 2 * chi * self._achi2
        raise ValueError(f"invalid parameter axis {axis}")

    def second_derivative_many(self, points: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1] + (self.dim, self.dim)
        return np.broadcast_to(self.second_derivative(np.zeros(2), axis1, axis2), shape).copy()


class TwoLevelModel(HamiltonianFamily):
    """Single-qubit rotation family H(theta) = -1/2 (cos(theta) sz + sin(theta) sx).

    One-dimensional parameter space.  The ground state is the Bloch vector at
    polar angle theta, the spectrum is always {-1/2, +1/2}, ground-state
    overlaps obey |<E0(b)|E0(a)>|^2 = cos^2((b - a)/2), and the induced metric
    is the constant g = 1/4.  At theta = 0 the ground state is (0, 1)^T with
    energy -1/2.
    """

    dim = 2
    nparams = 1
    lower_bounds = None

    def hamiltonian(self, point: np.ndarray) -> np.ndarray:
        theta = float(np.asarray(point, dtype=float).reshape(-1)[0])
        return -0.5 * (np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X)

    def derivative(self, point: np.ndarray, axis: int) -> np.ndarray:
        if axis != 0:
            raise ValueError(f"invalid parameter axis {axis}")
        theta = float(np.asarray(point, dtype=float).reshape(-1)[0])
        return -0.5 * (-np.sin(theta) * SIGMA_Z + np.cos(theta) * SIGMA_X)

    def second_derivative(self, point: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        if axis1 != 0 or axis2 != 0:
            raise ValueError(f"invalid parameter axes ({axis1}, {axis2})")
        return -self.hamiltonian(point)

    def hamiltonian_many(self, points: np.ndarray) -> np.ndarray:
        theta = np.asarray(points, dtype=float)[..., 0, None, None]
        return -0.5 * (np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X)

    def derivative_many(self, points: np.ndarray, axis: int) -> np.ndarray:
        if axis != 0:
            raise ValueError(f"invalid parameter axis {axis}")
        theta = np.asarray(points, dtype=float)[..., 0, None, None]
        return -0.5 * (-np.sin(theta) * SIGMA_Z + np.cos(theta) * SIGMA_X)

    def second_derivative_many(self, points: np.ndarray, axis1: int, axis2: int) -> np.ndarray:
        return -self.hamiltonian_many(points)

    def ground_state_exact(self, theta: float) -> np.ndarray:
        return np.array([np.sin(theta / 2.0), np.cos(theta / 2.0)])


def _site_operator(op: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    out = np.array([[1.0]])
    for k in range(n_qubits):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def brute_force_lipkin(n_qubits: int, point: np.ndarray) -> np.ndarray:
    """Full 2^N tensor-product multiqubit Hamiltonian, term by term.

    Test oracle for the collective reduction; limited to N <= 8 so the dense
    matrix stays at most 256 x 256.
    """
    if n_qubits > BRUTE_FORCE_MAX_QUBITS:
        raise ValueError(f"brute-force oracle limited to N <= {BRUTE_FORCE_MAX_QUBITS}")
    lam, chi = np.asarray(point, dtype=float)
    if chi < 0:
        raise ValueError("chi must be >= 0 (model is defined on the halfplane)")
    n = n_qubits
    dim = 2**n
    sx = [_site_operator(SIGMA_X, i, n) for i in range(n)]
    sz = [_site_operator(SIGMA_Z, i, n) for i in range(n)]
    kp = [_site_operator(KAPPA, i, n) for i in range(n)]
    ham = -(lam + 2 * chi**2) / 4.0 * np.eye(dim)
    for i in range(n):
        ham += (0.5 - chi**2 / (2 * n)) * sz[i] - (chi / (2 * n)) * sx[i]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ham -= (1.0 / (4 * n)) * (
                lam * sx[i] @ sx[j]
                + chi * (sx[i] @ kp[j] + kp[i] @ sx[j])
                + chi**2 * kp[i] @ kp[j]
            )
    return ham


def dicke_states(n_qubits: int) -> np.ndarray:
    """Isometry from the symmetric subspace into the full 2^N space.

    Column m (ordered m = -j .. +j) is the normalized equal-weight superposition
    of all product states with m + N/2 qubits in |1>; bit i of the row index
    gives the state of qubit i (1 meaning |1>).
    """
    n = n_qubits
    basis = np.zeros((2**n, n + 1))
    ones = np.array([bin(s).count("1") for s in range(2**n)])
    for k in range(n + 1):
        mask = ones == k
        basis[mask, k] = 1.0 / np.sqrt(mask.sum())
    return basis
