"""Reference computations that share no code with the library."""
import numpy as np


def dense_spectrum(matrix) -> np.ndarray:
    """All eigenvalues of a (small) Hermitian sparse matrix, ascending."""
    return np.linalg.eigvalsh(matrix.toarray())


def square_5pt_eigenvalues(n: int, count: int) -> np.ndarray:
    """Lowest eigenvalues of the 5-point Dirichlet Laplacian on the unit square, h = 1/n."""
    h = 1.0 / n
    p = np.arange(1, n)
    one_d = 4.0 / h ** 2 * np.sin(p * np.pi * h / 2.0) ** 2
    return np.sort(np.add.outer(one_d, one_d).ravel())[:count]


def w1_norm_loops(u: np.ndarray, h1: float, h2: float) -> float:
    """Discrete W1 norm written out with explicit loops (last column = periodic image)."""
    n1, n2 = u.shape
    total = 0.0
    for i in range(n1 - 1):
        for j in range(n2):
            total += abs(u[i, j]) ** 2
            total += abs((u[i + 1, j] - u[i, j]) / h1) ** 2
            if j < n2 - 1:
                total += abs((u[i, j + 1] - u[i, j]) / h2) ** 2
    return float(np.sqrt(h1 * h2 * total))


def fd_laplacian(f, x, y, h):
    """Five-point Laplacian of a callable at points (x, y)."""
    return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / h ** 2
