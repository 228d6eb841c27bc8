"""Reference values for the fidelity loss, built from dense matrices.

Run: python3 loss_oracle.py > loss_golden.txt

Qubit 0 is the most significant bit. Gates are embedded with explicit
Kronecker products; partial traces use einsum on reshaped tensors.
"""
import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"RX": X, "RY": Y, "RZ": Z, "ZZ": Z, "XX": X}


def expm_pauli(p, phi):
    # P² = I for every Pauli string.
    return np.cos(phi / 2) * np.eye(p.shape[0]) - 1j * np.sin(phi / 2) * p


def embed(ops, n):
    """Kronecker product with ops[q] on qubit q and identity elsewhere."""
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, ops.get(q, I2))
    return out


def gate(kind, phi, qubits, n):
    p = PAULI[kind]
    full = embed({q: p for q in qubits}, n)
    return expm_pauli(full, phi)


def ring(n):
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def embedding_unitary(n, layers, omega, tprime):
    u = np.eye(2**n, dtype=complex)
    k = 0
    for _ in range(layers):
        for q in range(n):
            u = gate("RX", tprime, [q], n) @ u
            u = gate("RY", omega[k], [q], n) @ u
            k += 1
        for a, b in ring(n):
            u = gate("ZZ", omega[k], [a, b], n) @ u
            k += 1
    assert k == len(omega)
    return u


def denoising_unitary(n, layers, theta):
    u = np.eye(2**n, dtype=complex)
    k = 0
    for _ in range(layers):
        for q in range(n):
            for kind in ("RZ", "RX", "RZ"):
                u = gate(kind, theta[k], [q], n) @ u
                k += 1
        for a in range(n):
            for b in range(a + 1, n):
                u = gate("XX", theta[k], [a, b], n) @ u
                k += 1
    assert k == len(theta)
    return u


def keep_leading(rho, n_total, keep):
    da, db = 2**keep, 2 ** (n_total - keep)
    return np.einsum("ikjk->ij", rho.reshape(da, db, da, db))


def keep_trailing(rho, n_total, keep):
    da, db = 2 ** (n_total - keep), 2**keep
    return np.einsum("kikj->ij", rho.reshape(da, db, da, db))


def psd_sqrt(a):
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = np.where(w < 1e-14, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    s = psd_sqrt(rho)
    inner = s @ sigma @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    w = np.where(w < 1e-14, 0.0, w)
    return min(1.0, max(0.0, float(np.sum(np.sqrt(w)) ** 2)))


def alpha_bar(t, steps, s):
    g = lambda u: np.cos(((u / steps + s) / (1 + s)) * np.pi / 2) ** 2
    return g(t) / g(0)


def forward(rho0, t, steps, s):
    a = alpha_bar(t, steps, s) if t > 0 else 1.0
    d = rho0.shape[0]
    return (1 - a) * np.eye(d) / d + a * rho0


def tau_state(n_tau, layers, omega, t, steps):
    u = embedding_unitary(n_tau, layers, omega, t * np.pi / steps)
    zero = np.zeros(2**n_tau, dtype=complex)
    zero[0] = 1
    psi = u @ zero
    return np.outer(psi, psi.conj())


def backward(variant, n, n_tau, layers_e, layers_d, params, rho_t, t, steps):
    tau = tau_state(n_tau, layers_e, params["omega"], t, steps)
    if variant == "qgdm":
        joint = np.kron(tau, rho_t)
        u = denoising_unitary(n_tau + n, layers_d, params["theta"])
        return keep_leading(u @ joint @ u.conj().T, n_tau + n, n)
    if variant == "naive":
        joint = np.kron(tau, rho_t)
        u = denoising_unitary(n_tau + n, layers_d, params["theta"])
        return keep_trailing(u @ joint @ u.conj().T, n_tau + n, n)
    if variant == "rqgdm":
        u1 = denoising_unitary(n, layers_d, params["theta"])
        last = keep_trailing(u1 @ rho_t @ u1.conj().T, n, 1)
        joint = np.kron(tau, last)
        u2 = denoising_unitary(n + 1, layers_d, params["theta2"])
        return keep_leading(u2 @ joint @ u2.conj().T, n + 1, n)
    raise ValueError(variant)


def loss_t(case, t):
    steps, s = case["steps"], 0.008
    rho0 = case["rho0"]
    target = forward(rho0, t - 1, steps, s)
    rho_t = forward(rho0, t, steps, s)
    out = backward(case["variant"], case["n"], case["n_tau"], 5, 1, case["params"], rho_t, t, steps)
    return 1.0 - fidelity(target, out)


def angles(count, start, step):
    return [float((start + step * i) % np.pi) for i in range(count)]


def pure(amps):
    v = np.array(amps, dtype=complex)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


CASES = {
    "qgdm_n1": dict(
        variant="qgdm", n=1, n_tau=1, steps=30,
        params=dict(omega=angles(5, 0.1, 0.37), theta=angles(7, 0.2, 0.53)),
        rho0=pure([np.cos(0.6), np.exp(0.9j) * np.sin(0.6)]),
    ),
    "naive_n1": dict(
        variant="naive", n=1, n_tau=1, steps=30,
        params=dict(omega=angles(5, 0.4, 0.29), theta=angles(7, 1.1, 0.61)),
        rho0=pure([np.cos(1.2), np.exp(-0.3j) * np.sin(1.2)]),
    ),
    "rqgdm_n2": dict(
        variant="rqgdm", n=2, n_tau=2, steps=30,
        params=dict(omega=angles(15, 0.3, 0.41), theta=angles(7, 0.5, 0.23), theta2=angles(12, 0.9, 0.47)),
        rho0=0.7 * pure([1, 0.5j, -0.25, 0.1]) + 0.3 * pure([0.2, 1, 0.3j, -0.6]),
    ),
}

BATCH = [2, 3, 5, 7, 8, 11, 13, 14, 17, 19, 21, 22, 25, 27, 29, 30]

if __name__ == "__main__":
    for name, case in CASES.items():
        for t in (1, 2, 15, 30):
            print(f"{name} loss_t {t} {loss_t(case, t)!r}")
        total = loss_t(case, 1) + 0.02 * np.mean([loss_t(case, t) for t in BATCH])
        print(f"{name} total_loss {float(total)!r}")
