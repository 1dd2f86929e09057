"""Target distributions: potential energy U(q) and its gradient.

Every target speaks the same small protocol: ``dimension``, ``potential(q)``,
``gradient(q)``, ``evaluate(q)`` returning ``(U, grad)``, and
``log_density_unnormalized(q) = -U(q)``.  ``potential`` and ``gradient``
accept a single state of shape ``(d,)`` or a batch of shape ``(n, d)``; the
batched forms are what the experiment drivers use to turn a trajectory into
observable series.

Targets with a closed-form fast path also report ``kernel_args()``, a flat
parameter pack consumed by the jitted chain drivers in ``_engine``.  A target
built from user callables (``CustomTarget``) has no pack; chains on it run
through the pure-python loop, which draws from the identical random stream.
"""

from __future__ import annotations

import numpy as np

# kernel kind tags, shared with _engine
KIND_CUSTOM = -1
KIND_GAUSSIAN = 0
KIND_LMIXTURE = 1
KIND_NN = 2
KIND_LOGISTIC = 3

_EMPTY_MAT = np.zeros((0, 0))
_EMPTY_VEC = np.zeros(0)


def _check_state(q, dimension: int, batch_ok: bool = True) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        if q.shape[0] != dimension:
            raise ValueError(
                f"state has dimension {q.shape[0]}, target expects {dimension}"
            )
    elif q.ndim == 2 and batch_ok:
        if q.shape[1] != dimension:
            raise ValueError(
                f"state batch has dimension {q.shape[1]}, target expects {dimension}"
            )
    else:
        raise ValueError(f"state must be (d,) or (n, d), got shape {q.shape}")
    return q


class Target:
    """Base class wiring evaluate/log-density on top of potential/gradient."""

    dimension: int = 0
    name: str = "target"

    def potential(self, q):
        raise NotImplementedError

    def gradient(self, q):
        raise NotImplementedError

    def evaluate(self, q):
        """Return (U(q), grad U(q)) in one call."""
        return self.potential(q), self.gradient(q)

    def log_density_unnormalized(self, q):
        return -self.potential(q)

    def kernel_args(self):
        """(kind, mat, vec, s0, s1) pack for the jitted drivers, or None."""
        return None

    def initial_state(self) -> np.ndarray:
        return np.zeros(self.dimension)


class StdGaussian(Target):
    """Standard normal in d dimensions: U(q) = |q|^2 / 2."""

    def __init__(self, dimension: int = 1):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.name = f"gaussian{dimension}d"

    def potential(self, q):
        q = _check_state(q, self.dimension)
        return 0.5 * np.sum(q * q, axis=-1)

    def gradient(self, q):
        q = _check_state(q, self.dimension)
        return q.copy()

    def kernel_args(self):
        return (KIND_GAUSSIAN, _EMPTY_MAT, _EMPTY_VEC, 0.0, 0.0)


class LMixture(Target):
    """Two-component Gaussian mixture shaped like an L in the plane.

    rho(q) is proportional to

        exp(-(36 (q1+1)^2 + (q2-3)^2) / 2) + exp(-((q1-2)^2 + 36 q2^2) / 2)

    so one component is centered at (-1, 3), tight in q1, and the other at
    (2, 0), tight in q2.  U = -log rho, evaluated with the max subtracted so
    large |q| saturates instead of overflowing.
    """

    dimension = 2
    name = "lmixture"

    def _energies(self, q):
        q1 = q[..., 0]
        q2 = q[..., 1]
        e1 = 0.5 * (36.0 * (q1 + 1.0) ** 2 + (q2 - 3.0) ** 2)
        e2 = 0.5 * ((q1 - 2.0) ** 2 + 36.0 * q2**2)
        return e1, e2

    def potential(self, q):
        q = _check_state(q, 2)
        e1, e2 = self._energies(q)
        lo = np.minimum(e1, e2)
        return lo - np.log1p(np.exp(-np.abs(e1 - e2)))

    def gradient(self, q):
        q = _check_state(q, 2)
        e1, e2 = self._energies(q)
        # softmax weight of component 1, stable for any energy gap
        w1 = 1.0 / (1.0 + np.exp(np.clip(e1 - e2, -700.0, 700.0)))
        w2 = 1.0 - w1
        g = np.empty_like(q)
        g[..., 0] = w1 * (36.0 * (q[..., 0] + 1.0)) + w2 * (q[..., 0] - 2.0)
        g[..., 1] = w1 * (q[..., 1] - 3.0) + w2 * (36.0 * q[..., 1])
        return g

    def kernel_args(self):
        return (KIND_LMIXTURE, _EMPTY_MAT, _EMPTY_VEC, 0.0, 0.0)

    def initial_state(self) -> np.ndarray:
        # the mode that is loose in q1 (the horizontal leg of the L)
        return np.array([2.0, 0.0])


class OneNodeNN(Target):
    """Bayesian regression posterior for a one-node tanh network.

    Model u(q; x) = q3 * tanh(q1 x + q2) + q4 with Gaussian likelihood
    precision beta and an isotropic Gaussian prior with precision alpha:

        U(q) = (beta/2) sum_i (y_i - u(q; x_i))^2 + (alpha/2) |q|^2

    The posterior is exactly invariant under (q1, q2, q3) -> (-q1, -q2, -q3)
    because tanh is odd.
    """

    dimension = 4

    def __init__(self, x: np.ndarray, y: np.ndarray, beta: float = 2.5, alpha: float = 0.8):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y must have matching length")
        self.x = x
        self.y = y
        self.beta = float(beta)
        self.alpha = float(alpha)
        self.name = "nn1"

    def predict(self, q, x=None):
        """Network output u(q; x); broadcasts a batch of states against x."""
        if x is None:
            x = self.x
        x = np.asarray(x, dtype=float)
        q = _check_state(q, 4)
        q1, q2, q3, q4 = (q[..., i] for i in range(4))
        if q.ndim == 2:
            t = np.tanh(np.outer(q1, x) + q2[:, None])
            return q3[:, None] * t + q4[:, None]
        return q3 * np.tanh(q1 * x + q2) + q4

    def potential(self, q):
        q = _check_state(q, 4)
        r = self.y - self.predict(q)
        data = 0.5 * self.beta * np.sum(r * r, axis=-1)
        return data + 0.5 * self.alpha * np.sum(q * q, axis=-1)

    def gradient(self, q):
        q = _check_state(q, 4)
        single = q.ndim == 1
        qb = q[None, :] if single else q
        q1, q2, q3, q4 = (qb[:, i] for i in range(4))
        t = np.tanh(np.outer(q1, self.x) + q2[:, None])  # (n, npts)
        r = self.y[None, :] - (q3[:, None] * t + q4[:, None])
        sech2 = 1.0 - t * t
        g = np.empty_like(qb)
        g[:, 0] = -self.beta * np.sum(r * q3[:, None] * self.x[None, :] * sech2, axis=1)
        g[:, 1] = -self.beta * np.sum(r * q3[:, None] * sech2, axis=1)
        g[:, 2] = -self.beta * np.sum(r * t, axis=1)
        g[:, 3] = -self.beta * np.sum(r, axis=1)
        g += self.alpha * qb
        return g[0] if single else g

    def kernel_args(self):
        mat = np.column_stack([self.x, self.y])
        return (KIND_NN, mat, _EMPTY_VEC, self.beta, self.alpha)


class LogisticRegression(Target):
    """Bayesian logistic regression posterior.

    Features X are (n, d) with labels y in {0, 1}; sigma = 1/(1+exp(-X q)).

        U(q) = -beta sum_i [y_i log sigma_i + (1-y_i) log(1-sigma_i)]
               + (alpha/2) |q|^2

    computed through log(1+exp(-z)) in its stable form, so U stays finite for
    any finite q.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray,
                 beta: float = 1.0, alpha: float = 0.1):
        X = np.asarray(features, dtype=float)
        y = np.asarray(labels, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("features must be (n, d) with one label per row")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must be 0 or 1")
        self.features = X
        self.labels = y
        self.beta = float(beta)
        self.alpha = float(alpha)
        self.dimension = X.shape[1]
        self.name = "logistic"

    def margins(self, q):
        q = _check_state(q, self.dimension)
        return q @ self.features.T

    def predict_proba(self, q):
        z = self.margins(q)
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out

    def potential(self, q):
        q = _check_state(q, self.dimension)
        z = self.margins(q)
        # -[y log s + (1-y) log(1-s)] = softplus(z) - y z, stably
        softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
        nll = np.sum(softplus - self.labels * z, axis=-1)
        return self.beta * nll + 0.5 * self.alpha * np.sum(q * q, axis=-1)

    def gradient(self, q):
        q = _check_state(q, self.dimension)
        s = self.predict_proba(q)
        return self.beta * ((s - self.labels) @ self.features) + self.alpha * q

    def kernel_args(self):
        return (KIND_LOGISTIC, self.features, self.labels, self.beta, self.alpha)


class CustomTarget(Target):
    """Target from user-supplied potential/gradient callables."""

    def __init__(self, potential, gradient, dimension: int, name: str = "custom"):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self._potential = potential
        self._gradient = gradient
        self.dimension = dimension
        self.name = name

    def potential(self, q):
        q = _check_state(q, self.dimension)
        return self._potential(q)

    def gradient(self, q):
        q = _check_state(q, self.dimension)
        g = np.asarray(self._gradient(q), dtype=float)
        if g.shape != q.shape:
            raise ValueError(f"gradient shape {g.shape} does not match state {q.shape}")
        return g
