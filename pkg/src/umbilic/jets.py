"""Truncated power series (jets) in z, w, z̄, w̄.

A jet stores Taylor coefficients, i.e. ``(1/(a!b!c!d!)) ∂_z^a ∂_w^b ∂_z̄^c ∂_w̄^d f``
at a basepoint, for all multi-indices of total degree ``<= order``.  Coefficients
live in a dense array whose first axis runs over the multi-indices in graded
order (total degree first, then lexicographic), so truncation to a lower order
is a prefix slice.  Trailing axes are batch axes: one ``Jet`` can carry the jets
of the same function at many basepoints, which is how the tensor kernel is
vectorized over scan grids.

Order 6 is the maximum.  The fifth row of the A₃ matrix is a second derivative
of ρ hit four times by L̄, whose coefficients are first derivatives of ρ, so
2 + 4 = 6 derivatives of ρ are the most ever needed.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import comb, factorial

import numpy as np

MAX_ORDER = 6
VARIABLES = ("z", "w", "zb", "wb")
_VAR_AXIS = {name: k for k, name in enumerate(VARIABLES)}
# accept unicode spellings too
_VAR_AXIS.update({"z̄": 2, "w̄": 3})


class JetError(ValueError):
    """Structural misuse of jets: mismatched basepoints or orders, order underflow."""


class HolomorphyError(JetError):
    """A map passed to :func:`compose` has antiholomorphic coefficients."""


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int, int], ...]:
    """All (a, b, c, d) with a+b+c+d <= order, in graded lexicographic order."""
    out = []
    for deg in range(order + 1):
        for idx in product(range(deg + 1), repeat=4):
            if sum(idx) == deg:
                out.append(idx)
    out.sort(key=lambda m: (sum(m), tuple(-x for x in m)))
    return tuple(out)


def n_terms(order: int) -> int:
    return comb(order + 4, 4)


@lru_cache(maxsize=None)
def _position() -> dict[tuple[int, int, int, int], int]:
    return {m: k for k, m in enumerate(multi_indices(MAX_ORDER))}


@lru_cache(maxsize=None)
def _product_plan(order: int):
    """For each left multi-index: (row, number of partners, target rows)."""
    pos = _position()
    idx = multi_indices(order)
    plan = []
    for i, mi in enumerate(idx):
        partners = n_terms(order - sum(mi))
        targets = [pos[tuple(x + y for x, y in zip(mi, mj))] for mj in idx[:partners]]
        plan.append((i, partners, np.asarray(targets)))
    return tuple(plan)


_CHUNK = 2048


def _truncated_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    plan = _product_plan(order)
    batch = a.shape[1:]
    a2 = a.reshape(a.shape[0], -1)
    b2 = b.reshape(b.shape[0], -1)
    out = np.zeros_like(a2)
    for k in range(0, max(a2.shape[1], 1), _CHUNK):
        ak, bk = a2[:, k:k + _CHUNK], b2[:, k:k + _CHUNK]
        ck = np.zeros_like(ak)
        for i, partners, targets in plan:
            ck[targets] += ak[i] * bk[:partners]
        out[:, k:k + _CHUNK] = ck
    return out.reshape((a.shape[0],) + batch)


@lru_cache(maxsize=None)
def _derivative_table(order: int, axis: int):
    """Source positions and factors for ∂_var on an order-`order` jet."""
    pos = _position()
    src, fac = [], []
    for m in multi_indices(order - 1):
        up = list(m)
        up[axis] += 1
        src.append(pos[tuple(up)])
        fac.append(up[axis])
    return np.asarray(src), np.asarray(fac, dtype=float)


@lru_cache(maxsize=None)
def _conjugate_perm(order: int) -> np.ndarray:
    pos = _position()
    return np.asarray([pos[(c, d, a, b)] for a, b, c, d in multi_indices(order)])


@lru_cache(maxsize=None)
def _factorials(order: int) -> np.ndarray:
    return np.asarray(
        [float(np.prod([factorial(x) for x in m])) for m in multi_indices(order)]
    )


def _as_basepoint(basepoint) -> np.ndarray:
    bp = np.asarray(basepoint, dtype=complex)
    if bp.shape[-1:] != (2,):
        raise JetError(f"basepoint must have trailing length 2, got shape {bp.shape}")
    return bp


def _zeros(bp: np.ndarray, order: int) -> np.ndarray:
    return np.zeros((n_terms(order),) + bp.shape[:-1], dtype=complex)


class Jet:
    """Immutable truncated Taylor expansion at a (batch of) basepoint(s).

    Parameters
    ----------
    coeffs : array_like, complex
        Shape ``(n_terms(order), *batch)``; row k is the Taylor coefficient of
        ``multi_indices(order)[k]``.
    order : int
        Truncation order, ``0 <= order <= 6``.
    basepoint : array_like, complex
        Shape ``(*batch, 2)``: the point (z₀, w₀).
    """

    __slots__ = ("coeffs", "order", "basepoint")
    __array_priority__ = 1000  # keep numpy arrays from hijacking * and +

    def __init__(self, coeffs, order: int, basepoint):
        if not 0 <= order <= MAX_ORDER:
            raise JetError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape[:1] != (n_terms(order),):
            raise JetError(
                f"order {order} jet needs {n_terms(order)} coefficients, got shape {coeffs.shape}"
            )
        bp = _as_basepoint(basepoint)
        if bp.shape[:-1] != coeffs.shape[1:]:
            raise JetError(f"batch shape mismatch: {coeffs.shape[1:]} vs {bp.shape[:-1]}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "basepoint", bp)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, basepoint, order: int = MAX_ORDER) -> "Jet":
        bp = _as_basepoint(basepoint)
        coeffs = _zeros(bp, order)
        coeffs[0] = value
        return cls(coeffs, order, bp)

    @classmethod
    def variable(cls, name: str, basepoint, order: int = MAX_ORDER) -> "Jet":
        """Jet of one coordinate function (z, w, z̄ or w̄) at the basepoint."""
        axis = _VAR_AXIS[name]
        bp = _as_basepoint(basepoint)
        coeffs = _zeros(bp, order)
        base = bp[..., axis % 2]
        coeffs[0] = np.conj(base) if axis >= 2 else base
        if order >= 1:
            unit = [0, 0, 0, 0]
            unit[axis] = 1
            coeffs[_position()[tuple(unit)]] = 1.0
        return cls(coeffs, order, bp)

    @classmethod
    def from_polynomial(cls, terms, basepoint, order: int = MAX_ORDER) -> "Jet":
        """Exact Taylor shift of ``Σ c · z^A w^B z̄^C w̄^D`` to the basepoint.

        ``terms`` is an iterable of ``((A, B, C, D), c)``.
        """
        bp = _as_basepoint(basepoint)
        base = (bp[..., 0], bp[..., 1], np.conj(bp[..., 0]), np.conj(bp[..., 1]))
        idx = multi_indices(order)
        coeffs = _zeros(bp, order)
        powers: dict[tuple[int, int], np.ndarray] = {}

        def power(v, e):
            if (v, e) not in powers:
                powers[v, e] = base[v] ** e
            return powers[v, e]

        for expo, c in terms:
            c = complex(c)
            for k, m in enumerate(idx):
                if any(mi > ei for mi, ei in zip(m, expo)):
                    continue
                factor = c
                for v in range(4):
                    factor *= comb(expo[v], m[v])
                term = factor
                for v in range(4):
                    if expo[v] > m[v]:
                        term = term * power(v, expo[v] - m[v])
                coeffs[k] += term
        return cls(coeffs, order, bp)

    @classmethod
    def from_derivatives(cls, derivs, order: int, basepoint) -> "Jet":
        """Build from raw partial derivatives ordered like :func:`multi_indices`."""
        derivs = np.asarray(derivs, dtype=complex)
        fac = _factorials(order).reshape((-1,) + (1,) * (derivs.ndim - 1))
        return cls(derivs / fac, order, basepoint)

    # -- inspection -------------------------------------------------------

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def coeff(self, index) -> np.ndarray:
        """Taylor coefficient at a multi-index (a, b, c, d)."""
        index = tuple(index)
        if sum(index) > self.order:
            raise JetError(f"multi-index {index} exceeds jet order {self.order}")
        return self.coeffs[_position()[index]]

    def derivative(self, index) -> np.ndarray:
        """Raw partial derivative ∂_z^a ∂_w^b ∂_z̄^c ∂_w̄^d at the basepoint."""
        return self.coeff(index) * float(np.prod([factorial(x) for x in index]))

    def derivatives(self) -> np.ndarray:
        """All raw partial derivatives, rows ordered like :func:`multi_indices`."""
        fac = _factorials(self.order).reshape((-1,) + (1,) * len(self.batch_shape))
        return self.coeffs * fac

    def as_dict(self) -> dict[tuple[int, int, int, int], complex]:
        if self.batch_shape:
            raise JetError("as_dict needs an unbatched jet")
        return {m: complex(c) for m, c in zip(multi_indices(self.order), self.coeffs)}

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, batch={self.batch_shape})"

    def __getitem__(self, item) -> "Jet":
        """Select from the batch axes."""
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.coeffs[(slice(None),) + item], self.order,
                   self.basepoint[item + (Ellipsis,)])

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "Jet") -> None:
        if self.order != other.order:
            raise JetError(f"jet order mismatch: {self.order} vs {other.order}")
        if self.basepoint is not other.basepoint and not np.array_equal(
            self.basepoint, other.basepoint
        ):
            raise JetError("jet basepoint mismatch")

    def _new(self, coeffs, order=None) -> "Jet":
        return Jet(coeffs, self.order if order is None else order, self.basepoint)

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._new(self.coeffs + other.coeffs)
        c = np.array(self.coeffs)
        c[0] = c[0] + other
        return self._new(c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._new(_truncated_product(self.coeffs, other.coeffs, self.order))
        return self._new(self.coeffs * np.asarray(other))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise JetError("only non-negative integer powers are supported")
        out = Jet.constant(1.0, self.basepoint, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError(f"cannot raise jet order from {self.order} to {order}")
        if order == self.order:
            return self
        return self._new(self.coeffs[: n_terms(order)], order)

    def conj(self) -> "Jet":
        """Jet of the complex conjugate function."""
        return self._new(np.conj(self.coeffs[_conjugate_perm(self.order)]))

    def d(self, var: str) -> "Jet":
        """Wirtinger derivative with respect to ``z``, ``w``, ``zb`` or ``wb``."""
        if self.order < 1:
            raise JetError("cannot differentiate an order-0 jet")
        src, fac = _derivative_table(self.order, _VAR_AXIS[var])
        fac = fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return self._new(self.coeffs[src] * fac, self.order - 1)

    def is_real(self, atol: float = 0.0) -> bool:
        """Reality symmetry coeff(a,b,c,d) == conj(coeff(c,d,a,b))."""
        other = np.conj(self.coeffs[_conjugate_perm(self.order)])
        return bool(np.all(np.abs(self.coeffs - other) <= atol))


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Sum, difference or truncated product of two jets."""
    if op not in ("add", "sub", "mul"):
        raise JetError(f"unknown jet operation {op!r}")
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    return a * b


def wirtinger(j: Jet, var: str) -> Jet:
    return j.d(var)


def compose(f: Jet, h: tuple[Jet, Jet]) -> Jet:
    """Jet of f∘H at p from the jet of f at H(p) and the jets of H = (h₁, h₂) at p.

    H must be holomorphic; the antiholomorphic slots of f are fed the conjugates
    of the component jets.
    """
    h1, h2 = h
    h1._check(h2)
    if h1.order < f.order:
        raise JetError("map jets must have at least the order of the composed jet")
    order = f.order
    h1, h2 = h1.truncate(order), h2.truncate(order)
    anti = np.asarray([c + d > 0 for _, _, c, d in multi_indices(order)])
    for hk in (h1, h2):
        scale = 1.0 + np.abs(hk.coeffs).max()
        if np.any(np.abs(hk.coeffs[anti]) > 1e-13 * scale):
            raise HolomorphyError("map components must be holomorphic")
    image = np.stack([h1.value, h2.value], axis=-1)
    if not np.allclose(image, f.basepoint, rtol=1e-12, atol=1e-12):
        raise JetError("f must be expanded at the image point H(p)")
    incs = [h1 - h1.value, h2 - h2.value]
    incs += [incs[0].conj(), incs[1].conj()]
    one = Jet.constant(1.0, h1.basepoint, order)
    powers = []
    for inc in incs:
        row = [one]
        for _ in range(order):
            row.append(row[-1] * inc)
        powers.append(row)
    out = np.zeros_like(one.coeffs)
    for k, (a, b, c, d) in enumerate(multi_indices(order)):
        coeff = f.coeffs[k]
        if not np.any(coeff):
            continue
        term = powers[0][a]
        for v, e in ((1, b), (2, c), (3, d)):
            if e:
                term = term * powers[v][e]
        out = out + term.coeffs * coeff
    return Jet(out, order, h1.basepoint)


def jet_compose(f_jet: Jet, h_jets: tuple[Jet, Jet]) -> Jet:
    return compose(f_jet, h_jets)


def holomorphic_jet(derivs: dict, basepoint, order: int = MAX_ORDER) -> Jet:
    """Jet of a holomorphic function of (z, w) from raw derivatives ∂_z^a ∂_w^b.

    Missing entries of ``derivs`` are zero.
    """
    bp = _as_basepoint(basepoint)
    coeffs = _zeros(bp, order)
    for k, (a, b, c, d) in enumerate(multi_indices(order)):
        if c or d:
            continue
        val = derivs.get((a, b))
        if val is not None:
            coeffs[k] = np.asarray(val) / (factorial(a) * factorial(b))
    return Jet(coeffs, order, bp)
