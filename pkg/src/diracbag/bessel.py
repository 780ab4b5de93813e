"""Bessel functions of half-integer order, their ratios, and their zeros.

Every order used by the solver is half-odd (p = j + n with j half-odd), so
everything reduces to the closed forms

    J_{1/2}(x) = sqrt(2/(pi x)) sin(x)
    J_{3/2}(x) = sqrt(2/(pi x)) (sin(x)/x - cos(x))

plus the three-term recurrence J_{p-1}(x) + J_{p+1}(x) = (2p/x) J_p(x).
The recurrence runs upward for x >= p and downward (Miller-normalised) for
x < p, where the upward direction is unstable.

Positive zeros z_{p,k} are simple and interlace between consecutive orders;
they are bracketed by a McMahon asymptotic guess (interlacing fallback when
the guess is off) and refined by bisection + Newton.  Zeros are cached in
immutable-after-build tables, persistable as plain text lines "2p k z" with
z at 17 significant digits.
"""

import math
import threading

from .halfint import HalfInt

_SQRT_2_PI = math.sqrt(2.0 / math.pi)

#: |J_p(x)| below this is treated as sitting on a zero (IEEE underflow guard).
POLE_GUARD = 1e-300


class BesselPoleError(ArithmeticError):
    """Raised when a ratio is requested at (numerically) a zero of J_p."""

    def __init__(self, order, x, nearest_zero):
        self.order = order
        self.x = x
        self.nearest_zero = nearest_zero
        super().__init__(
            f"J_{order}(x) vanishes at x={x!r}; nearest zero {nearest_zero!r}"
        )


def _check_half_odd(p):
    p = HalfInt.of(p)
    if p.is_integer:
        raise ValueError(f"only half-odd orders arise here, got p={p}")
    return p


def _series_j(p, x, terms=40):
    """Ascending power series of J_p(x); accurate for x not much above p."""
    half = 0.5 * x
    term = half**p / math.gamma(p + 1.0)
    total = term
    for k in range(1, terms):
        term *= -(half * half) / (k * (p + k))
        total += term
    return total


def _j_half_up(n, x):
    """J_{n+1/2}(x) by upward recurrence from the closed forms (x >= order)."""
    s = _SQRT_2_PI / math.sqrt(x)
    jm = s * math.sin(x)                          # J_{1/2}
    if n == 0:
        return jm
    j = s * (math.sin(x) / x - math.cos(x))       # J_{3/2}
    for k in range(1, n):
        jm, j = j, (2.0 * k + 1.0) / x * j - jm   # 2p/x with p = k + 1/2
    return j


def _j_half_down(n, x):
    """J_{n+1/2}(x) by downward (Miller) recurrence, for x < order."""
    m = n + 30 + int(x)
    jp = 0.0
    j = 1e-30
    vals = [0.0] * (n + 1)
    for k in range(m, 0, -1):
        jm = (2.0 * k + 1.0) / x * j - jp         # order k+1/2 -> k-1/2
        jp, j = j, jm
        if k - 1 <= n:
            vals[k - 1] = j
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            for i in range(min(k - 1, n + 1), n + 1):
                vals[i] *= 1e-250
    # normalise against whichever closed form sits farther from its zero
    s = _SQRT_2_PI / math.sqrt(x)
    ref_half = s * math.sin(x)
    ref_three = s * (math.sin(x) / x - math.cos(x))
    if abs(ref_half) >= abs(ref_three) or n == 0:
        scale = ref_half / vals[0]
    else:
        scale = ref_three / vals[1]
    return vals[n] * scale


def bessel_j_half(p, x):
    """J_p(x) for half-odd p >= 1/2 and x > 0."""
    p = _check_half_odd(p)
    if not x > 0.0:
        raise ValueError(f"x must be positive, got {x!r}")
    pv = p.value
    n = (p.twice_value - 1) // 2                  # p = n + 1/2
    if x >= pv or n == 0:
        return _j_half_up(n, x)
    if x < 0.02 * pv:
        return _series_j(pv, x)
    return _j_half_down(n, x)


def _ratio_down(n, x):
    """J_{n+3/2}/J_{n+1/2} from one downward pass (normalisation cancels)."""
    m = n + 31 + int(x)
    above = 0.0
    cur = 1e-30
    t_up = 0.0
    for k in range(m, n, -1):
        below = (2.0 * k + 1.0) / x * cur - above
        above, cur = cur, below
        if abs(cur) > 1e250:
            cur *= 1e-250
            above *= 1e-250
        if k == n + 1:
            t_up = above                          # trial J_{n+3/2}
    return t_up / cur                             # cur holds trial J_{n+1/2}


def _ratio_small_x(pv, x):
    # J_{p+1}/J_p for small x without forming possibly-denormal values
    if x < 1e-6:
        h2 = 0.25 * x * x
        return x / (2.0 * pv + 2.0) * (
            1.0 + h2 * (1.0 / (pv + 1.0) - 1.0 / (pv + 2.0))
        )
    return _series_j(pv + 1.0, x) / _series_j(pv, x)


def bessel_ratio(p, x, pole_check=True):
    """J_{p+1}(x) / J_p(x), an odd function of x.

    Evaluated from the ratio recurrence r_q = 2q/x - 1/r_{q-1} seeded by
    r_{1/2} = 1/x - cot(x), with a series branch for small x.  Raises
    :class:`BesselPoleError` when x sits on a zero of J_p (guard
    ``POLE_GUARD``); pass ``pole_check=False`` in hot loops that bracket
    away from zeros.
    """
    p = _check_half_odd(p)
    if x == 0.0:
        return 0.0
    if x < 0.0:
        return -bessel_ratio(p, -x, pole_check=pole_check)
    if pole_check and abs(bessel_j_half(p, x)) < POLE_GUARD:
        k = _nearest_zero_index(p, x)
        raise BesselPoleError(p, x, bessel_zero(p, k))
    pv = p.value
    if x <= 0.5:
        return _ratio_small_x(pv, x)
    if x < pv + 1.0:
        # upward ratio recurrence is unstable below the order
        return _ratio_down((p.twice_value - 1) // 2, x)
    r = 1.0 / x - 1.0 / math.tan(x)               # r_{1/2}
    q = 0.5
    while q < pv - 0.25:
        q += 1.0
        r = 2.0 * q / x - 1.0 / r
    return r


def ratio_log_derivative(p, x):
    """d/dx log(J_{p+1}(x)/J_p(x)) from exact recurrence identities.

    Equals 1/r_p(x) - 1/r_{p-1}(x) - 1/x with r_q = J_{q+1}/J_q and seed
    r_{-1/2} = J_{1/2}/J_{-1/2} = tan(x).
    """
    p = _check_half_odd(p)
    rp = bessel_ratio(p, x, pole_check=False)
    if p.twice_value == 1:
        rm = math.tan(x)
    else:
        rm = bessel_ratio(p - HalfInt(2), x, pole_check=False)
    return 1.0 / rp - 1.0 / rm - 1.0 / x


# ---------------------------------------------------------------------------
# zeros


class BesselZeroTable:
    """Strictly increasing positive zeros of J_p, grown on demand.

    Tables of consecutive orders interlace:
    z_{p,k} < z_{p+1,k} < z_{p,k+1}.
    """

    def __init__(self, order, zeros=()):
        self.order = HalfInt.of(order)
        self.zeros = list(zeros)

    def __len__(self):
        return len(self.zeros)

    def get(self, k):
        return self.zeros[k - 1]


_tables = {}
_tables_lock = threading.Lock()


def _mcmahon(pv, k):
    mu = 4.0 * pv * pv
    beta = (k + 0.5 * pv - 0.25) * math.pi
    e = 8.0 * beta
    z = beta - (mu - 1.0) / e
    z -= 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e**3)
    z -= 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * e**5)
    return z


def _refine_zero(p, lo, hi):
    pv = p.value
    flo = bessel_j_half(p, lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = bessel_j_half(p, mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-13 * hi:
            break
    z = 0.5 * (lo + hi)
    # Newton polish with J_p' = J_{p-1} - (p/x) J_p
    for _ in range(3):
        f = bessel_j_half(p, z)
        if p.twice_value == 1:
            jm = _SQRT_2_PI / math.sqrt(z) * math.cos(z)   # J_{-1/2}
        else:
            jm = bessel_j_half(p - HalfInt(2), z)
        df = jm - pv / z * f
        step = f / df
        if not abs(step) < 0.1:
            break
        z -= step
    return z


def _compute_zero(p, k):
    pv = p.value
    if p.twice_value == 1:
        return k * math.pi                        # J_{1/2} ~ sin
    guess = _mcmahon(pv, k)
    lo, hi = max(guess - 0.5, 0.51 * pv), guess + 0.5
    if lo < hi and bessel_j_half(p, lo) * bessel_j_half(p, hi) < 0.0:
        return _refine_zero(p, lo, hi)
    # McMahon bracket failed (low k, high p): interlacing bracket instead
    pm = p - HalfInt(2)
    lo, hi = bessel_zero(pm, k), bessel_zero(pm, k + 1)
    return _refine_zero(p, lo * (1 + 1e-14), hi * (1 - 1e-14))


def bessel_zero(p, k):
    """k-th positive zero z_{p,k} of J_p (k >= 1), cached per order."""
    p = _check_half_odd(p)
    if k < 1:
        raise ValueError("zero index k must be >= 1")
    with _tables_lock:
        table = _tables.setdefault(p.twice_value, BesselZeroTable(p))
    while len(table) < k:
        table.zeros.append(_compute_zero(p, len(table) + 1))
    return table.get(k)


def zero_table(p, count):
    """Snapshot table of the first `count` zeros of J_p."""
    p = HalfInt.of(p)
    bessel_zero(p, count)
    with _tables_lock:
        return BesselZeroTable(p, _tables[p.twice_value].zeros[:count])


def _nearest_zero_index(p, x):
    k = 1
    while bessel_zero(p, k) < x:
        k += 1
    if k == 1:
        return 1
    below, above = bessel_zero(p, k - 1), bessel_zero(p, k)
    return k - 1 if x - below <= above - x else k


# ---------------------------------------------------------------------------
# on-disk cache: plain text lines "2p k z"


def save_zero_cache(path):
    with _tables_lock:
        items = sorted(_tables.items())
    with open(path, "w") as fh:
        for twice_p, table in items:
            for k, z in enumerate(table.zeros, start=1):
                fh.write(f"{twice_p} {k} {z:.17g}\n")


def load_zero_cache(path):
    loaded = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            twice_p_s, k_s, z_s = line.split()
            loaded.setdefault(int(twice_p_s), {})[int(k_s)] = float(z_s)
    with _tables_lock:
        for twice_p, by_k in loaded.items():
            if sorted(by_k) != list(range(1, len(by_k) + 1)):
                raise ValueError(f"zero cache has gaps for order 2p={twice_p}")
            zeros = [by_k[k] for k in sorted(by_k)]
            _tables[twice_p] = BesselZeroTable(HalfInt(twice_p), zeros)


def clear_zero_cache():
    with _tables_lock:
        _tables.clear()
