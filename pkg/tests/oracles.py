"""Independent reference values used by the tests."""
import math

import mpmath as mp


def ml_reference(alpha, beta, z, dps=60):
    """E_{a,b}(z) by its power series in high precision."""
    with mp.workdps(dps):
        z = mp.mpc(z)
        a, b = mp.mpf(alpha), mp.mpf(beta)
        total, k = mp.mpf(0), 0
        while True:
            term = z ** k * mp.rgamma(a * k + b)
            total += term
            if k > 10 and abs(term) < mp.mpf(10) ** (-dps + 5) * max(1, abs(total)):
                break
            k += 1
        return complex(total)


def ml_reference_dps(z, alpha):
    """Working precision that survives the series cancellation at |z|."""
    peak = abs(z) ** (1.0 / alpha) / math.log(10)
    return int(30 + 1.2 * peak)
