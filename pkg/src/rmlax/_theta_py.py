"""Pure-Python theta kernel, used when the compiled core is unavailable.

Both kernels share one contract: ``theta_jet(z, tau)`` returns the odd theta
function and its first three z-derivatives at a point ``z`` that has already
been reduced to the fundamental cell. Series truncation stops once the
outermost retained terms fall below ``1e-18`` of the largest term.
"""

import cmath
import math

_REL_CUT = 1e-18
_MAX_TERMS = 400


def theta_jet(z, tau):
    z = complex(z)
    tau = complex(tau)
    two_pi_i = 2j * math.pi
    s0 = s1 = s2 = s3 = 0j
    biggest = 0.0
    shift = z + 0.5
    for sign in (1, -1):
        k = 0 if sign == 1 else -1
        while True:
            h = k + 0.5
            term = cmath.exp(1j * math.pi * tau * h * h + two_pi_i * shift * h)
            d = two_pi_i * h
            s0 += term
            s1 += d * term
            s2 += d * d * term
            s3 += d * d * d * term
            mag = abs(term) * max(1.0, abs(d) ** 3)
            if mag > biggest:
                biggest = mag
            # terms decay like a gaussian past the peak, so one small term ends the side
            if mag < _REL_CUT * biggest and abs(h) > abs(z.imag / tau.imag) + 1:
                break
            k += sign
            if abs(k) > _MAX_TERMS:
                raise ArithmeticError("theta series failed to converge")
    return s0, s1, s2, s3
