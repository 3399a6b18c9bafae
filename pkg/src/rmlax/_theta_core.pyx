# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled theta kernel. Same contract as ``rmlax._theta_py.theta_jet``."""

from libc.math cimport M_PI, fabs, fmax

cdef extern from "complex.h":
    double complex cexp(double complex)
    double cabs(double complex)

cdef double REL_CUT = 1e-18
cdef int MAX_TERMS = 400


def theta_jet(double complex z, double complex tau):
    cdef double complex two_pi_i = 2j * M_PI
    cdef double complex shift = z + 0.5
    cdef double complex s0 = 0, s1 = 0, s2 = 0, s3 = 0
    cdef double complex term, d
    cdef double biggest = 0.0, mag, h, ad
    cdef double center = fabs(z.imag / tau.imag) + 1.0
    cdef int sign, k
    for sign in (1, -1):
        k = 0 if sign == 1 else -1
        while True:
            h = k + 0.5
            term = cexp(1j * M_PI * tau * h * h + two_pi_i * shift * h)
            d = two_pi_i * h
            s0 += term
            s1 += d * term
            s2 += d * d * term
            s3 += d * d * d * term
            ad = cabs(d)
            mag = cabs(term) * fmax(1.0, ad * ad * ad)
            if mag > biggest:
                biggest = mag
            if mag < REL_CUT * biggest and fabs(h) > center:
                break
            k += sign
            if k > MAX_TERMS or k < -MAX_TERMS:
                raise ArithmeticError("theta series failed to converge")
    return s0, s1, s2, s3
