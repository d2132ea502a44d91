# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled forced-measurement trial; mirrors ``_forced_py.forced_trial``."""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt
from numpy.random cimport bitgen_t

cdef double CLAMP = 1e-12


cdef double _measure(const double[:, ::1] Q, double[::1] psi, double[::1] phi,
                     bitgen_t *rng, double *prob) noexcept nogil:
    """Project psi with Q in place; returns 1.0 on success, 0.0 on failure."""
    cdef Py_ssize_t n = psi.shape[0], r, c
    cdef double acc, p, u, nrm = 0.0, rest = 0.0
    for r in range(n):
        acc = 0.0
        for c in range(n):
            acc += Q[r, c] * psi[c]
        phi[r] = acc
        nrm += acc * acc
    p = nrm
    if p < CLAMP:
        p = 0.0
    elif p > 1.0 - CLAMP:
        p = 1.0
    prob[0] = p
    u = rng.next_double(rng.state)
    if u < p:
        nrm = sqrt(nrm)
        for r in range(n):
            psi[r] = phi[r] / nrm
        return 1.0
    for r in range(n):
        phi[r] = psi[r] - phi[r]
        rest += phi[r] * phi[r]
    rest = sqrt(rest)
    for r in range(n):
        psi[r] = phi[r] / rest
    return 0.0


def forced_trial(const double[:, :, ::1] projs, double[::1] psi, bit_generator, int max_retries,
                 int[::1] ev_step=None, int[::1] ev_proj=None, int[::1] ev_branch=None,
                 double[::1] ev_prob=None, int[::1] ev_depth=None,
                 long[::1] attempts=None, long[::1] successes=None, long[:, ::1] depth_hist=None):
    """Run the chain projs[1..N] on psi (already in range(projs[0])).

    Returns (n_events, ok, n_measurements); psi holds the final state.
    """
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t nsteps = projs.shape[0] - 1, n = psi.shape[0]
    cdef Py_ssize_t i, ev = 0
    cdef int depth, ok = 1
    cdef bint record = ev_step is not None
    cdef bint accum = attempts is not None
    cdef double prob, hit
    phi_buf = bytearray(n * sizeof(double))
    cdef double[::1] phi = memoryview(phi_buf).cast("d")

    with bit_generator.lock:
        with nogil:
            for i in range(1, nsteps + 1):
                depth = 0
                hit = _measure(projs[i], psi, phi, rng, &prob)
                if record:
                    ev_step[ev] = i; ev_proj[ev] = i; ev_branch[ev] = <int> hit
                    ev_prob[ev] = prob; ev_depth[ev] = 0
                ev += 1
                if accum:
                    attempts[i] += 1
                    successes[i] += <long> hit
                while hit == 0.0:
                    depth += 1
                    if depth > max_retries:
                        ok = 0
                        break
                    hit = _measure(projs[i - 1], psi, phi, rng, &prob)
                    if record:
                        ev_step[ev] = i; ev_proj[ev] = i - 1; ev_branch[ev] = <int> hit
                        ev_prob[ev] = prob; ev_depth[ev] = depth
                    ev += 1
                    hit = _measure(projs[i], psi, phi, rng, &prob)
                    if record:
                        ev_step[ev] = i; ev_proj[ev] = i; ev_branch[ev] = <int> hit
                        ev_prob[ev] = prob; ev_depth[ev] = depth
                    ev += 1
                    if accum:
                        attempts[i] += 1
                        successes[i] += <long> hit
                if accum:
                    depth_hist[i, depth if ok else max_retries + 1] += 1
                if not ok:
                    break
    return ev, bool(ok), ev
