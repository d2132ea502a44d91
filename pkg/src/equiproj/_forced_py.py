"""Pure-Python forced-measurement trial; same contract as the compiled kernel."""
from __future__ import annotations

import numpy as np

CLAMP = 1e-12


def _measure(Q, psi, gen):
    phi = Q @ psi
    nrm = float(phi @ phi)
    p = nrm
    if p < CLAMP:
        p = 0.0
    elif p > 1.0 - CLAMP:
        p = 1.0
    if gen.random() < p:
        psi[:] = phi / np.sqrt(nrm)
        return 1, p
    rest = psi - phi
    psi[:] = rest / np.sqrt(float(rest @ rest))
    return 0, p


def forced_trial(projs, psi, bit_generator, max_retries,
                 ev_step=None, ev_proj=None, ev_branch=None, ev_prob=None, ev_depth=None,
                 attempts=None, successes=None, depth_hist=None):
    # anything with .random() (e.g. a scripted test source) is used directly
    gen = bit_generator if hasattr(bit_generator, "random") else np.random.Generator(bit_generator)
    nsteps = projs.shape[0] - 1
    record = ev_step is not None
    accum = attempts is not None
    ev = 0
    ok = True

    def log(step, proj, hit, prob, depth):
        if record:
            ev_step[ev], ev_proj[ev], ev_branch[ev], ev_prob[ev], ev_depth[ev] = step, proj, hit, prob, depth

    for i in range(1, nsteps + 1):
        depth = 0
        hit, prob = _measure(projs[i], psi, gen)
        log(i, i, hit, prob, 0)
        ev += 1
        if accum:
            attempts[i] += 1
            successes[i] += hit
        while not hit:
            depth += 1
            if depth > max_retries:
                ok = False
                break
            hit, prob = _measure(projs[i - 1], psi, gen)
            log(i, i - 1, hit, prob, depth)
            ev += 1
            hit, prob = _measure(projs[i], psi, gen)
            log(i, i, hit, prob, depth)
            ev += 1
            if accum:
                attempts[i] += 1
                successes[i] += hit
        if accum:
            depth_hist[i, depth if ok else max_retries + 1] += 1
        if not ok:
            break
    return ev, ok, ev
