# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape evaluator. Semantics mirror _tape_py bit for bit.

Opcode and error codes duplicate hamlin._kernels.ops; keep in sync.
"""

from libc.math cimport isfinite, pow as c_pow

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_PARAM = 2
    OP_NEG = 3
    OP_ADD = 4
    OP_SUB = 5
    OP_MUL = 6
    OP_DIV = 7
    OP_POWI = 8
    OP_POWR = 9

cdef enum:
    ERR_DIV_ZERO = 1
    ERR_POW_DOMAIN = 2
    ERR_ZERO_NEG_POW = 3
    ERR_NONFINITE = 4


cpdef double eval_value(int[::1] code, int[::1] arg, double[::1] consts,
                        double[::1] x, double[::1] params,
                        double[::1] stack, long[::1] err):
    cdef Py_ssize_t i, sp = 0, m = code.shape[0]
    cdef int op, a, k, j, reps
    cdef double v, d, base, acc
    err[0] = 0
    err[1] = -1
    for i in range(m):
        op = code[i]
        a = arg[i]
        if op == OP_CONST:
            stack[sp] = consts[a]
            sp += 1
        elif op == OP_VAR:
            v = x[a]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp] = v
            sp += 1
        elif op == OP_PARAM:
            v = params[a]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp] = v
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ADD:
            sp -= 1
            v = stack[sp - 1] + stack[sp]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
        elif op == OP_SUB:
            sp -= 1
            v = stack[sp - 1] - stack[sp]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
        elif op == OP_MUL:
            sp -= 1
            v = stack[sp - 1] * stack[sp]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
        elif op == OP_DIV:
            sp -= 1
            d = stack[sp]
            if d == 0.0:
                err[0] = ERR_DIV_ZERO; err[1] = i; return 0.0
            v = stack[sp - 1] / d
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
        elif op == OP_POWI:
            k = a
            base = stack[sp - 1]
            if k == 0:
                v = 1.0
            else:
                reps = (-k if k < 0 else k) - 1
                acc = base
                for j in range(reps):
                    acc = acc * base
                if k < 0:
                    if acc == 0.0:
                        err[0] = ERR_ZERO_NEG_POW; err[1] = i; return 0.0
                    v = 1.0 / acc
                else:
                    v = acc
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
        else:  # OP_POWR
            base = stack[sp - 1]
            if base <= 0.0:
                err[0] = ERR_POW_DOMAIN; err[1] = i; return 0.0
            v = c_pow(base, consts[a])
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return 0.0
            stack[sp - 1] = v
    return stack[0]


cpdef void eval_dual(int[::1] code, int[::1] arg, double[::1] consts,
                     double[::1] x, double[::1] params, int seed,
                     double[::1] vstack, double[::1] dstack,
                     double[::1] out, long[::1] err):
    cdef Py_ssize_t i, sp = 0, m = code.shape[0]
    cdef int op, a, k, j, reps
    cdef double v, d, lv, ld, rv, rd, bv, bd, av, ad, nv, r
    err[0] = 0
    err[1] = -1
    for i in range(m):
        op = code[i]
        a = arg[i]
        if op == OP_CONST:
            vstack[sp] = consts[a]
            dstack[sp] = 0.0
            sp += 1
        elif op == OP_VAR:
            v = x[a]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp] = v
            dstack[sp] = 1.0 if a == seed else 0.0
            sp += 1
        elif op == OP_PARAM:
            v = params[a]
            if not isfinite(v):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp] = v
            dstack[sp] = 0.0
            sp += 1
        elif op == OP_NEG:
            vstack[sp - 1] = -vstack[sp - 1]
            dstack[sp - 1] = -dstack[sp - 1]
        elif op == OP_ADD:
            sp -= 1
            v = vstack[sp - 1] + vstack[sp]
            d = dstack[sp - 1] + dstack[sp]
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_SUB:
            sp -= 1
            v = vstack[sp - 1] - vstack[sp]
            d = dstack[sp - 1] - dstack[sp]
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_MUL:
            sp -= 1
            lv = vstack[sp - 1]
            ld = dstack[sp - 1]
            rv = vstack[sp]
            rd = dstack[sp]
            v = lv * rv
            d = lv * rd + ld * rv
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_DIV:
            sp -= 1
            lv = vstack[sp - 1]
            ld = dstack[sp - 1]
            rv = vstack[sp]
            rd = dstack[sp]
            if rv == 0.0:
                err[0] = ERR_DIV_ZERO; err[1] = i; return
            v = lv / rv
            d = (ld * rv - lv * rd) / (rv * rv)
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_POWI:
            k = a
            bv = vstack[sp - 1]
            bd = dstack[sp - 1]
            if k == 0:
                v = 1.0
                d = 0.0
            else:
                reps = (-k if k < 0 else k) - 1
                av = bv
                ad = bd
                for j in range(reps):
                    nv = av * bv
                    ad = av * bd + ad * bv
                    av = nv
                if k < 0:
                    if av == 0.0:
                        err[0] = ERR_ZERO_NEG_POW; err[1] = i; return
                    v = 1.0 / av
                    d = (0.0 * av - 1.0 * ad) / (av * av)
                else:
                    v = av
                    d = ad
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        else:  # OP_POWR
            bv = vstack[sp - 1]
            bd = dstack[sp - 1]
            if bv <= 0.0:
                err[0] = ERR_POW_DOMAIN; err[1] = i; return
            r = consts[a]
            v = c_pow(bv, r)
            d = r * c_pow(bv, r - 1.0) * bd
            if not (isfinite(v) and isfinite(d)):
                err[0] = ERR_NONFINITE; err[1] = i; return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
    out[0] = vstack[0]
    out[1] = dstack[0]
