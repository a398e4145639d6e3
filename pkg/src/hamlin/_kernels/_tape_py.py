"""Pure-Python tape evaluator. Semantically identical to the Cython kernel.

Every operation is performed in the same order as the compiled backend so
that both produce bit-identical doubles.  Errors are reported through the
err buffer (code, instruction index); the return value is then meaningless.
"""

import math

from .ops import (
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_MUL,
    OP_NEG,
    OP_PARAM,
    OP_POWI,
    OP_POWR,
    OP_SUB,
    OP_VAR,
    ERR_DIV_ZERO,
    ERR_NONFINITE,
    ERR_POW_DOMAIN,
    ERR_ZERO_NEG_POW,
)

_isfinite = math.isfinite


def eval_value(code, arg, consts, x, params, stack, err):
    err[0] = 0
    err[1] = -1
    sp = 0
    for i in range(code.shape[0]):
        op = code[i]
        a = arg[i]
        if op == OP_CONST:
            stack[sp] = consts[a]
            sp += 1
        elif op == OP_VAR:
            v = x[a]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp] = v
            sp += 1
        elif op == OP_PARAM:
            v = params[a]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp] = v
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ADD:
            sp -= 1
            v = stack[sp - 1] + stack[sp]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
        elif op == OP_SUB:
            sp -= 1
            v = stack[sp - 1] - stack[sp]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
        elif op == OP_MUL:
            sp -= 1
            v = stack[sp - 1] * stack[sp]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
        elif op == OP_DIV:
            sp -= 1
            d = stack[sp]
            if d == 0.0:
                err[0] = ERR_DIV_ZERO
                err[1] = i
                return 0.0
            v = stack[sp - 1] / d
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
        elif op == OP_POWI:
            k = a
            base = stack[sp - 1]
            if k == 0:
                v = 1.0
            else:
                m = -k if k < 0 else k
                acc = base
                for _ in range(m - 1):
                    acc = acc * base
                if k < 0:
                    if acc == 0.0:
                        err[0] = ERR_ZERO_NEG_POW
                        err[1] = i
                        return 0.0
                    v = 1.0 / acc
                else:
                    v = acc
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
        else:  # OP_POWR
            base = stack[sp - 1]
            if base <= 0.0:
                err[0] = ERR_POW_DOMAIN
                err[1] = i
                return 0.0
            v = math.pow(base, consts[a])
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return 0.0
            stack[sp - 1] = v
    return stack[0]


def eval_dual(code, arg, consts, x, params, seed, vstack, dstack, out, err):
    """Evaluate value and d/dx_seed simultaneously. seed is 0-based."""
    err[0] = 0
    err[1] = -1
    sp = 0
    for i in range(code.shape[0]):
        op = code[i]
        a = arg[i]
        if op == OP_CONST:
            vstack[sp] = consts[a]
            dstack[sp] = 0.0
            sp += 1
        elif op == OP_VAR:
            v = x[a]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
            vstack[sp] = v
            dstack[sp] = 1.0 if a == seed else 0.0
            sp += 1
        elif op == OP_PARAM:
            v = params[a]
            if not _isfinite(v):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
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
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_SUB:
            sp -= 1
            v = vstack[sp - 1] - vstack[sp]
            d = dstack[sp - 1] - dstack[sp]
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
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
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        elif op == OP_DIV:
            sp -= 1
            lv = vstack[sp - 1]
            ld = dstack[sp - 1]
            rv = vstack[sp]
            rd = dstack[sp]
            if rv == 0.0:
                err[0] = ERR_DIV_ZERO
                err[1] = i
                return
            v = lv / rv
            d = (ld * rv - lv * rd) / (rv * rv)
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
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
                m = -k if k < 0 else k
                av = bv
                ad = bd
                for _ in range(m - 1):
                    nv = av * bv
                    ad = av * bd + ad * bv
                    av = nv
                if k < 0:
                    if av == 0.0:
                        err[0] = ERR_ZERO_NEG_POW
                        err[1] = i
                        return
                    v = 1.0 / av
                    d = (0.0 * av - 1.0 * ad) / (av * av)
                else:
                    v = av
                    d = ad
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
        else:  # OP_POWR
            bv = vstack[sp - 1]
            bd = dstack[sp - 1]
            if bv <= 0.0:
                err[0] = ERR_POW_DOMAIN
                err[1] = i
                return
            r = consts[a]
            v = math.pow(bv, r)
            d = r * math.pow(bv, r - 1.0) * bd
            if not (_isfinite(v) and _isfinite(d)):
                err[0] = ERR_NONFINITE
                err[1] = i
                return
            vstack[sp - 1] = v
            dstack[sp - 1] = d
    out[0] = vstack[0]
    out[1] = dstack[0]
