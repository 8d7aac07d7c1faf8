"""Hot loops for tree sampling.

Every function here is written in the numba-compatible subset and is
compiled through :func:`bdgmaps._accel.kernel`. Randomness comes only
from ``rng.random()`` on a numpy Generator, which numba reproduces bit
for bit, so both backends return identical trees for identical streams.
"""

import numpy as np

from ._accel import kernel

FORWARD = 0
REVERSED = 1
SHUFFLED = 2

OK = 0
NODE_CAP = 1
TYPE1_CAP = 2
NEGATIVE = 3
BUDGET = 4

ROOT_PLAIN = 0
ROOT_SINGLE = 1
ROOT_TYPE2 = 2


@kernel
def _grow_i8(a, size):
    out = np.empty(size, np.int8)
    out[: a.shape[0]] = a
    return out


@kernel
def _grow_i64(a, size):
    out = np.empty(size, np.int64)
    out[: a.shape[0]] = a
    return out


@kernel
def geometric(rng, p):
    """Number of failures before the first success, by inversion."""
    if p >= 1.0:
        return 0
    u = rng.random()
    return int(np.floor(np.log1p(-u) / np.log1p(-p)))


@kernel
def alias_draw(rng, thr, ali):
    n = thr.shape[0]
    i = int(rng.random() * n)
    if i >= n:
        i = n - 1
    if rng.random() < thr[i]:
        return i
    return ali[i]


@kernel
def fill_word(rng, k, kp, word):
    """Uniform interleaving of k ones and kp twos (selection sampling)."""
    n = k + kp
    need = k
    for i in range(n):
        if need > 0 and rng.random() * (n - i) < need:
            word[i] = 1
            need -= 1
        else:
            word[i] = 2


@kernel
def displacement(rng, ptype, word, n, mode, comp, out):
    """Child label offsets (Y_1, ..., Y_n) for a type-3/4 parent.

    Forward mode draws a uniform composition of k+1 (type 3) or k (type 4)
    into n+1 parts and subtracts the corner indicators. Reversed mode draws
    for the mirrored word and mirrors the result; shuffled mode flips a
    fair coin between the two.
    """
    reverse = False
    if mode == 1:
        reverse = True
    elif mode == 2:
        reverse = rng.random() < 0.5
    k = 0
    for i in range(n):
        if word[i] == 1:
            k += 1
    total = k + (1 if ptype == 3 else 0)
    m = n + 1
    slots = total + m - 1
    need = m - 1
    part = 0
    idx = 0
    for t in range(slots):
        if need > 0 and rng.random() * (slots - t) < need:
            comp[idx] = part
            idx += 1
            part = 0
            need -= 1
        else:
            part += 1
    comp[idx] = part
    acc = 0
    prev_one = ptype == 3
    for j in range(n):
        acc += comp[j] - (1 if prev_one else 0)
        out[j] = acc
        if reverse:
            prev_one = word[n - 1 - j] == 1
        else:
            prev_one = word[j] == 1
    if reverse:
        for j in range(n // 2):
            tmp = out[j]
            out[j] = out[n - 1 - j]
            out[n - 1 - j] = tmp


@kernel
def displacement_batch(rng, ptype, word, n, mode, count, out):
    comp = np.empty(n + 1, np.int64)
    row = np.empty(n, np.int64)
    for c in range(count):
        displacement(rng, ptype, word, n, mode, comp, row)
        for j in range(n):
            out[c, j] = row[j]


# ---------------------------------------------------------------------------
# plain Galton-Watson sampling
# ---------------------------------------------------------------------------

@kernel
def gw_tree(rng, root_type, x, mode, p1, k3, kp3, thr3, ali3, k4, kp4, thr4, ali4,
            node_cap, type1_cap, min_label, root_single):
    """One preorder GW tree; returns (types, parents, labels, type1, status)."""
    cap = 64
    types = np.empty(cap, np.int8)
    parents = np.empty(cap, np.int64)
    labels = np.empty(cap, np.int64)
    st_t = np.empty(cap, np.int8)
    st_p = np.empty(cap, np.int64)
    st_l = np.empty(cap, np.int64)
    word = np.empty(8, np.int64)
    comp = np.empty(9, np.int64)
    disp = np.empty(8, np.int64)
    st_t[0] = root_type
    st_p[0] = -1
    st_l[0] = x
    sp = 1
    count = 0
    type1 = 1 if root_type == 1 else 0
    while sp > 0:
        sp -= 1
        t = st_t[sp]
        par = st_p[sp]
        lab = st_l[sp]
        if count >= node_cap:
            return types[:count], parents[:count], labels[:count], type1, NODE_CAP
        if count == types.shape[0]:
            types = _grow_i8(types, 2 * count)
            parents = _grow_i64(parents, 2 * count)
            labels = _grow_i64(labels, 2 * count)
        types[count] = t
        parents[count] = par
        labels[count] = lab
        me = count
        count += 1
        if t == 1:
            if root_single and me == 0:
                kk = 1
            else:
                kk = geometric(rng, p1)
            if sp + kk > st_t.shape[0]:
                size = 2 * (sp + kk)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
            for _ in range(kk):
                st_t[sp] = 3
                st_p[sp] = me
                st_l[sp] = lab
                sp += 1
        elif t == 2:
            if sp + 1 > st_t.shape[0]:
                size = 2 * (sp + 1)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
            st_t[sp] = 4
            st_p[sp] = me
            st_l[sp] = lab
            sp += 1
        else:
            if t == 3:
                idx = alias_draw(rng, thr3, ali3)
                k = k3[idx]
                kp = kp3[idx]
            else:
                idx = alias_draw(rng, thr4, ali4)
                k = k4[idx]
                kp = kp4[idx]
            n = k + kp
            if n + 1 > comp.shape[0]:
                word = np.empty(2 * n + 2, np.int64)
                comp = np.empty(2 * n + 3, np.int64)
                disp = np.empty(2 * n + 2, np.int64)
            fill_word(rng, k, kp, word)
            displacement(rng, t, word, n, mode, comp, disp)
            type1 += k
            if type1 > type1_cap:
                return types[:count], parents[:count], labels[:count], type1, TYPE1_CAP
            for i in range(n):
                if word[i] == 1 and lab + disp[i] < min_label:
                    return types[:count], parents[:count], labels[:count], type1, NEGATIVE
            if sp + n > st_t.shape[0]:
                size = 2 * (sp + n)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
            for i in range(n - 1, -1, -1):
                st_t[sp] = word[i]
                st_p[sp] = me
                st_l[sp] = lab + disp[i]
                sp += 1
    return types[:count], parents[:count], labels[:count], type1, OK


@kernel
def gw_rejection(rng, root_type, x, mode, p1, k3, kp3, thr3, ali3, k4, kp4, thr4, ali4,
                 node_cap, target, min_label, root_single, budget):
    """Repeat gw_tree until #t1 == target (or any size if target < 0)."""
    type1_cap = target if target >= 0 else node_cap
    for attempt in range(1, budget + 1):
        types, parents, labels, type1, status = gw_tree(
            rng, root_type, x, mode, p1, k3, kp3, thr3, ali3, k4, kp4, thr4, ali4,
            node_cap, type1_cap, min_label, root_single)
        if status == OK and (target < 0 or type1 == target):
            return types, parents, labels, attempt, OK
    return types[:0], parents[:0], labels[:0], budget, BUDGET


@kernel
def type1_counts(rng, trials, p1, k3, kp3, thr3, ali3, k4, kp4, thr4, ali4, cap, root_single):
    """#t1 of ``trials`` independent trees, with cap+1 standing for "more than cap".

    Only types are simulated, which makes 10^6 trees cheap.
    """
    out = np.empty(trials, np.int64)
    stack = np.empty(64, np.int8)
    for trial in range(trials):
        stack[0] = 1
        sp = 1
        type1 = 1
        first = True
        while sp > 0 and type1 <= cap:
            sp -= 1
            t = stack[sp]
            if t == 1:
                if root_single and first:
                    kk = 1
                else:
                    kk = geometric(rng, p1)
                first = False
                if sp + kk > stack.shape[0]:
                    stack = _grow_i8(stack, 2 * (sp + kk))
                for _ in range(kk):
                    stack[sp] = 3
                    sp += 1
            elif t == 2:
                if sp + 1 > stack.shape[0]:
                    stack = _grow_i8(stack, 2 * (sp + 1))
                stack[sp] = 4
                sp += 1
            else:
                if t == 3:
                    idx = alias_draw(rng, thr3, ali3)
                    k = k3[idx]
                    kp = kp3[idx]
                else:
                    idx = alias_draw(rng, thr4, ali4)
                    k = k4[idx]
                    kp = kp4[idx]
                type1 += k
                if sp + k + kp > stack.shape[0]:
                    stack = _grow_i8(stack, 2 * (sp + k + kp))
                for _ in range(k):
                    stack[sp] = 1
                    sp += 1
                for _ in range(kp):
                    stack[sp] = 2
                    sp += 1
        out[trial] = type1 if type1 <= cap else cap + 1
    return out


# ---------------------------------------------------------------------------
# exact size-conditioned sampling through the reduced type-1 tree
# ---------------------------------------------------------------------------

@kernel
def forest_mantissa(tri, j, s):
    """(j/s) rho^{*s}(s-j) divided by exp(logscale[s])."""
    if s == 0:
        return 1.0 if j == 0 else 0.0
    if j < 1 or j > s:
        return 0.0
    return (j / s) * tri[s * (s + 1) // 2 + s - j]


@kernel
def split_count(rng, total, r, base, table, out):
    """Split ``total`` leaves among r blocks with law ``base`` each, given the sum."""
    c = total
    for i in range(r):
        rem = r - i
        if rem == 1:
            out[i] = c
            break
        target = rng.random() * table[rem, c]
        acc = 0.0
        sel = -1
        last = 0
        for m in range(c + 1):
            w = base[m] * table[rem - 1, c - m]
            if w > 0.0:
                last = m
            acc += w
            if acc > target:
                sel = m
                break
        if sel < 0:
            sel = last
        out[i] = sel
        c -= sel


@kernel
def _pick_pair(rng, c, ks, kps, probs, btab):
    """Index of (k, k') for a block node that must carry exactly c leaves."""
    total = 0.0
    for i in range(ks.shape[0]):
        if ks[i] <= c:
            total += probs[i] * btab[kps[i], c - ks[i]]
    target = rng.random() * total
    acc = 0.0
    last = -1
    for i in range(ks.shape[0]):
        if ks[i] <= c:
            w = probs[i] * btab[kps[i], c - ks[i]]
            if w > 0.0:
                last = i
            acc += w
            if acc > target:
                return i
    return last


@kernel
def _pick_weighted(rng, weights):
    total = 0.0
    for i in range(weights.shape[0]):
        total += weights[i]
    target = rng.random() * total
    acc = 0.0
    last = -1
    for i in range(weights.shape[0]):
        if weights[i] > 0.0:
            last = i
        acc += weights[i]
        if acc > target:
            return i
    return last


@kernel
def sequential_tree(rng, n, root_kind, x, mode, min_label, rho, tri, logscale, a, b, kcdf,
                    atab, btab, k3, kp3, pr3, k4, kp4, pr4, node_cap):
    """One tree with exactly n type-1 vertices, or an early abort.

    Type-1 vertices are generated in preorder; the number x of type-1
    grandchildren-through-a-block is drawn from the Lukasiewicz conditional
    law rho(x) F(j-1+x, s-1) / F(j, s) where F is the forest-size table,
    and the block is then drawn conditionally on carrying x leaves.
    """
    dmax = rho.shape[0] - 1
    cap = 64
    types = np.empty(cap, np.int8)
    parents = np.empty(cap, np.int64)
    labels = np.empty(cap, np.int64)
    st_t = np.empty(cap, np.int8)
    st_p = np.empty(cap, np.int64)
    st_l = np.empty(cap, np.int64)
    st_c = np.empty(cap, np.int64)
    word = np.empty(8, np.int64)
    comp = np.empty(9, np.int64)
    disp = np.empty(8, np.int64)
    parts = np.empty(8, np.int64)
    j = 1
    s = n
    if root_kind == ROOT_TYPE2:
        w = np.zeros(dmax + 1)
        for xx in range(dmax + 1):
            w[xx] = b[xx] * forest_mantissa(tri, xx, n) if xx <= n else 0.0
        x0 = _pick_weighted(rng, w)
        if x0 < 0:
            return types[:0], parents[:0], labels[:0], NEGATIVE
        st_t[0] = 2
        st_c[0] = x0
        j = x0
    else:
        st_t[0] = 1
        st_c[0] = 0
    st_p[0] = -1
    st_l[0] = x
    sp = 1
    count = 0
    while sp > 0:
        sp -= 1
        t = st_t[sp]
        par = st_p[sp]
        lab = st_l[sp]
        c = st_c[sp]
        if count >= node_cap:
            return types[:count], parents[:count], labels[:count], NODE_CAP
        if count == types.shape[0]:
            types = _grow_i8(types, 2 * count)
            parents = _grow_i64(parents, 2 * count)
            labels = _grow_i64(labels, 2 * count)
        types[count] = t
        parents[count] = par
        labels[count] = lab
        me = count
        count += 1
        if t == 1:
            if me == 0 and root_kind == ROOT_SINGLE:
                w = np.zeros(dmax + 1)
                for xx in range(dmax + 1):
                    w[xx] = a[xx] * forest_mantissa(tri, xx, n - 1) if xx <= n - 1 else 0.0
                xsel = _pick_weighted(rng, w)
                kk = 1
                j = xsel
                s = n - 1
            else:
                scale = np.exp(logscale[s] - logscale[s - 1]) if s >= 1 else 1.0
                target = rng.random() * forest_mantissa(tri, j, s) * scale
                acc = 0.0
                xsel = -1
                last = 0
                top = s - j
                if top > dmax:
                    top = dmax
                for xx in range(top + 1):
                    w1 = rho[xx] * forest_mantissa(tri, j - 1 + xx, s - 1)
                    if w1 > 0.0:
                        last = xx
                    acc += w1
                    if acc > target:
                        xsel = xx
                        break
                if xsel < 0:
                    xsel = last
                j = j - 1 + xsel
                s = s - 1
                u = rng.random()
                kk = 0
                row = kcdf[xsel]
                while kk < row.shape[0] - 1 and u >= row[kk]:
                    kk += 1
            if kk > parts.shape[0]:
                parts = np.empty(2 * kk, np.int64)
            if kk > 0:
                split_count(rng, xsel, kk, a, atab, parts)
            if sp + kk > st_t.shape[0]:
                size = 2 * (sp + kk)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
                st_c = _grow_i64(st_c, size)
            for i in range(kk - 1, -1, -1):
                st_t[sp] = 3
                st_p[sp] = me
                st_l[sp] = lab
                st_c[sp] = parts[i]
                sp += 1
        elif t == 2:
            if sp + 1 > st_t.shape[0]:
                size = 2 * (sp + 1)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
                st_c = _grow_i64(st_c, size)
            st_t[sp] = 4
            st_p[sp] = me
            st_l[sp] = lab
            st_c[sp] = c
            sp += 1
        else:
            if t == 3:
                idx = _pick_pair(rng, c, k3, kp3, pr3, btab)
                k = k3[idx]
                kp = kp3[idx]
            else:
                idx = _pick_pair(rng, c, k4, kp4, pr4, btab)
                k = k4[idx]
                kp = kp4[idx]
            nn = k + kp
            if nn + 1 > comp.shape[0]:
                word = np.empty(2 * nn + 2, np.int64)
                comp = np.empty(2 * nn + 3, np.int64)
                disp = np.empty(2 * nn + 2, np.int64)
            if kp > parts.shape[0]:
                parts = np.empty(2 * kp, np.int64)
            fill_word(rng, k, kp, word)
            if kp > 0:
                split_count(rng, c - k, kp, b, btab, parts)
            displacement(rng, t, word, nn, mode, comp, disp)
            for i in range(nn):
                if word[i] == 1 and lab + disp[i] < min_label:
                    return types[:count], parents[:count], labels[:count], NEGATIVE
            if sp + nn > st_t.shape[0]:
                size = 2 * (sp + nn)
                st_t = _grow_i8(st_t, size)
                st_p = _grow_i64(st_p, size)
                st_l = _grow_i64(st_l, size)
                st_c = _grow_i64(st_c, size)
            two = kp - 1
            for i in range(nn - 1, -1, -1):
                st_t[sp] = word[i]
                st_p[sp] = me
                st_l[sp] = lab + disp[i]
                if word[i] == 2:
                    st_c[sp] = parts[two]
                    two -= 1
                else:
                    st_c[sp] = 0
                sp += 1
    return types[:count], parents[:count], labels[:count], OK


@kernel
def sequential_rejection(rng, n, root_kind, x, mode, min_label, rho, tri, logscale, a, b, kcdf,
                         atab, btab, k3, kp3, pr3, k4, kp4, pr4, node_cap, budget):
    for attempt in range(1, budget + 1):
        types, parents, labels, status = sequential_tree(
            rng, n, root_kind, x, mode, min_label, rho, tri, logscale, a, b, kcdf,
            atab, btab, k3, kp3, pr3, k4, kp4, pr4, node_cap)
        if status == OK:
            return types, parents, labels, attempt, OK
    return types[:0], parents[:0], labels[:0], budget, BUDGET


@kernel
def sequential_batch(rng, count, n, root_kind, x, mode, min_label, rho, tri, logscale, a, b,
                     kcdf, atab, btab, k3, kp3, pr3, k4, kp4, pr4, node_cap):
    """Positivity indicator for ``count`` size-n trees (min_label applied lazily).

    Trees are generated without the positivity abort so every attempt is a
    draw from the size-conditioned law; returns the number whose non-root
    type-1 labels all reach ``min_label``.
    """
    hits = 0
    for _ in range(count):
        types, parents, labels, status = sequential_tree(
            rng, n, root_kind, x, mode, -(1 << 62), rho, tri, logscale, a, b, kcdf,
            atab, btab, k3, kp3, pr3, k4, kp4, pr4, node_cap)
        good = True
        for i in range(1, types.shape[0]):
            if types[i] == 1 and labels[i] < min_label:
                good = False
                break
        if good:
            hits += 1
    return hits
