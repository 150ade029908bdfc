"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Same signatures, same buffer conventions, same results; used when the
extension is unavailable or ``ANONMAPF_PURE_PYTHON=1`` is set.
"""
from collections import deque


def bfs_run(indptr, indices, dist, queue, state, stop):
    head, tail = state[0], state[1]
    expanded = 0
    while head < tail:
        if stop >= 0 and dist[stop] >= 0:
            break
        u = queue[head]
        head += 1
        expanded += 1
        d = dist[u] + 1
        for i in range(indptr[u], indptr[u + 1]):
            v = indices[i]
            if dist[v] < 0:
                dist[v] = d
                queue[tail] = v
                tail += 1
    state[0] = head
    state[1] = tail
    return expanded


def bfs_scan(indptr, indices, dist, queue, state, marks):
    head, tail, cursor = state[0], state[1], state[2]
    expanded = 0
    found = -1
    while True:
        while cursor < tail:
            v = queue[cursor]
            cursor += 1
            if marks[v]:
                found = v
                break
        if found >= 0 or head >= tail:
            break
        u = queue[head]
        head += 1
        expanded += 1
        d = dist[u] + 1
        for i in range(indptr[u], indptr[u + 1]):
            v = indices[i]
            if dist[v] < 0:
                dist[v] = d
                queue[tail] = v
                tail += 1
    state[0] = head
    state[1] = tail
    state[2] = cursor
    return found, expanded


def augment(first_out, out_arcs, head, cap, source, sink, blocked,
            mark, stamp, parent_arc, stack, pos):
    top = 0
    expanded = 1
    hits = 0
    stack[0] = source
    mark[source] = stamp
    pos[source] = first_out[source]
    while top >= 0:
        u = stack[top]
        if u == sink:
            break
        advanced = False
        end = first_out[u + 1]
        p = pos[u]
        while p < end:
            a = out_arcs[p]
            p += 1
            if cap[a] <= 0:
                continue
            w = head[a]
            if mark[w] == stamp:
                continue
            if blocked[w]:
                hits += 1
                continue
            mark[w] = stamp
            parent_arc[w] = a
            pos[w] = first_out[w]
            top += 1
            stack[top] = w
            expanded += 1
            advanced = True
            break
        pos[u] = p
        if not advanced:
            top -= 1
    if top < 0:
        return 0, expanded, hits
    v = sink
    while v != source:
        a = parent_arc[v]
        cap[a] -= 1
        cap[a ^ 1] += 1
        v = head[a ^ 1]
    return 1, expanded, hits


# -- multi-tree kernels ------------------------------------------------------------

def _tree_dist(indptr, indices, dists, queues, states, k, u):
    dist = dists[k]
    expanded = 0
    if dist[u] < 0:
        expanded = bfs_run(indptr, indices, dist, queues[k], states[k], u)
    return dist[u], expanded


def _tree_next(indptr, indices, dists, queues, states, k, u):
    d, expanded = _tree_dist(indptr, indices, dists, queues, states, k, u)
    if d <= 0:
        return u, expanded
    dist = dists[k]
    for i in range(indptr[u], indptr[u + 1]):
        x = indices[i]
        if dist[x] == d - 1:
            return x, expanded
    return -1, expanded


def greedy_assign(indptr, indices, marks, dists, queues, states, goal, cost, n_nodes):
    n = len(dists)
    expanded = 0
    holder = [-1] * n_nodes
    todo = deque(range(n))
    for i in range(n):
        goal[i] = cost[i] = -1
    while todo:
        i = todo.popleft()
        while True:
            g, e = bfs_scan(indptr, indices, dists[i], queues[i], states[i], marks)
            expanded += e
            if g < 0:
                break
            d = dists[i][g]
            j = holder[g]
            if j < 0:
                holder[g] = i
                goal[i], cost[i] = g, d
                break
            if d < cost[j]:
                holder[g] = i
                goal[i], cost[i] = g, d
                goal[j] = cost[j] = -1
                todo.append(j)
                break
    return expanded


def refine_makespan(indptr, indices, xs, ys, starts, dists, queues, states, goal, cost):
    n = len(dists)
    grid = len(xs) > 0
    expanded = 0
    while True:
        i = -1
        for k in range(n):
            if goal[k] >= 0 and (i < 0 or cost[k] > cost[i]):
                i = k
        if i < 0:
            break
        c_now, gi = cost[i], goal[i]
        swapped = False
        for j in range(n):
            if j == i or goal[j] < 0:
                continue
            if grid and abs(xs[starts[j]] - xs[gi]) + abs(ys[starts[j]] - ys[gi]) >= c_now:
                continue
            dji, e = _tree_dist(indptr, indices, dists, queues, states, j, gi)
            expanded += e
            if dji >= c_now:
                continue
            gj = goal[j]
            dij, e = _tree_dist(indptr, indices, dists, queues, states, i, gj)
            expanded += e
            if dij < c_now:
                goal[i], goal[j] = gj, gi
                cost[i], cost[j] = dij, dji
                swapped = True
                break
        if not swapped:
            break
    return expanded


def tswap_timestep(indptr, indices, pos, goal, occ, tree_of, dists, queues, states, events):
    n = len(pos)
    open_ = [True] * n
    waiters = {}
    counter = [0]

    def next_node(u, g):
        x, e = _tree_next(indptr, indices, dists, queues, states, tree_of[g], u)
        counter[0] += e
        return x

    def step(x):
        v = pos[x]
        if v == goal[x]:
            return -1
        u = next_node(v, goal[x])
        b = occ[u]
        if b < 0:
            occ[v], occ[u], pos[x] = -1, x, u
            return -1
        if u == goal[b]:
            goal[b], goal[x] = goal[x], u
            events.append(("swap", x, v, (b,)))
            return -1
        if open_[b]:
            return b
        chain = [x]
        seen = {x}
        cur = x
        found = False
        for _ in range(n):
            if pos[cur] == goal[cur]:
                break
            b = occ[next_node(pos[cur], goal[cur])]
            if b < 0:
                break
            if b == x:
                found = True
                break
            if b in seen:
                break
            chain.append(b)
            seen.add(b)
            cur = b
        if not found:
            return -1
        old = [goal[c] for c in chain]
        for k, c in enumerate(chain):
            goal[c] = old[k - 1]
        events.append(("rotate", x, v, tuple(chain[1:])))
        if v != goal[x]:
            u = next_node(v, goal[x])
            b = occ[u]
            if b < 0:
                occ[v], occ[u], pos[x] = -1, x, u
            elif u == goal[b]:
                goal[b], goal[x] = goal[x], u
                events.append(("swap", x, v, (b,)))
        return -1

    for i in range(n):
        if not open_[i]:
            continue
        work = [i]
        while work:
            x = work.pop()
            open_[x] = False
            r = step(x)
            if r >= 0:
                waiters.setdefault(r, []).append(x)
                continue
            released = waiters.pop(x, None)
            if released:
                work.extend(reversed(released))
    return counter[0]
