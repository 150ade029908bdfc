# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: resumable BFS and unit-capacity augmenting-path search.

Signatures mirror ``_pykernels`` exactly; state lives in caller-owned buffers
(``array.array('i')`` / ``bytearray``) so a search can be paused and resumed.
"""


def bfs_run(const int[::1] indptr, const int[::1] indices, int[::1] dist,
            int[::1] queue, int[::1] state, int stop):
    """Expand queued nodes until ``stop`` is discovered (or forever if ``stop < 0``).

    ``state`` holds ``[head, tail, cursor]``. Returns the number of expanded nodes.
    """
    cdef int head = state[0]
    cdef int tail = state[1]
    cdef int u, v, i, d
    cdef long expanded = 0
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


def bfs_scan(const int[::1] indptr, const int[::1] indices, int[::1] dist,
             int[::1] queue, int[::1] state, const unsigned char[::1] marks):
    """Return ``(node, expanded)`` for the next discovered node with ``marks[node]``.

    Nodes are reported in discovery order, each at most once per search.
    ``node`` is -1 once the search is exhausted.
    """
    cdef int head = state[0]
    cdef int tail = state[1]
    cdef int cursor = state[2]
    cdef int u, v, i, d
    cdef long expanded = 0
    cdef int found = -1
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


def augment(const int[::1] first_out, const int[::1] out_arcs, const int[::1] head,
            int[::1] cap, int source, int sink, const unsigned char[::1] blocked,
            int[::1] mark, int stamp, int[::1] parent_arc, int[::1] stack, int[::1] pos):
    """One depth-first augmenting path search on a unit-capacity residual network.

    Arcs come in pairs: ``a`` and its reverse ``a ^ 1``. Vertices with
    ``blocked[v]`` are never entered. On success one unit is pushed along the
    path. Returns ``(found, expanded, blocked_hits)``.
    """
    cdef int top = 0
    cdef int u, w, a, v
    cdef long expanded = 1
    cdef long hits = 0
    cdef bint advanced
    stack[0] = source
    mark[source] = stamp
    pos[source] = first_out[source]
    while top >= 0:
        u = stack[top]
        if u == sink:
            break
        advanced = False
        while pos[u] < first_out[u + 1]:
            a = out_arcs[pos[u]]
            pos[u] += 1
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


# -- multi-tree kernels ---------------------------------------------------------
#
# The kernels below work on a bank of resumable BFS trees passed as three
# parallel lists (dist, queue, state arrays). Raw pointers are taken once per
# call; the caller keeps the arrays alive and never resizes them.

from libc.stdlib cimport malloc, free


cdef struct Bank:
    int** dist
    int** queue
    int** state
    int n


cdef int bank_open(Bank* bank, list dists, list queues, list states) except -1:
    cdef Py_ssize_t n = len(dists), k
    cdef int[::1] mv
    bank.n = <int>n
    bank.dist = <int**>malloc(max(n, 1) * sizeof(int*))
    bank.queue = <int**>malloc(max(n, 1) * sizeof(int*))
    bank.state = <int**>malloc(max(n, 1) * sizeof(int*))
    if bank.dist == NULL or bank.queue == NULL or bank.state == NULL:
        raise MemoryError()
    for k in range(n):
        mv = dists[k]
        bank.dist[k] = &mv[0]
        mv = queues[k]
        bank.queue[k] = &mv[0]
        mv = states[k]
        bank.state[k] = &mv[0]
    return 0


cdef void bank_close(Bank* bank):
    free(bank.dist)
    free(bank.queue)
    free(bank.state)


cdef long tree_run(const int* indptr, const int* indices, int* dist, int* queue,
                   int* state, int stop) nogil:
    cdef int head = state[0], tail = state[1], u, v, i, d
    cdef long expanded = 0
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


cdef int tree_scan(const int* indptr, const int* indices, int* dist, int* queue,
                   int* state, const unsigned char* marks, long* expanded) nogil:
    cdef int head = state[0], tail = state[1], cursor = state[2]
    cdef int u, v, i, d, found = -1
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
        expanded[0] += 1
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
    return found


cdef inline int tree_dist(const int* indptr, const int* indices, Bank* bank, int k,
                          int u, long* expanded) nogil:
    cdef int* dist = bank.dist[k]
    if dist[u] < 0:
        expanded[0] += tree_run(indptr, indices, dist, bank.queue[k], bank.state[k], u)
    return dist[u]


cdef inline int tree_next(const int* indptr, const int* indices, Bank* bank, int k,
                          int u, long* expanded) nogil:
    cdef int d = tree_dist(indptr, indices, bank, k, u, expanded), i, x
    cdef int* dist = bank.dist[k]
    if d <= 0:
        return u
    for i in range(indptr[u], indptr[u + 1]):
        x = indices[i]
        if dist[x] == d - 1:
            return x
    return -1


def greedy_assign(const int[::1] indptr, const int[::1] indices,
                  const unsigned char[::1] marks, list dists, list queues, list states,
                  int[::1] goal, int[::1] cost, int n_nodes):
    """Nearest-target greedy with replacement; tree ``i`` is rooted at agent i's start.

    Agents are served FIFO. An agent takes the next marked node of its BFS;
    a holder is displaced only by a strictly closer agent and re-queued.
    ``goal``/``cost`` receive the result (-1 when unassigned). Returns expansions.
    """
    cdef Bank bank
    cdef int n = len(dists), i, j, g, d, qh = 0, qt = 0, qn
    cdef long expanded = 0
    cdef int* holder
    cdef int* todo
    bank_open(&bank, dists, queues, states)
    qn = n + 1
    holder = <int*>malloc(max(n_nodes, 1) * sizeof(int))
    todo = <int*>malloc(qn * sizeof(int))
    try:
        for i in range(n_nodes):
            holder[i] = -1
        for i in range(n):
            goal[i] = -1
            cost[i] = -1
            todo[qt] = i
            qt += 1
        while qh != qt:
            i = todo[qh]
            qh = (qh + 1) % qn
            while True:
                g = tree_scan(&indptr[0], &indices[0], bank.dist[i], bank.queue[i],
                              bank.state[i], &marks[0], &expanded)
                if g < 0:
                    break
                d = bank.dist[i][g]
                j = holder[g]
                if j < 0:
                    holder[g] = i
                    goal[i] = g
                    cost[i] = d
                    break
                if d < cost[j]:
                    holder[g] = i
                    goal[i] = g
                    cost[i] = d
                    goal[j] = -1
                    cost[j] = -1
                    todo[qt] = j
                    qt = (qt + 1) % qn
                    break
    finally:
        free(holder)
        free(todo)
        bank_close(&bank)
    return expanded


def refine_makespan(const int[::1] indptr, const int[::1] indices, const int[::1] xs,
                    const int[::1] ys, const int[::1] starts, list dists, list queues,
                    list states, int[::1] goal, int[::1] cost):
    """Pairwise goal exchanges that strictly shrink the current maximum cost.

    Repeatedly picks the agent with the largest cost (ties: smallest id) and
    swaps goals with the first agent j (ascending) for which both new costs
    are below it. Stops when that agent admits no such swap. ``xs``/``ys``
    are per-node grid coordinates (empty for non-grid graphs) used to skip
    pairs by the Manhattan bound. Agents with ``goal < 0`` are ignored.
    """
    cdef Bank bank
    cdef int n = len(dists), i, j, k, c_now, gi, gj, dji, dij, h, sx, sy, gx, gy
    cdef bint grid = xs.shape[0] > 0, swapped
    cdef long expanded = 0
    bank_open(&bank, dists, queues, states)
    try:
        while True:
            i = -1
            for k in range(n):
                if goal[k] >= 0 and (i < 0 or cost[k] > cost[i]):
                    i = k
            if i < 0:
                break
            c_now = cost[i]
            gi = goal[i]
            swapped = False
            if grid:
                gx = xs[gi]
                gy = ys[gi]
            for j in range(n):
                if j == i or goal[j] < 0:
                    continue
                if grid:
                    sx = xs[starts[j]] - gx
                    sy = ys[starts[j]] - gy
                    h = (sx if sx >= 0 else -sx) + (sy if sy >= 0 else -sy)
                    if h >= c_now:
                        continue
                dji = tree_dist(&indptr[0], &indices[0], &bank, j, gi, &expanded)
                if dji >= c_now:
                    continue
                gj = goal[j]
                dij = tree_dist(&indptr[0], &indices[0], &bank, i, gj, &expanded)
                if dij < c_now:
                    goal[i] = gj
                    goal[j] = gi
                    cost[i] = dij
                    cost[j] = dji
                    swapped = True
                    break
            if not swapped:
                break
    finally:
        bank_close(&bank)
    return expanded


def tswap_timestep(const int[::1] indptr, const int[::1] indices, int[::1] pos,
                   int[::1] goal, int[::1] occ, const int[::1] tree_of, list dists,
                   list queues, list states, list events):
    """One synchronous timestep of target-swapping planning.

    Agents act in id order; an agent whose next node holds an agent that has
    not acted (and is not itself waiting) waits for that agent and acts
    right after it. Swaps and rotations are appended to ``events`` as
    ``(kind, agent, node, partners)``. ``tree_of[g]`` is the bank slot of
    the BFS rooted at goal ``g``. Returns expansions.
    """
    cdef Bank bank
    cdef int n = pos.shape[0], i, x, y, top, cnt, k, m
    cdef long expanded = 0
    cdef unsigned char* open_ = <unsigned char*>malloc(max(n, 1))
    cdef int* stack = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* w_head = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* w_tail = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* w_next = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* buf = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* chain = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int* seen = <int*>malloc(max(n, 1) * sizeof(int))
    cdef int r
    if (open_ == NULL or stack == NULL or w_head == NULL or w_tail == NULL or w_next == NULL
            or buf == NULL or chain == NULL or seen == NULL):
        raise MemoryError()
    bank_open(&bank, dists, queues, states)
    try:
        for i in range(n):
            open_[i] = 1
            w_head[i] = -1
            w_tail[i] = -1
            w_next[i] = -1
            seen[i] = 0
        for i in range(n):
            if not open_[i]:
                continue
            top = 0
            stack[0] = i
            while top >= 0:
                x = stack[top]
                top -= 1
                open_[x] = 0
                r = _step(&indptr[0], &indices[0], &bank, &pos[0], &goal[0], &occ[0],
                          &tree_of[0], open_, n, x, chain, seen, events, &expanded)
                if r >= 0:  # deferred behind agent r
                    if w_tail[r] < 0:
                        w_head[r] = x
                    else:
                        w_next[w_tail[r]] = x
                    w_tail[r] = x
                    continue
                cnt = 0
                y = w_head[x]
                while y >= 0:
                    buf[cnt] = y
                    cnt += 1
                    y = w_next[y]
                w_head[x] = -1
                w_tail[x] = -1
                for k in range(cnt - 1, -1, -1):
                    top += 1
                    stack[top] = buf[k]
    finally:
        bank_close(&bank)
        free(open_); free(stack); free(w_head); free(w_tail); free(w_next)
        free(buf); free(chain); free(seen)
    return expanded


cdef int _step(const int* indptr, const int* indices, Bank* bank, int* pos, int* goal,
               int* occ, const int* tree_of, unsigned char* open_, int n, int x,
               int* chain, int* seen, list events, long* expanded) except -2:
    """Returns the blocker id when ``x`` defers, else -1."""
    cdef int v = pos[x], u, b, length, cur, k, last
    cdef bint found
    if v == goal[x]:
        return -1
    u = tree_next(indptr, indices, bank, tree_of[goal[x]], v, expanded)
    b = occ[u]
    if b < 0:
        occ[v] = -1
        occ[u] = x
        pos[x] = u
        return -1
    if u == goal[b]:
        goal[b] = goal[x]
        goal[x] = u
        events.append(("swap", x, v, (b,)))
        return -1
    if open_[b]:
        return b
    # deadlock detection: follow occupants of next nodes back to x
    length = 1
    chain[0] = x
    seen[x] = 1
    cur = x
    found = False
    for k in range(n):
        if pos[cur] == goal[cur]:
            break
        b = occ[tree_next(indptr, indices, bank, tree_of[goal[cur]], pos[cur], expanded)]
        if b < 0:
            break
        if b == x:
            found = True
            break
        if seen[b]:
            break
        chain[length] = b
        length += 1
        seen[b] = 1
        cur = b
    for k in range(length):
        seen[chain[k]] = 0
    if not found:
        return -1
    last = goal[chain[length - 1]]
    for k in range(length - 1, 0, -1):
        goal[chain[k]] = goal[chain[k - 1]]
    goal[x] = last
    events.append(("rotate", x, v, tuple([chain[k] for k in range(1, length)])))
    if v != goal[x]:
        u = tree_next(indptr, indices, bank, tree_of[goal[x]], v, expanded)
        b = occ[u]
        if b < 0:
            occ[v] = -1
            occ[u] = x
            pos[x] = u
        elif u == goal[b]:
            goal[b] = goal[x]
            goal[x] = u
            events.append(("swap", x, v, (b,)))
    return -1
