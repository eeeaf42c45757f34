"""Independent reference models used by the tests.

None of these import the package under test; each is written straight from
the underlying definition so it can catch mistakes in the optimized code.
"""


# -- CRC-32 -------------------------------------------------------------------


def _reflect(value, width):
    out = 0
    for _ in range(width):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def crc32_bit_serial(data):
    """IEEE 802.3 CRC-32 one bit at a time from the normal polynomial 0x04C11DB7.

    Each input octet is reflected, shifted MSB-first through the register,
    and the final register is reflected and complemented.
    """
    poly = 0x04C11DB7
    reg = 0xFFFFFFFF
    for octet in data:
        reg ^= _reflect(octet, 8) << 24
        for _ in range(8):
            if reg & 0x80000000:
                reg = ((reg << 1) ^ poly) & 0xFFFFFFFF
            else:
                reg = (reg << 1) & 0xFFFFFFFF
    return _reflect(reg, 32) ^ 0xFFFFFFFF


# -- legalizer ----------------------------------------------------------------


def check_legalization(addr, length, jobs, bus_width, max_burst_beats, page=4096):
    """Byte-by-byte coverage check; returns a list of problems (empty when legal)."""
    problems = []
    covered = [0] * length
    for job in jobs:
        lo, hi = job.mem_addr, job.mem_addr + job.length
        if job.length <= 0:
            problems.append(f"empty job {job}")
            continue
        for b in range(lo, hi):
            if addr <= b < addr + length:
                covered[b - addr] += 1
            else:
                problems.append(f"job {job} covers byte {b:#x} outside the request")
                break
        if lo // page != (hi - 1) // page:
            problems.append(f"job {job} crosses a page")
        beats = len({b // bus_width for b in range(lo, hi)})
        if beats > max_burst_beats:
            problems.append(f"job {job} has {beats} beats")
        if beats != job.beats:
            problems.append(f"job {job} reports {job.beats} beats, has {beats}")
    if any(c != 1 for c in covered):
        problems.append("request bytes not covered exactly once")
    starts = [j.mem_addr for j in jobs]
    if starts != sorted(starts):
        problems.append("jobs out of address order")
    return problems


# -- dual-clock FIFO ----------------------------------------------------------


def _gray(n):
    return n ^ (n >> 1)


def _ungray(g):
    n = 0
    while g:
        n ^= g
        g >>= 1
    return n


def synced_counts(event_times, sample_times, stages):
    """Pointer value seen after a ``stages``-flop gray synchronizer.

    ``event_times`` are sorted pointer-increment times in the source domain.
    At each destination edge (``sample_times``, sorted) the first flop
    captures the gray pointer as it stood strictly before that edge and every
    later flop captures its predecessor. Returns, per destination edge, the
    binary count the logic clocked by that edge sees (the chain output left by
    the previous edge).
    """
    chain = [0] * stages
    seen = []
    i = 0
    for t in sample_times:
        seen.append(_ungray(chain[-1]))
        while i < len(event_times) and event_times[i] < t:
            i += 1
        chain = [_gray(i)] + chain[:-1]
    return seen
