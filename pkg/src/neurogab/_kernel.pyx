# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tick kernel.  Same contract as ``_kernel_py.run_ticks``."""

import numpy as np
from libcpp.vector cimport vector


def run_ticks(long long tick0, long long until,
              const long long[::1] axon_ptr,
              const int[::1] syn_neuron,
              const long long[::1] syn_weight,
              const long long[::1] threshold,
              const long long[::1] leak,
              const long long[::1] reset,
              const unsigned char[::1] is_xor,
              const int[::1] dest,
              const int[::1] delay,
              long long[::1] potential,
              int[:, ::1] ring,
              const long long[::1] ext_tick,
              const int[::1] ext_axon,
              long long ext_pos):
    cdef Py_ssize_t n_neurons = threshold.shape[0]
    cdef Py_ssize_t n_axons = ring.shape[1]
    cdef long long ring_size = ring.shape[0]
    cdef Py_ssize_t n_ext = ext_tick.shape[0]
    cdef long long[::1] total = np.zeros(n_neurons, dtype=np.int64)
    cdef unsigned char[::1] active = np.zeros(n_axons, dtype=np.uint8)
    cdef vector[long long] out_ticks
    cdef vector[int] out_neurons
    cdef long long t, v, delivered = 0
    cdef Py_ssize_t slot, a, s, j, d
    cdef bint spike

    with nogil:
        t = tick0 + 1
        while t <= until:
            slot = t % ring_size
            for a in range(n_axons):
                if ring[slot, a] > 0:
                    delivered += ring[slot, a]
                    active[a] = 1
                    ring[slot, a] = 0
                else:
                    active[a] = 0
            while ext_pos < n_ext and ext_tick[ext_pos] == t:
                active[ext_axon[ext_pos]] = 1
                ext_pos += 1
            for j in range(n_neurons):
                total[j] = 0
            for a in range(n_axons):
                if active[a]:
                    for s in range(axon_ptr[a], axon_ptr[a + 1]):
                        total[syn_neuron[s]] += syn_weight[s]
            for j in range(n_neurons):
                if is_xor[j]:
                    spike = (total[j] & 1) == 1
                    potential[j] = 0
                else:
                    v = potential[j] + total[j] + leak[j]
                    if v >= threshold[j]:
                        spike = True
                        potential[j] = reset[j]
                    else:
                        spike = False
                        potential[j] = v if v > 0 else 0
                if spike:
                    out_ticks.push_back(t)
                    out_neurons.push_back(<int>j)
                    d = dest[j]
                    if d >= 0:
                        ring[(t + delay[j]) % ring_size, d] += 1
            t += 1

    spike_tick = np.empty(out_ticks.size(), dtype=np.int64)
    spike_neuron = np.empty(out_neurons.size(), dtype=np.int32)
    cdef long long[::1] st = spike_tick
    cdef int[::1] sn = spike_neuron
    for s in range(<Py_ssize_t>out_ticks.size()):
        st[s] = out_ticks[s]
        sn[s] = out_neurons[s]
    return spike_tick, spike_neuron, ext_pos, delivered
