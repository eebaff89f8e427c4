"""Pure-numpy tick kernel; reference semantics for the compiled ``_kernel``."""

import numpy as np

DEST_HOST = -1
DEST_NONE = -2


def run_ticks(tick0, until, axon_ptr, syn_neuron, syn_weight, threshold, leak,
              reset, is_xor, dest, delay, potential, ring, ext_tick, ext_axon,
              ext_pos):
    """Evaluate ticks ``tick0 + 1 .. until`` in place.

    ``ring[t % R, a]`` counts spikes due on global axon ``a`` at tick ``t``.
    Returns ``(spike_tick, spike_neuron, ext_pos, delivered)`` where
    ``delivered`` counts routed spikes consumed from the ring.
    """
    n_neurons = threshold.shape[0]
    n_axons = ring.shape[1]
    ring_size = ring.shape[0]
    syn_axon = np.repeat(np.arange(n_axons, dtype=np.int64), np.diff(axon_ptr))
    xor = is_xor.astype(bool)
    routed = dest >= 0
    out_ticks = []
    out_neurons = []
    delivered = 0
    n_ext = ext_tick.shape[0]
    for t in range(tick0 + 1, until + 1):
        slot = t % ring_size
        counts = ring[slot]
        delivered += int(counts.sum())
        active = counts > 0
        ring[slot] = 0
        end = ext_pos
        while end < n_ext and ext_tick[end] == t:
            end += 1
        if end > ext_pos:
            active[ext_axon[ext_pos:end]] = True
            ext_pos = end
        if n_neurons == 0:
            continue
        mask = active[syn_axon]
        total = np.bincount(syn_neuron[mask], weights=syn_weight[mask],
                            minlength=n_neurons).astype(np.int64)
        v = potential + total + leak
        lif_spike = v >= threshold
        spikes = np.where(xor, (total & 1) == 1, lif_spike)
        new = np.where(lif_spike, reset, np.maximum(v, 0))
        potential[:] = np.where(xor, 0, new)
        fired = np.flatnonzero(spikes)
        if fired.size:
            out_ticks.append(np.full(fired.size, t, dtype=np.int64))
            out_neurons.append(fired.astype(np.int32))
            go = fired[routed[fired]]
            if go.size:
                np.add.at(ring, ((t + delay[go]) % ring_size, dest[go]), 1)
    if out_ticks:
        return (np.concatenate(out_ticks), np.concatenate(out_neurons), ext_pos,
                delivered)
    return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int32), ext_pos,
            delivered)
