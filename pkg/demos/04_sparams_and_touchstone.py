"""Port extraction sanity and Touchstone interchange.

Builds the matched-load validation scene (two ports bridged by a short
50-ohm strip), extracts its S-parameters, checks passivity/reciprocity,
and round-trips the result through a Touchstone .s2p file.
"""

import os
import tempfile

import numpy as np

from pixelpatch.emcore import rogers_like, run_fdtd, thru_scene
from pixelpatch.sparam import (extract_sparams, resonance_min, sanity_check,
                               touchstone_read, touchstone_write)

scene = thru_scene(rogers_like(), dx=0.65e-3)
print(scene.audit_text())

runs = [run_fdtd(scene, 1, 20000), run_fdtd(scene, 2, 20000)]
sset = extract_sparams(runs)

s11 = np.abs(sset.s[:, 0, 0])
s21 = np.abs(sset.s[:, 1, 0])
print(f"matched-load floor: max |S11| = {s11.max():.4f} (want <= 0.05)")
print(f"through transmission: |S21| in [{s21.min():.4f}, {s21.max():.4f}]")
print(sanity_check(sset).summary())
f, db = resonance_min(sset, 1)
print(f"flattest reflection at {f/1e9:.2f} GHz ({db:.1f} dB)")

with tempfile.TemporaryDirectory() as td:
    path = os.path.join(td, "thru.s2p")
    touchstone_write(sset, path)
    back = touchstone_read(path)
    err = np.abs(back.s - sset.s).max()
    print(f"\nwrote {path.split(os.sep)[-1]} ({sset.nfreq} rows); "
          f"round-trip max |error| = {err:.2e}")
    with open(path) as fh:
        head = [next(fh) for _ in range(3)]
    print("file head:")
    for line in head:
        print("  " + line.rstrip())
