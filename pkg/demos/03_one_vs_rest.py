"""
One training fragment, 54 test fragments
========================================

Fifty-five synthetic fragments with different levels, gradient directions and
filament shapes. The network is trained on the first and applied to the
remaining 54, each with its own background refit.
"""

import numpy as np

from filament_net import experiments

result = experiments.one_vs_rest(count=55, seed=0)
f1 = result.f1
print(result.csv().splitlines()[-1])
print(f"mean F1 {f1.mean():.4f}, min {f1.min():.4f}, median {np.median(f1):.4f}")

# The same run from the command line:
#   filament-net synth corpus --count 55 --seed 0
#   filament-net train corpus/frag_000_image.pgm corpus/frag_000_mask.pgm model.json
#   filament-net detect corpus model.json preds --exclude frag_000
#   filament-net eval preds corpus > scores.csv

# Different corpus seeds give different training fragments. A training fragment
# with little vertical gradient leaves the weight on u poorly determined, which
# shows up as a wider spread of held-out F1.
for seed in range(1, 6):
    r = experiments.one_vs_rest(count=55, seed=seed)
    ratio = r.model.output.wu / -r.model.output.ws
    print(f"corpus seed {seed}: mean F1 {r.f1.mean():.3f}  min {r.f1.min():.3f}  wu/|ws| {ratio:.2f}")
