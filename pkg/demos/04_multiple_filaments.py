"""
Several filaments in one large fragment
=======================================

A 512 x 512 fragment with four filaments, a quadratic background and the
model trained on a single 256 x 256 fragment.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from filament_net import experiments, learning, synthgen
from filament_net.windowing import WindowConfig

X, M = synthgen.corpus(1, seed=0)[0]
model = learning.train(X, M, WindowConfig(5), degree=2)

result = experiments.multi_filament(model, seed=1000, size=512, filaments=4)
for i, r in enumerate(result.recalls, 1):
    print(f"filament {i}: recall {r:.3f}")
print(f"whole fragment: f1 {result.score.f1:.3f}")

image, _ = synthgen.generate(result.params)
fig, ax = plt.subplots(1, 2, figsize=(10, 5))
ax[0].imshow(image.pixels, cmap="gray")
ax[1].imshow(result.mask.padded().labels, cmap="gray_r")
fig.savefig("04_multiple_filaments.png", dpi=100)
