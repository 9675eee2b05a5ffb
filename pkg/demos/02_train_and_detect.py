"""
Train on one fragment, detect on another
========================================

The threshold unit is trained by the perceptron rule on a single labelled
fragment. At detection time the background is refitted on each new image,
so a fragment with a different gradient is handled by the same weights.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from filament_net import learning, metrics, network, synthgen
from filament_net.windowing import WindowConfig

cfg = WindowConfig(5)
(train_X, train_M), (test_X, test_M) = synthgen.corpus(2, seed=0)

model = learning.train(train_X, train_M, cfg)
print("output weights:", model.output)
print(f"boundary direction wu/ws = {model.output.wu / model.output.ws:.3f}  (-1 means pure residual s - u)")

for name, X, M in [("training", train_X, train_M), ("held-out", test_X, test_M)]:
    det = network.forward(X, model)
    sc = metrics.score(det, M, cfg)
    print(f"{name:9s} precision={sc.precision:.3f} recall={sc.recall:.3f} f1={sc.f1:.3f}")

# Freezing the trained background instead of refitting shows why the refit matters.
frozen = model.with_(bg_refit=False)
sc = metrics.score(network.forward(test_X, frozen), test_M, cfg)
print(f"held-out with frozen background: f1={sc.f1:.3f}")

det = network.forward(test_X, model).padded()
fig, ax = plt.subplots(1, 2, figsize=(9, 4.5))
ax[0].imshow(test_X.pixels, cmap="gray")
ax[1].imshow(det.labels, cmap="gray_r")
ax[1].set_title("detected filament pixels")
fig.savefig("02_train_and_detect.png", dpi=100)
