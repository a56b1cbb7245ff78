"""
Dark/bright partition and the two metrics
=========================================

Real HDR scenes do not come with a ground-truth illumination map, so the
areas for the uniformity metric are estimated: blur the image heavily
(a Retinex-style illumination estimate) and split the pixels at the median.
"""

# %%
import numpy as np

from detectorcv import detect_cv, harris
from detectorcv.evaluation import Correspondence, repeatability, uniformity
from detectorcv.partitioning import BRIGHT, DARK, partition_image, retinex_mask_side, retinex_sigma
from detectorcv.synthetic import bipartite_blobs

img = bipartite_blobs(128, 256, ratio=1000.0)
sigma = retinex_sigma(img.shape)
print("retinex sigma %.3f, mask side %d" % (sigma, retinex_mask_side(sigma)))

part = partition_image(img)
print("dark pixels:", (part.labels == DARK).sum(), " bright pixels:", (part.labels == BRIGHT).sum())

# the estimated split should follow the lighting boundary at column 128
print("dark share of the right half: %.3f" % (part.labels[:, 128:] == DARK).mean())

# %%
# Uniformity is 1 when both areas hold the same fraction of the points and
# 0 when one area holds all of them.
for name, fn in (("harris", harris), ("detect_cv", detect_cv)):
    print(name, "uniformity %.3f" % uniformity(fn(img), part))

# %%
# Repeatability needs a second view. Brighten the scene 50x and add a bit of
# fresh noise: the geometry is the same, so the correspondence is identity.
rng = np.random.default_rng(7)
brighter = 50.0 * img * rng.lognormal(0.0, 0.01, img.shape)
for name, fn in (("harris", harris), ("detect_cv", detect_cv)):
    res = repeatability(fn(img), fn(brighter), Correspondence(), eps_px=1.5)
    print(f"{name}: rr={res.rr:.3f} ({res.matched} of min({res.n_ref}, {res.n_test}) matched)")
