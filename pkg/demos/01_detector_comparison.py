"""
Where do the feature points go?
===============================

A checkerboard whose left half is lit 1000 times brighter than the right
half is about the simplest HDR scene there is. Every square corner is an
equally good corner, so a detector that does not care about illumination
should spread its points evenly over both halves.
"""

# %%
import numpy as np

from detectorcv import detect_cv, dog, dog_hdr, harris, harris_hdr
from detectorcv.image_core import PartitionMap
from detectorcv.evaluation import uniformity
from detectorcv.synthetic import dark_half, hdr_checkerboard

img = hdr_checkerboard(256, 256, ratio=1000.0)
print("dynamic range: %.0f : 1" % (img.max() / img.min()))

# %%
# The "areas" for the uniformity metric are just the two halves here.
labels = np.full(img.shape, 2, dtype=np.int32)
labels[:, 128:] = 1
halves = PartitionMap(labels, 2)

# %%
detectors = {
    "harris": harris,
    "harris_hdr": harris_hdr,
    "dog": dog,
    "dog_hdr": dog_hdr,
    "detect_cv": detect_cv,
}

print(f"{'detector':<12}{'points':>8}{'dark half':>11}{'uniformity':>12}")
for name, fn in detectors.items():
    fps = fn(img)
    n_dark = dark_half(fps, img.shape[1])
    print(f"{name:<12}{len(fps):>8}{n_dark:>11}{uniformity(fps, halves):>12.3f}")

# %%
# The plain detectors rank by absolute gradient (or absolute DoG) strength,
# so the bright half wins every comparison. Dividing by the local mean
# (the CVM stage) removes the illumination factor and the dark half gets
# its share back.
#
# Scaling the whole image does nothing to DetectorCV: every stage after the
# CVM sees the same numbers.
for k in (0.01, 1.0, 1e4):
    print(k, detect_cv(k * img) == detect_cv(img))
