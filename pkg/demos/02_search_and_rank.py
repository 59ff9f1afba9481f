"""
Searching a fingerprint collection
==================================

A handful of synthetic "molecules" are fingerprinted and indexed; we then
query with one of them and with a noisy copy of it.
"""

import numpy as np

from svmf import FingerprintIndex, reference_catalog, similarity
from svmf import fingerprint_detections
from svmf.synth import PerturbationParams, default_spec, generate_base, perturb

catalog = reference_catalog()
spec = default_spec(catalog)

index = FingerprintIndex(catalog.n)
molecules = {}
for i in range(30):
    dset = generate_base(spec, [2024, i], f"mol{i:02d}")
    molecules[dset.image_key] = dset
    index.add(dset.image_key, fingerprint_detections(dset, catalog))

#%%
# An exact query comes back first with score 0.
query = index["mol07"]
for hit in index.search(query, 5):
    print(f"{hit.rank}  {hit.key}  {hit.score:.4f}")

#%%
# A degraded detection of the same molecule: one instance may vanish,
# labels may flip and boxes wobble.  The target usually stays near the top.
noisy = perturb(molecules["mol07"], PerturbationParams(0.1, 0.1, 0.2, seed=5), spec.class_pool)
noisy_fp = fingerprint_detections(noisy, catalog)
print("score vs clean:", round(similarity(noisy_fp, query), 4))
print("rank of mol07 :", index.rank_of(noisy_fp, "mol07"))

#%%
# Scores across the whole collection
scores = np.array(index.scores(noisy_fp))
print("score quartiles:", np.percentile(scores, [0, 25, 50, 75, 100]).round(3))
