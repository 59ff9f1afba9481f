"""
From detector boxes to a sparse fingerprint
===========================================

Three substructures are detected on a small depiction: a hydroxyl-like
functional group touching a carbon chain, which in turn touches an amine
further right.  We build the overlap graph and look at the resulting
coefficients.
"""

from svmf import DetectionSet, DetectionInstance, BoundingBox, build_graph, compute_svmf, toy_catalog
from svmf.fingerprint import encode_svmf, dumps_json

# class 0 and 1 are functional groups, class 2 a carbon backbone
catalog = toy_catalog("FFC")

detections = DetectionSet("demo", [
    DetectionInstance(0, 0, BoundingBox(0, 0, 20, 20), 0.97),
    DetectionInstance(1, 2, BoundingBox(21, 2, 61, 18), 0.91),
    DetectionInstance(2, 1, BoundingBox(62, 0, 82, 20), 0.88),
])

#%%
# Boxes are expanded by 10% of the smallest diagonal (20 * sqrt(2) here),
# so the 1 px gaps close and the graph becomes a path 0 - 1 - 2.
graph = build_graph(detections, 0.1)
print("edges:", graph.edges)

#%%
# Diagonal cells count instances (10 each) plus same-class pair terms;
# off-diagonal cells hold pair weights.  Both pairs touching the carbon
# chain are halved, while the functional-group pair 0-2 is one
# substructure apart (distance 1, weight 2).
fp = compute_svmf(graph, catalog)
for (i, j), value in sorted(fp.cells().items()):
    print(f"  ({i}, {j}) = {value}")

#%%
# Storage: only non-zero cells, keyed by their row-major position.
print("json :", dumps_json(fp))
print("bytes:", len(encode_svmf(fp)), "for", len(fp), "entries")
