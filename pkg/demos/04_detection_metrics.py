"""
Scoring substructure detection
==============================

Position-free comparison of predicted and ground-truth substructure
multisets.
"""

from svmf import EvalRecord, aggregate_detection_report, substructure_f1

records = [
    EvalRecord("aspirin", {12: 1, 40: 1, 1550: 1}, {12: 1, 40: 1, 1550: 1}),
    EvalRecord("caffeine", {3: 2, 7: 1}, {3: 1, 7: 1}),           # one extra detection
    EvalRecord("limonene", {1548: 1}, {1548: 1, 1534: 1}),          # one miss
    EvalRecord("blank", {}, {}),                                     # nothing to find, nothing found
]

for r in records:
    print(f"{r.molecule_key:<10} S-F1 = {substructure_f1(r.predicted, r.ground_truth):.3f}")

s_f1, m_em = aggregate_detection_report(records)
print(f"\nmacro S-F1 {s_f1:.1f}   M-EM {m_em:.1f}")
