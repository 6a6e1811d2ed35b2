"""
Completion metrics
==================

Code exact match and edit similarity compare whole completions;
identifier match compares the names they use.
"""

from dualctx.metrics import aggregate, identifier_metrics, score_example

pairs = [
    ("return self.service.validate_user(user.uid, user.token)",
     "return self.service.validate_user(user.uid, user.token)"),
    ("return self.service.validate(user.uid)",
     "return self.service.validate_user(user.uid, user.token)"),
    ("pass", "return self.service.revoke(uid)"),
]

for pred, gt in pairs:
    em, p, r, f1 = identifier_metrics(pred, gt)
    print(f"{pred[:40]:40s}  id P={p:.2f} R={r:.2f} F1={f1:.2f}")

report = aggregate([score_example(str(i), p, g) for i, (p, g) in enumerate(pairs)])
print(report.table())
