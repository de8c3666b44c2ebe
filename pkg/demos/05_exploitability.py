"""
Is there an arms race?
======================

Naive and LOLA learners against naive, LOLA and second-order LOLA
opponents (the last one anticipates that its opponent uses LOLA, which
needs third derivatives of the value). Rows are the first agent's rule.
"""

from lolalab.analysis import EXPLOIT_COLS, EXPLOIT_ROWS, exploit_table

table = exploit_table(seeds=range(5))
print("row \\ col".ljust(10) + "".join(c.value.rjust(20) for c in EXPLOIT_COLS))
for r in EXPLOIT_ROWS:
    cells = "".join(f"({table[(r.value, c.value)][0]:+.2f}, {table[(r.value, c.value)][1]:+.2f})".rjust(20) for c in EXPLOIT_COLS)
    print(r.value.ljust(10) + cells)
