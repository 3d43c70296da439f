"""Regenerate the shipped oracle PMF reference table.

Runs the independent extended-precision oracle over the verification
grid and writes src/fracpois/data/oracle_pmf.txt.  Slow (minutes); only
needed when the grid changes.
"""

import pathlib
import time

from fracpois.verify import OracleConfig, write_fixture

GRID_ORDERS = (0.3, 0.5, 0.7, 1.0)
GRID_RATES = (0.5, 1.0, 5.0)
KMAX = 30

records = [
    (alpha, nu, lam, 1.0, k)
    for alpha in GRID_ORDERS
    for nu in GRID_ORDERS
    for lam in GRID_RATES
    for k in range(KMAX + 1)
]

out = (pathlib.Path(__file__).resolve().parent.parent
       / "src" / "fracpois" / "data" / "oracle_pmf.txt")
start = time.time()
write_fixture(out, records, OracleConfig(precision_digits=40),
              meta="grid: alpha,nu in {0.3,0.5,0.7,1.0}; "
                   "lambda in {0.5,1,5}; t=1; k<=30")
print(f"wrote {len(records)} rows to {out} in {time.time() - start:.1f}s")
