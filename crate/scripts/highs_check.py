"""Solve exported LP files with HiGHS and print status and optimum.

    pip install highspy
    dssbound export --n 3 --k 2 --d 2 --alpha 2 --beta 1 --mode unreduced -o u.lp
    python scripts/highs_check.py u.lp
"""
import sys
import time

import highspy

for path in sys.argv[1:]:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    h.setOptionValue("presolve", "off")
    h.readModel(path)
    start = time.time()
    h.run()
    info = h.getInfo()
    status = h.modelStatusToString(h.getModelStatus())
    print(f"{path}: {status} {info.objective_function_value} ({info.simplex_iteration_count} iterations, {time.time() - start:.1f} s)")
