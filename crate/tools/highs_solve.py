#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write the solution in CBC's text format.

Usage as a polyreach external solver:

    OVERTPOLY_SOLVER_CMD='python3 tools/highs_solve.py {lp} {sol}'
"""
import sys

import highspy


def main(lp_path, sol_path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if h.readModel(lp_path) != highspy.HighsStatus.kOk:
        sys.exit(f"cannot read {lp_path}")
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    lp = h.getLp()
    names = [lp.col_names_[j] for j in range(lp.num_col_)]
    if status == highspy.HighsModelStatus.kOptimal:
        head = "Optimal"
    elif status in (highspy.HighsModelStatus.kInfeasible, highspy.HighsModelStatus.kUnboundedOrInfeasible):
        head = "Infeasible"
    elif status == highspy.HighsModelStatus.kUnbounded:
        head = "Unbounded"
    else:
        head = "Stopped on time"
    with open(sol_path, "w") as out:
        out.write(f"{head} - objective value {info.objective_function_value:.17g}\n")
        if head == "Infeasible":
            return
        values = h.getSolution().col_value
        for j, (name, v) in enumerate(zip(names, values)):
            out.write(f"{j:>7} {name:<24} {v:.17g} 0\n")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: highs_solve.py MODEL.lp SOLUTION.txt")
    main(sys.argv[1], sys.argv[2])
