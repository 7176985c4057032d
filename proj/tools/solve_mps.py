#!/usr/bin/env python3
"""Solve an exported model with scipy's MILP solver (HiGHS) and write a
solution file that `mtdist compute --backend mps --mps-solution` reads."""

import argparse
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix


def read_mps(path):
    rows, senses, obj_row = {}, [], None
    cols, integer = {}, []
    entries, objective, rhs = [], {}, {}
    upper = {}
    section, in_int = None, False
    with open(path) as f:
        for line in f:
            if line.startswith("*") or not line.strip():
                continue
            if not line[0].isspace():
                section = line.split()[0]
                continue
            fields = line.split()
            if section == "ROWS":
                sense, name = fields
                if sense == "N":
                    obj_row = name
                else:
                    rows[name] = len(senses)
                    senses.append(sense)
            elif section == "COLUMNS":
                if fields[1] == "'MARKER'":
                    in_int = fields[2] == "'INTORG'"
                    continue
                name = fields[0]
                if name not in cols:
                    cols[name] = len(cols)
                    integer.append(in_int)
                for row, value in zip(fields[1::2], fields[2::2]):
                    if row == obj_row:
                        objective[cols[name]] = float(value)
                    else:
                        entries.append((rows[row], cols[name], float(value)))
            elif section == "RHS":
                for row, value in zip(fields[1::2], fields[2::2]):
                    rhs[rows[row]] = float(value)
            elif section == "BOUNDS":
                kind, _, name, value = fields
                if kind != "UP":
                    raise ValueError(f"unsupported bound type {kind}")
                upper[cols[name]] = float(value)
    return rows, senses, cols, integer, entries, objective, rhs, upper


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("model")
    parser.add_argument("solution")
    parser.add_argument("--time-limit", type=float, default=600.0)
    args = parser.parse_args()

    rows, senses, cols, integer, entries, objective, rhs, upper = read_mps(args.model)
    n, m = len(cols), len(senses)
    c = np.zeros(n)
    for j, v in objective.items():
        c[j] = v
    r, k, v = zip(*entries) if entries else ((), (), ())
    a = coo_matrix((v, (r, k)), shape=(m, n)).tocsr()
    b = np.array([rhs.get(i, 0.0) for i in range(m)])
    lo = np.where([s in ("G", "E") for s in senses], b, -np.inf)
    hi = np.where([s in ("L", "E") for s in senses], b, np.inf)
    ub = np.array([upper.get(j, np.inf) for j in range(n)])

    res = milp(c, constraints=LinearConstraint(a, lo, hi), integrality=np.array(integer, dtype=int),
               bounds=Bounds(np.zeros(n), ub), options={"time_limit": args.time_limit})
    if res.x is None:
        print(f"no solution: {res.message}", file=sys.stderr)
        return 2
    with open(args.solution, "w") as out:
        if res.status == 0:
            out.write("# status: optimal\n")
        for name, j in cols.items():
            out.write(f"{name} {int(round(res.x[j]))}\n")
    print(f"objective {res.fun:.12g} ({'optimal' if res.status == 0 else res.message})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
