"""End-to-end checks of the srcurv command line: exit codes, and that every
CSV/JSON it emits re-parses with finite numbers."""

import csv
import io
import json
import math
import os
import subprocess
import sys
import tempfile

BIN = sys.argv[1]
DATA = sys.argv[2]
FRAME = os.path.join(DATA, "heisenberg_canonical.frame")
failures = []


def run(*args, expect=0):
    p = subprocess.run([BIN, *args], capture_output=True, text=True)
    if p.returncode != expect:
        failures.append(f"{' '.join(args)}: exit {p.returncode}, expected {expect}\n{p.stderr}")
    return p.stdout


def finite_json(node):
    if isinstance(node, dict):
        return all(finite_json(v) for v in node.values())
    if isinstance(node, list):
        return all(finite_json(v) for v in node)
    if isinstance(node, float):
        return math.isfinite(node)
    return node is not None


def load_csv(text, what):
    rows = list(csv.reader(io.StringIO(text)))
    values = [[float(x) for x in r] for r in rows[1:]]
    if not values or not all(math.isfinite(v) for r in values for v in r):
        failures.append(f"{what}: empty or non-finite CSV")
    return rows[0], values


def load_json(text, what):
    doc = json.loads(text)
    if not finite_json(doc):
        failures.append(f"{what}: non-finite JSON")
    return doc


def expect(cond, what):
    if not cond:
        failures.append(what)


# curvature on the unit sphere: transverse entry is 1
header, rows = load_csv(run("curvature", "--builtin", "sphere", "--p0", "1,0", "--x0", "0,0", "--T", "3.14"), "curvature")
expect(header == ["t", "R_11_11", "R_11_21", "R_21_11", "R_21_21"], f"curvature header {header}")
expect(all(abs(r[4] - 1.0) < 1e-5 and abs(r[1]) < 1e-5 for r in rows), "sphere curvature is not diag(0,1)")

# Young diagram of the Heisenberg geodesic
doc = load_json(run("young", "--builtin", "heisenberg", "--p0", "1,0,1", "--x0", "0,0,0"), "young")
expect(doc["rows"] == [2, 1] and doc["kalman_rank"] == 3, f"heisenberg young {doc.get('rows')}")
expect(set(doc) >= {"rows", "levels", "superboxes", "C1", "C2", "kalman_rank"}, "young keys")

with tempfile.TemporaryDirectory() as tmp:
    zero = os.path.join(tmp, "zero.csv")
    with open(zero, "w") as f:
        f.write("0,0,0\n0,0,0\n0,0,0\n")
    doc = load_json(run("check", "normal", "--curvature", zero, "--young", "2,1"), "check normal")
    expect(doc["verdict"] == "pass", "zero matrix is not normal")

    off = os.path.join(tmp, "off.csv")
    with open(off, "w") as f:
        f.write("0,0,0,0.001\n0,0,0,0\n0,0,0,0\n0.001,0,0,0\n")
    doc = load_json(run("check", "normal", "--curvature", off, "--young", "3,1", expect=2), "check normal fail")
    expect(doc["verdict"] == "fail", "off-pattern entry accepted")

    # curvature CSV feeds back into the normal check
    rcsv = os.path.join(tmp, "r.csv")
    run("curvature", "--builtin", "heisenberg", "--frame", FRAME, "--T", "2", "--out", rcsv)
    doc = load_json(run("check", "normal", "--curvature", rcsv, "--young", "2,1"), "check normal csv")
    expect(doc["verdict"] == "pass" and doc["matrices"] == 21, "heisenberg curvature CSV is not normal")

header, rows = load_csv(run("geodesic", "--builtin", "hyperbolic", "--T", "1", "--samples", "11"), "geodesic")
expect(header == ["t", "x1", "x2", "p1", "p2"], f"geodesic header {header}")
expect(all(abs(r[1] - math.tanh(r[0])) < 1e-8 for r in rows), "hyperbolic geodesic is not x = tanh t")
load_json(run("geodesic", "--builtin", "heisenberg", "--format", "json"), "geodesic json")

doc = load_json(run("jacobi", "--builtin", "sphere", "--T", "4", "--v0", "0,1,0,0", "--format", "json"), "jacobi")
expect(len(doc["conjugate_times"]) == 1 and abs(doc["conjugate_times"][0] - math.pi) < 1e-6, "sphere conjugate time")
load_csv(run("jacobi", "--builtin", "euclidean3"), "jacobi csv")

doc = load_json(run("flag", "--builtin", "heisenberg", "--extension", "oblique"), "flag")
expect(doc["growth_vector"] == [2, 3] and doc["ample"], "heisenberg flag")

for args in (["homogeneity", "--builtin", "sphere", "--T", "2", "--c", "5"],
             ["homogeneity", "--builtin", "heisenberg", "--frame", FRAME],
             ["darboux", "--builtin", "hyperbolic"],
             ["darboux", "--builtin", "heisenberg", "--frame", FRAME],
             ["euler", "--builtin", "sphere", "--T", "6.28"],
             ["ehresmann", "--builtin", "hyperbolic", "--seed", "7"],
             ["ehresmann", "--builtin", "heisenberg", "--frame", FRAME]):
    doc = load_json(run("check", *args), " ".join(args))
    expect(doc["verdict"] == "pass" and {"max_violation", "details"} <= set(doc), f"check {' '.join(args)}")

# usage and input errors exit 1
run("geodesic", "--builtin", "nope", expect=1)
run("geodesic", expect=1)
run("curvature", "--builtin", "heisenberg", expect=1)
run("geodesic", "--builtin", "sphere", "--p0", "1,0,0", expect=1)
run("frobnicate", expect=1)

if failures:
    print("\n".join(failures))
    sys.exit(1)
print("cli smoke: ok")
